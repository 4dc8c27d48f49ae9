#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shenh/tensor.hpp"

namespace shenh::io {

/// On-disk element types. Complex values are interleaved (re, im).
enum class DType : std::uint32_t { f32 = 0, f64 = 1, c64 = 2, c128 = 3 };

std::size_t dtype_size(DType d);
std::string to_string(DType d);

/// N-dimensional tensor with a raw little-endian payload.
struct TensorRecord {
  DType dtype = DType::f32;
  std::vector<std::uint64_t> dims;
  std::string payload;

  std::uint64_t elements() const;
};

inline constexpr std::uint32_t kTensorFileVersion = 1;

std::string encode_tensor(const TensorRecord& record);
TensorRecord decode_tensor(std::string_view bytes, const std::string& what = "tensor file");

void write_tensor_file(const std::filesystem::path& path, const TensorRecord& record);
TensorRecord read_tensor_file(const std::filesystem::path& path);

/// T = float, double, std::complex<float>, std::complex<double>.
template <class T>
TensorRecord make_record(std::vector<std::uint64_t> dims, std::span<const T> values);
template <class T>
std::vector<T> record_values(const TensorRecord& record);

/// Real rank-3 tensors stored as f32.
TensorRecord to_record(const Tensor3<float>& t);
Tensor3<float> to_tensor3(const TensorRecord& record);

}  // namespace shenh::io
