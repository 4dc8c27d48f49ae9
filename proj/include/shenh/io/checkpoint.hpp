#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "shenh/io/tensor_file.hpp"

namespace shenh::io {

struct NamedTensor {
  std::string name;
  TensorRecord tensor;
};

/// Single-file container: "SHCK", u32 version, u64 manifest length, a JSON
/// manifest, then the tensor payloads back to back in manifest order.
struct Checkpoint {
  nlohmann::json config;
  nlohmann::json train_state;
  std::vector<NamedTensor> tensors;

  const TensorRecord& at(const std::string& name) const;
  bool contains(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& what = "checkpoint");

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace shenh::io
