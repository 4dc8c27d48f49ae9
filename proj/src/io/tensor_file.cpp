#include "shenh/io/tensor_file.hpp"

#include <algorithm>
#include <stdexcept>

#include "bytes.hpp"
#include "shenh/io/atomic_file.hpp"

namespace shenh::io {

namespace {

constexpr char kMagic[4] = {'S', 'H', 'T', 'F'};

template <class T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::f32; }
template <>
constexpr DType dtype_of<double>() { return DType::f64; }
template <>
constexpr DType dtype_of<std::complex<float>>() { return DType::c64; }
template <>
constexpr DType dtype_of<std::complex<double>>() { return DType::c128; }

void put(std::string& out, float v) { detail::put_f32(out, v); }
void put(std::string& out, double v) { detail::put_f64(out, v); }
template <class R>
void put(std::string& out, std::complex<R> v) {
  put(out, v.real());
  put(out, v.imag());
}

void get(detail::Reader& r, float& v) { v = r.get_f32(); }
void get(detail::Reader& r, double& v) { v = r.get_f64(); }
template <class R>
void get(detail::Reader& r, std::complex<R>& v) {
  R re;
  R im;
  get(r, re);
  get(r, im);
  v = {re, im};
}

}  // namespace

std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::c64: return 8;
    case DType::c128: return 16;
  }
  throw std::invalid_argument("unknown dtype code " + std::to_string(static_cast<unsigned>(d)));
}

std::string to_string(DType d) {
  switch (d) {
    case DType::f32: return "f32";
    case DType::f64: return "f64";
    case DType::c64: return "c64";
    case DType::c128: return "c128";
  }
  return "unknown";
}

std::uint64_t TensorRecord::elements() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string encode_tensor(const TensorRecord& rec) {
  if (rec.payload.size() != rec.elements() * dtype_size(rec.dtype)) {
    throw std::invalid_argument("tensor payload size does not match its dims");
  }
  std::string out(kMagic, 4);
  detail::put_le<std::uint32_t>(out, kTensorFileVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.dtype));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.dims.size()));
  for (auto d : rec.dims) detail::put_le<std::uint64_t>(out, d);
  out += rec.payload;
  return out;
}

TensorRecord decode_tensor(std::string_view bytes, const std::string& what) {
  detail::Reader r(bytes, what);
  if (r.bytes(4) != std::string_view(kMagic, 4)) throw std::runtime_error(what + ": bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kTensorFileVersion) {
    throw std::runtime_error(what + ": unsupported version " + std::to_string(version));
  }
  TensorRecord rec;
  const auto code = r.get<std::uint32_t>();
  if (code > 3) throw std::runtime_error(what + ": unknown dtype code " + std::to_string(code));
  rec.dtype = static_cast<DType>(code);
  const auto ndim = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < ndim; ++i) rec.dims.push_back(r.get<std::uint64_t>());
  const std::uint64_t want = rec.elements() * dtype_size(rec.dtype);
  if (want != r.remaining()) {
    throw std::runtime_error(what + ": payload is " + std::to_string(r.remaining()) +
                             " bytes, dims imply " + std::to_string(want));
  }
  rec.payload = std::string(r.bytes(want));
  return rec;
}

void write_tensor_file(const std::filesystem::path& path, const TensorRecord& record) {
  write_atomic(path, encode_tensor(record));
}

TensorRecord read_tensor_file(const std::filesystem::path& path) {
  return decode_tensor(read_file(path), path.string());
}

template <class T>
TensorRecord make_record(std::vector<std::uint64_t> dims, std::span<const T> values) {
  TensorRecord rec;
  rec.dtype = dtype_of<T>();
  rec.dims = std::move(dims);
  if (rec.elements() != values.size()) throw std::invalid_argument("dims do not match value count");
  rec.payload.reserve(values.size() * sizeof(T));
  for (const T& v : values) put(rec.payload, v);
  return rec;
}

template <class T>
std::vector<T> record_values(const TensorRecord& rec) {
  if (rec.dtype != dtype_of<T>()) {
    throw std::runtime_error("tensor holds " + to_string(rec.dtype) + ", requested " +
                             to_string(dtype_of<T>()));
  }
  detail::Reader r(rec.payload, "tensor payload");
  std::vector<T> out(rec.elements());
  for (auto& v : out) get(r, v);
  return out;
}

template TensorRecord make_record<float>(std::vector<std::uint64_t>, std::span<const float>);
template TensorRecord make_record<double>(std::vector<std::uint64_t>, std::span<const double>);
template TensorRecord make_record<std::complex<float>>(std::vector<std::uint64_t>,
                                                       std::span<const std::complex<float>>);
template TensorRecord make_record<std::complex<double>>(std::vector<std::uint64_t>,
                                                        std::span<const std::complex<double>>);
template std::vector<float> record_values<float>(const TensorRecord&);
template std::vector<double> record_values<double>(const TensorRecord&);
template std::vector<std::complex<float>> record_values<std::complex<float>>(const TensorRecord&);
template std::vector<std::complex<double>> record_values<std::complex<double>>(
    const TensorRecord&);

TensorRecord to_record(const Tensor3<float>& t) {
  return make_record<float>({t.frames(), t.bins(), t.channels()}, t.data());
}

Tensor3<float> to_tensor3(const TensorRecord& rec) {
  if (rec.dims.size() != 3) {
    throw std::runtime_error("expected a rank-3 tensor, got rank " + std::to_string(rec.dims.size()));
  }
  Tensor3<float> t(rec.dims[0], rec.dims[1], rec.dims[2]);
  if (rec.dtype == DType::f32) {
    const auto v = record_values<float>(rec);
    std::copy(v.begin(), v.end(), t.data().begin());
  } else if (rec.dtype == DType::f64) {
    const auto v = record_values<double>(rec);
    std::transform(v.begin(), v.end(), t.data().begin(), [](double x) { return static_cast<float>(x); });
  } else {
    throw std::runtime_error("expected a real tensor, got " + to_string(rec.dtype));
  }
  return t;
}

}  // namespace shenh::io
