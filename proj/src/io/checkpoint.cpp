#include "shenh/io/checkpoint.hpp"

#include <algorithm>
#include <stdexcept>

#include "bytes.hpp"
#include "shenh/io/atomic_file.hpp"

namespace shenh::io {

namespace {
constexpr char kMagic[4] = {'S', 'H', 'C', 'K'};
}

const TensorRecord& Checkpoint::at(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.tensor;
  }
  throw std::runtime_error("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json manifest;
  manifest["config"] = ckpt.config;
  manifest["train_state"] = ckpt.train_state;
  manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    if (t.tensor.payload.size() != t.tensor.elements() * dtype_size(t.tensor.dtype)) {
      throw std::invalid_argument("checkpoint tensor " + t.name + " has an inconsistent payload");
    }
    manifest["tensors"].push_back({{"name", t.name},
                                   {"shape", t.tensor.dims},
                                   {"dtype", to_string(t.tensor.dtype)},
                                   {"offset", offset},
                                   {"nbytes", t.tensor.payload.size()}});
    offset += t.tensor.payload.size();
  }
  const std::string text = manifest.dump();
  std::string out(kMagic, 4);
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& t : ckpt.tensors) out += t.tensor.payload;
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& what) {
  detail::Reader r(bytes, what);
  if (r.bytes(4) != std::string_view(kMagic, 4)) throw std::runtime_error(what + ": bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw std::runtime_error(what + ": unsupported version " + std::to_string(version));
  }
  const auto len = r.get<std::uint64_t>();
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(r.bytes(len));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(what + ": bad manifest: " + e.what());
  }
  const std::size_t base = r.position();
  Checkpoint ckpt;
  ckpt.config = manifest.at("config");
  ckpt.train_state = manifest.at("train_state");
  static const std::vector<std::string> codes = {"f32", "f64", "c64", "c128"};
  for (const auto& entry : manifest.at("tensors")) {
    NamedTensor t;
    t.name = entry.at("name").get<std::string>();
    t.tensor.dims = entry.at("shape").get<std::vector<std::uint64_t>>();
    const auto dtype = entry.at("dtype").get<std::string>();
    const auto it = std::find(codes.begin(), codes.end(), dtype);
    if (it == codes.end()) throw std::runtime_error(what + ": unknown dtype " + dtype);
    t.tensor.dtype = static_cast<DType>(it - codes.begin());
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const auto nbytes = entry.at("nbytes").get<std::uint64_t>();
    if (nbytes != t.tensor.elements() * dtype_size(t.tensor.dtype)) {
      throw std::runtime_error(what + ": tensor " + t.name + " size disagrees with its shape");
    }
    r.seek(base + offset);
    t.tensor.payload = std::string(r.bytes(nbytes));
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

}  // namespace shenh::io
