#include "shenh/io/wav.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bytes.hpp"
#include "shenh/io/atomic_file.hpp"

namespace shenh::io {

using detail::Reader;

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

MultichannelSignal decode_wav(std::string_view bytes, const std::string& what,
                              double expected_rate) {
  Reader r(bytes, what);
  if (r.bytes(4) != "RIFF") throw std::runtime_error(what + ": not a RIFF file");
  r.get<std::uint32_t>();
  if (r.bytes(4) != "WAVE") throw std::runtime_error(what + ": not a WAVE file");

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  while (r.remaining() >= 8) {
    const std::string id(r.bytes(4));
    const auto size = r.get<std::uint32_t>();
    const std::size_t start = r.position();
    if (id == "fmt ") {
      format = r.get<std::uint16_t>();
      channels = r.get<std::uint16_t>();
      rate = r.get<std::uint32_t>();
      r.get<std::uint32_t>();
      r.get<std::uint16_t>();
      bits = r.get<std::uint16_t>();
      if (format == kFormatExtensible && size >= 40) {
        r.get<std::uint16_t>();
        r.get<std::uint16_t>();
        r.get<std::uint32_t>();
        format = r.get<std::uint16_t>();
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw std::runtime_error(what + ": data chunk before fmt chunk");
      if (channels == 0) throw std::runtime_error(what + ": zero channels");
      if (expected_rate > 0.0 && static_cast<double>(rate) != expected_rate) {
        throw std::runtime_error(what + ": sample rate " + std::to_string(rate) + " Hz, expected " +
                                 std::to_string(static_cast<long>(expected_rate)) + " Hz");
      }
      const bool pcm16 = format == kFormatPcm && bits == 16;
      const bool f32 = format == kFormatFloat && bits == 32;
      if (!pcm16 && !f32) {
        throw std::runtime_error(what + ": unsupported encoding (format " + std::to_string(format) +
                                 ", " + std::to_string(bits) + " bits)");
      }
      const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
      // Streaming writers leave the size at 0xFFFFFFFF; anything else must fit.
      if (size != 0xFFFFFFFFu && size > r.remaining()) {
        throw std::runtime_error(what + ": data chunk truncated (" + std::to_string(r.remaining()) +
                                 " of " + std::to_string(size) + " bytes)");
      }
      const std::size_t avail = std::min<std::size_t>(size, r.remaining());
      const std::size_t frames = avail / frame_bytes;
      MultichannelSignal out(channels, frames, static_cast<double>(rate));
      for (std::size_t s = 0; s < frames; ++s) {
        for (std::size_t c = 0; c < channels; ++c) {
          out.at(c, s) = pcm16 ? static_cast<double>(r.get<std::int16_t>()) / 32768.0
                               : static_cast<double>(r.get_f32());
        }
      }
      return out;
    }
    r.seek(start + size + (size & 1));
  }
  throw std::runtime_error(what + ": no data chunk");
}

MultichannelSignal read_wav(const std::filesystem::path& path, double expected_rate) {
  return decode_wav(read_file(path), path.string(), expected_rate);
}

std::string encode_wav(const MultichannelSignal& signal, WavFormat format) {
  using detail::put_le;
  const bool pcm = format == WavFormat::pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const auto channels = static_cast<std::uint16_t>(signal.channels());
  const auto rate = static_cast<std::uint32_t>(std::lround(signal.sample_rate()));
  const std::uint32_t block = channels * (bits / 8);
  const auto data_bytes = static_cast<std::uint32_t>(signal.samples() * block);

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_le<std::uint32_t>(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, pcm ? kFormatPcm : kFormatFloat);
  put_le<std::uint16_t>(out, channels);
  put_le<std::uint32_t>(out, rate);
  put_le<std::uint32_t>(out, rate * block);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(block));
  put_le<std::uint16_t>(out, bits);
  out += "data";
  put_le<std::uint32_t>(out, data_bytes);
  for (std::size_t s = 0; s < signal.samples(); ++s) {
    for (std::size_t c = 0; c < signal.channels(); ++c) {
      const double v = signal.at(c, s);
      if (pcm) {
        const double q = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        put_le<std::int16_t>(out, static_cast<std::int16_t>(q));
      } else {
        detail::put_f32(out, static_cast<float>(v));
      }
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const MultichannelSignal& signal,
               WavFormat format) {
  if (signal.channels() == 0 || signal.channels() > 0xFFFF) {
    throw std::invalid_argument("cannot write a WAV with " + std::to_string(signal.channels()) +
                                " channels");
  }
  write_atomic(path, encode_wav(signal, format));
}

}  // namespace shenh::io
