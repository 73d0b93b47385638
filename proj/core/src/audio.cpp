#include "promptfx/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <spdlog/spdlog.h>

#include "promptfx/errors.hpp"

namespace promptfx {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  void seek(std::size_t pos) {
    if (pos > bytes_.size()) throw IoError("wav: truncated file");
    pos_ = pos;
  }

  std::uint32_t u32() { return static_cast<std::uint32_t>(u16()) | (static_cast<std::uint32_t>(u16()) << 16); }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::string tag() {
    need(4);
    std::string t(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return t;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw IoError("wav: truncated file");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct Format {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

double decode_sample(const std::uint8_t* p, const Format& fmt) {
  if (fmt.tag == kFormatFloat) {
    std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    return static_cast<double>(std::bit_cast<float>(bits));
  }
  if (fmt.bits == 16) {
    auto v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
    return static_cast<double>(v) / 32768.0;
  }
  // 24-bit little endian, sign-extended through the top byte.
  std::int32_t v = static_cast<std::int32_t>(p[0]) | (static_cast<std::int32_t>(p[1]) << 8) |
                   (static_cast<std::int32_t>(static_cast<std::int8_t>(p[2])) << 16);
  return static_cast<double>(v) / 8388608.0;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put_u16(out, static_cast<std::uint16_t>(v & 0xFFFF));
  put_u16(out, static_cast<std::uint16_t>(v >> 16));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

void validate(const AudioBuffer& buffer) {
  if (!(buffer.sample_rate > 0.0) || !std::isfinite(buffer.sample_rate)) {
    throw InvalidArgument("audio: sample rate must be positive");
  }
  for (double s : buffer.samples) {
    if (!std::isfinite(s)) throw InvalidArgument("audio: non-finite sample");
  }
}

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (in.remaining() < 12 || in.tag() != "RIFF") throw IoError("wav: missing RIFF header");
  in.u32();
  if (in.tag() != "WAVE") throw IoError("wav: missing WAVE tag");

  std::optional<Format> fmt;
  std::optional<std::span<const std::uint8_t>> data;
  while (in.remaining() >= 8 && !(fmt && data)) {
    const std::string id = in.tag();
    const std::uint32_t size = in.u32();
    const std::size_t body = in.position();
    if (id == "fmt ") {
      if (size < 16) throw IoError("wav: fmt chunk too small");
      Format f;
      f.tag = in.u16();
      f.channels = in.u16();
      f.sample_rate = in.u32();
      in.u32();  // byte rate
      in.u16();  // block align
      f.bits = in.u16();
      if (f.tag == kFormatExtensible) {
        if (size < 40) throw IoError("wav: extensible fmt chunk too small");
        in.u16();  // cbSize
        in.u16();  // valid bits
        in.u32();  // channel mask
        f.tag = in.u16();  // first two bytes of the subformat GUID carry the format code
      }
      fmt = f;
    } else if (id == "data") {
      const std::size_t n = std::min<std::size_t>(size, in.remaining());
      data = in.take(n);
    }
    // Chunks are word aligned.
    in.seek(std::min(bytes.size(), body + size + (size & 1U)));
  }
  if (!fmt) throw IoError("wav: no fmt chunk");
  if (!data) throw IoError("wav: no data chunk");

  const bool pcm = fmt->tag == kFormatPcm && (fmt->bits == 16 || fmt->bits == 24);
  const bool flt = fmt->tag == kFormatFloat && fmt->bits == 32;
  if (!pcm && !flt) {
    throw IoError("wav: unsupported codec (format " + std::to_string(fmt->tag) + ", " +
                  std::to_string(fmt->bits) + " bits)");
  }
  if (fmt->channels == 0) throw IoError("wav: zero channels");
  if (fmt->sample_rate == 0) throw IoError("wav: zero sample rate");

  const std::size_t width = fmt->bits / 8;
  const std::size_t frame = width * fmt->channels;
  const std::size_t frames = data->size() / frame;
  if (frames == 0) throw IoError("wav: zero-length audio");

  AudioBuffer out;
  out.sample_rate = fmt->sample_rate;
  out.samples.resize(frames);
  const std::uint8_t* p = data->data();
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt->channels; ++c) acc += decode_sample(p + i * frame + c * width, *fmt);
    out.samples[i] = acc / fmt->channels;
  }
  for (double s : out.samples) {
    if (!std::isfinite(s)) throw IoError("wav: non-finite sample in float data");
  }
  return out;
}

AudioBuffer load_audio(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (file.bad()) throw IoError("cannot read " + path.string());
  AudioBuffer buf;
  try {
    buf = decode_wav(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  buf.source_path = path.string();
  return buf;
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer, BitDepth depth, EncodeReport* report) {
  validate(buffer);
  const auto rate = static_cast<std::uint32_t>(std::lround(buffer.sample_rate));
  const std::uint16_t bits = depth == BitDepth::pcm16 ? 16 : 32;
  const std::uint16_t block = bits / 8;
  const auto data_bytes = static_cast<std::uint32_t>(buffer.size() * block);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, depth == BitDepth::pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * block);
  put_u16(out, block);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);

  EncodeReport rep;
  for (double s : buffer.samples) {
    double v = s;
    if (v > 1.0 || v < -1.0) {
      ++rep.clipped_samples;
      v = std::clamp(v, -1.0, 1.0);
    }
    if (depth == BitDepth::pcm16) {
      const long q = std::clamp(std::lround(v * 32768.0), -32768L, 32767L);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  if (rep.clipped()) {
    spdlog::warn("audio: clamped {} sample(s) outside [-1, 1]", rep.clipped_samples);
  }
  if (report) *report = rep;
  return out;
}

EncodeReport save_audio(const AudioBuffer& buffer, const std::filesystem::path& path, BitDepth depth) {
  EncodeReport rep;
  const auto bytes = encode_wav(buffer, depth, &rep);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw IoError("cannot write " + path.string());
  return rep;
}

double snr_db(std::span<const double> reference, std::span<const double> test) {
  if (reference.size() != test.size()) throw InvalidArgument("snr: length mismatch");
  double signal = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    signal += reference[i] * reference[i];
    const double d = reference[i] - test[i];
    noise += d * d;
  }
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

}  // namespace promptfx
