#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace promptfx {

/// Mono signal in the engine's working representation. Samples are nominally
/// in [-1, 1]; values outside that range are kept until encoding.
struct AudioBuffer {
  std::vector<double> samples;
  double sample_rate = 0.0;
  std::optional<std::string> source_path;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_seconds() const noexcept {
    return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Throws InvalidArgument unless the buffer has a positive rate and only finite samples.
void validate(const AudioBuffer& buffer);

enum class BitDepth { pcm16, float32 };

/// Outcome of encoding; samples beyond +-1.0 are clamped, never rejected.
struct EncodeReport {
  std::size_t clipped_samples = 0;
  bool clipped() const noexcept { return clipped_samples > 0; }
};

/// Parses a RIFF/WAVE image (PCM16, PCM24 or float32, any channel count).
/// Multi-channel input is averaged down to mono; the native rate is kept.
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);
AudioBuffer load_audio(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer, BitDepth depth,
                                     EncodeReport* report = nullptr);
EncodeReport save_audio(const AudioBuffer& buffer, const std::filesystem::path& path,
                        BitDepth depth);

/// Band-limited (Kaiser-windowed sinc) sample-rate conversion. Output length is
/// round(len * target / source). Equal rates return the input unchanged.
AudioBuffer resample(const AudioBuffer& buffer, double target_rate);

/// Energy-based signal-to-noise ratio of `test` against `reference`, in dB.
/// Returns +infinity for identical signals.
double snr_db(std::span<const double> reference, std::span<const double> test);

}  // namespace promptfx
