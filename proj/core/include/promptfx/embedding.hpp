#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptfx/audio.hpp"

namespace promptfx {

enum class Modality { text, audio };

/// Unit-norm vector in a joint text-audio space.
struct Embedding {
  std::vector<double> values;
  Modality modality = Modality::text;

  std::size_t dimension() const noexcept { return values.size(); }
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

struct BackendDescriptor {
  std::string name;
  std::size_t dimension = 0;
  double input_sample_rate = 0.0;
  double max_input_seconds = 0.0;
  bool differentiable_audio = false;
};

/// Audio embedding plus the vector-Jacobian product back to the samples of
/// the buffer that was passed in (before any cropping).
struct AudioEmbeddingLinearization {
  Embedding embedding;
  std::function<std::vector<double>(std::span<const double> grad_embedding)> pullback;
};

/// A joint text-audio embedding model. The public methods enforce the shared
/// contract (non-empty input, backend sample rate, center crop to the maximum
/// duration, unit-norm output); implementations supply unnormalized vectors.
/// Instances are immutable after construction and safe to share across threads.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;

  Embedding embed_text(std::string_view text) const;
  Embedding embed_audio(const AudioBuffer& audio) const;
  AudioEmbeddingLinearization linearize_audio(const AudioBuffer& audio) const;

 protected:
  struct RawLinearization {
    std::vector<double> vector;
    std::function<std::vector<double>(std::span<const double>)> pullback;
  };

  virtual std::vector<double> text_vector(std::string_view text) const = 0;
  virtual std::vector<double> audio_vector(std::span<const double> samples) const = 0;
  virtual RawLinearization audio_linearization(std::span<const double> samples) const = 0;

 private:
  std::span<const double> checked_window(const AudioBuffer& audio, std::size_t& offset) const;
};

/// Deterministic, dependency-free backend for tests and offline runs.
///
/// Audio: Hann-windowed, non-overlapping 50 ms frames; power per FFT bin is
/// averaged inside each of 32 log-spaced bands (200 Hz to 20 kHz) and over
/// frames; the band log-powers are mean-subtracted and unit-normalized. The
/// mean subtraction removes overall gain, and appended silence only rescales
/// every band equally.
///
/// Text: lower-cased words are looked up in a small lexicon of band-shape
/// prototypes (e.g. "bright" is a rising ramp over band index, "muffled" the
/// falling ramp, "tinny" a bump over bands 20-28); "not" negates the next
/// word; filler words are skipped; unknown words map to a hash-seeded random
/// direction. The word vectors are summed.
class SurrogateBackend final : public EmbeddingBackend {
 public:
  static constexpr std::size_t kDimension = 32;
  static constexpr double kSampleRate = 48000.0;
  static constexpr double kFrameSeconds = 0.05;
  static constexpr double kLowEdgeHz = 200.0;
  static constexpr double kHighEdgeHz = 20000.0;

  SurrogateBackend();

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  /// Band index (0..31) covering `freq_hz`, or nullopt outside the band range.
  std::optional<std::size_t> band_of(double freq_hz) const;
  std::size_t frame_length() const noexcept { return frame_len_; }
  /// Prototype for a single lexicon word; nullopt for unknown words.
  std::optional<std::vector<double>> lexicon_prototype(std::string_view word) const;

 protected:
  std::vector<double> text_vector(std::string_view text) const override;
  std::vector<double> audio_vector(std::span<const double> samples) const override;
  RawLinearization audio_linearization(std::span<const double> samples) const override;

 private:
  BackendDescriptor descriptor_;
  std::size_t frame_len_;
  std::size_t fft_len_;
  std::vector<double> window_;
  std::vector<int> bin_band_;  // band per FFT bin, -1 outside
  std::vector<double> band_bins_;
};

/// Adapter to a pretrained joint text-audio model (CLAP-style) served by a
/// helper process speaking line-delimited JSON on stdin/stdout:
///   {"op":"describe"}                      -> {"name","dimension","sample_rate","max_seconds"}
///   {"op":"text","text":s}                 -> {"embedding":[...]}
///   {"op":"audio","samples":[...]}         -> {"embedding":[...]}
///   {"op":"audio_vjp","samples":[...],"grad":[...]} -> {"grad_samples":[...]}
/// The bundled helper is tools/clap_bridge.py.
class BridgeBackend final : public EmbeddingBackend {
 public:
  struct Options {
    std::vector<std::string> command;  // argv of the helper process
  };

  explicit BridgeBackend(Options options);
  ~BridgeBackend() override;
  BridgeBackend(const BridgeBackend&) = delete;
  BridgeBackend& operator=(const BridgeBackend&) = delete;

  const BackendDescriptor& descriptor() const override { return descriptor_; }

 protected:
  std::vector<double> text_vector(std::string_view text) const override;
  std::vector<double> audio_vector(std::span<const double> samples) const override;
  RawLinearization audio_linearization(std::span<const double> samples) const override;

 private:
  std::string call(const std::string& request) const;

  BackendDescriptor descriptor_;
  int to_child_ = -1;
  int from_child_ = -1;
  int pid_ = -1;
  mutable std::mutex mutex_;
  mutable std::string pending_;
};

/// Environment variables consulted by make_backend("pretrained").
inline constexpr const char* kCheckpointEnv = "PROMPTFX_CLAP_CHECKPOINT";
inline constexpr const char* kBridgeEnv = "PROMPTFX_CLAP_BRIDGE";
inline constexpr const char* kPythonEnv = "PROMPTFX_PYTHON";

struct BackendOptions {
  /// Checkpoint directory for the pretrained backend; falls back to $PROMPTFX_CLAP_CHECKPOINT.
  std::optional<std::filesystem::path> checkpoint;
};

/// "surrogate" or "pretrained". Throws BackendError when the pretrained
/// backend has no checkpoint configured or its helper cannot start.
std::shared_ptr<const EmbeddingBackend> make_backend(std::string_view name, const BackendOptions& options = {});

}  // namespace promptfx
