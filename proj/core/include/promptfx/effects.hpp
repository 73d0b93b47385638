#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string_view>
#include <vector>

#include "promptfx/audio.hpp"
#include "promptfx/fft.hpp"
#include "promptfx/params.hpp"

namespace promptfx {

/// Gradient of a scalar objective with respect to an effect's input samples
/// and its mapped (bounded) parameter values.
struct EffectGradient {
  std::vector<double> input;
  std::vector<double> params;
};

using EffectPullback = std::function<EffectGradient(std::span<const double> grad_output)>;

/// Output of a forward pass together with its vector-Jacobian product.
struct EffectLinearization {
  std::vector<double> output;
  EffectPullback pullback;
};

/// A differentiable, time-invariant, length-preserving audio effect driven by
/// mapped parameter values in `specs()` order.
class Effect {
 public:
  virtual ~Effect() = default;

  virtual std::string_view name() const = 0;
  virtual std::span<const ParamSpec> specs() const = 0;
  std::size_t parameter_count() const { return specs().size(); }

  virtual std::vector<double> process(std::span<const double> input, double sample_rate,
                                      std::span<const double> values) const = 0;
  virtual EffectLinearization linearize(std::span<const double> input, double sample_rate,
                                        std::span<const double> values) const = 0;
};

/// Six cascaded second-order sections: low shelf, four peaking bands, high
/// shelf, each with (gain dB, frequency Hz, Q). Applied as a sampled frequency
/// response on a zero-padded FFT grid.
class ParametricEq6 final : public Effect {
 public:
  static constexpr std::size_t kBands = 6;
  static constexpr std::size_t kParamsPerBand = 3;

  ParametricEq6();

  std::string_view name() const override { return "eq"; }
  std::span<const ParamSpec> specs() const override { return specs_; }

  /// Complex response at each frequency (Hz); each must lie in (0, sample_rate / 2).
  std::vector<Complex> response(std::span<const double> values, std::span<const double> freqs_hz,
                                double sample_rate) const;

  std::vector<double> process(std::span<const double> input, double sample_rate,
                              std::span<const double> values) const override;
  EffectLinearization linearize(std::span<const double> input, double sample_rate,
                                std::span<const double> values) const override;

  /// FFT length used to filter `samples` samples.
  static std::size_t fft_size(std::size_t samples);

 private:
  std::vector<Complex> grid_response(std::span<const double> values, std::size_t fft_len,
                                     double sample_rate) const;
  void check_values(std::span<const double> values, double sample_rate) const;

  std::vector<ParamSpec> specs_;
};

/// Reverb whose impulse response is fixed-seed white noise split into 11
/// octave-spaced bands, each with its own gain and exponential T60 decay,
/// summed and energy-normalized, then blended with the dry signal.
/// Parameters: band_gain[0..10], band_t60[0..10], mix.
class NoiseShapedReverb final : public Effect {
 public:
  static constexpr std::size_t kBands = 11;
  static constexpr double kIrSeconds = 5.0;
  static constexpr std::uint64_t kDefaultSeed = 0x5EEDF00DULL;

  explicit NoiseShapedReverb(std::uint64_t noise_seed = kDefaultSeed);

  std::string_view name() const override { return "reverb"; }
  std::span<const ParamSpec> specs() const override { return specs_; }
  std::uint64_t noise_seed() const noexcept { return seed_; }

  /// Crossover frequencies (Hz) between adjacent bands, ascending.
  static std::vector<double> crossover_frequencies();
  /// Band-split masks evaluated at `freq_hz`; they are non-negative and sum to one.
  static std::vector<double> band_masks(double freq_hz);

  /// Energy-normalized impulse response, kIrSeconds long.
  std::vector<double> impulse_response(std::span<const double> values, double sample_rate) const;

  std::vector<double> process(std::span<const double> input, double sample_rate,
                              std::span<const double> values) const override;
  EffectLinearization linearize(std::span<const double> input, double sample_rate,
                                std::span<const double> values) const override;

  struct BandNoise;

 private:
  std::shared_ptr<const BandNoise> band_noise(double sample_rate) const;
  void check_values(std::span<const double> values) const;

  std::uint64_t seed_;
  std::vector<ParamSpec> specs_;
  mutable std::mutex cache_mutex_;
  mutable std::map<double, std::shared_ptr<const BandNoise>> cache_;
};

/// Free-function forms over named parameters.
std::vector<Complex> eq_response(const MappedParams& mapped, std::span<const double> freqs_hz,
                                 double sample_rate);
AudioBuffer render_eq(const AudioBuffer& audio, const MappedParams& mapped);
AudioBuffer render_reverb(const AudioBuffer& audio, const MappedParams& mapped,
                          std::uint64_t noise_seed = NoiseShapedReverb::kDefaultSeed);

}  // namespace promptfx
