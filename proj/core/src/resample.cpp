#include <cmath>
#include <numbers>
#include <vector>

#include "promptfx/audio.hpp"
#include "promptfx/errors.hpp"

namespace promptfx {
namespace {

// Kaiser-windowed sinc, tabulated on [0, kZeroCrossings] at kTableDensity
// points per zero crossing and read back with linear interpolation.
constexpr int kZeroCrossings = 48;
constexpr int kTableDensity = 512;
constexpr double kKaiserBeta = 12.0;
// Passband edge relative to the lower of the two Nyquist frequencies.
constexpr double kRolloff = 0.94;

class SincTable {
 public:
  SincTable() : values_(kZeroCrossings * kTableDensity + 2, 0.0) {
    const double norm = std::cyl_bessel_i(0.0, kKaiserBeta);
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
      const double x = static_cast<double>(i) / kTableDensity;
      const double u = x / kZeroCrossings;
      const double window = u < 1.0 ? std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - u * u)) / norm : 0.0;
      const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      values_[i] = sinc * window;
    }
  }

  double operator()(double x) const {
    x = std::abs(x) * kTableDensity;
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= values_.size()) return 0.0;
    const double frac = x - static_cast<double>(i);
    return values_[i] + frac * (values_[i + 1] - values_[i]);
  }

 private:
  std::vector<double> values_;
};

const SincTable& sinc_table() {
  static const SincTable table;
  return table;
}

}  // namespace

AudioBuffer resample(const AudioBuffer& buffer, double target_rate) {
  if (!(target_rate > 0.0) || !std::isfinite(target_rate)) {
    throw InvalidArgument("resample: target rate must be positive");
  }
  validate(buffer);
  if (target_rate == buffer.sample_rate) return buffer;

  const double ratio = target_rate / buffer.sample_rate;
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(buffer.size()) * ratio));
  const double cutoff = std::min(1.0, ratio) * kRolloff;
  const double half_width = kZeroCrossings / cutoff;
  const auto& table = sinc_table();
  const auto n_in = static_cast<long>(buffer.size());

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.source_path = buffer.source_path;
  out.samples.resize(out_len);
  for (std::size_t n = 0; n < out_len; ++n) {
    const double t = static_cast<double>(n) / ratio;
    const long lo = std::max(0L, static_cast<long>(std::ceil(t - half_width)));
    const long hi = std::min(n_in - 1, static_cast<long>(std::floor(t + half_width)));
    double acc = 0.0;
    for (long k = lo; k <= hi; ++k) {
      acc += buffer.samples[static_cast<std::size_t>(k)] * table(cutoff * (t - static_cast<double>(k)));
    }
    out.samples[n] = cutoff * acc;
  }
  return out;
}

}  // namespace promptfx
