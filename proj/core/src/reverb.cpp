#include <cmath>
#include <numbers>
#include <random>

#include "promptfx/effects.hpp"
#include "promptfx/errors.hpp"

namespace promptfx {

struct NoiseShapedReverb::BandNoise {
  std::size_t length = 0;
  std::vector<std::vector<double>> bands;
};

namespace {

constexpr double kTopCrossoverHz = 18000.0;
// Raised-cosine transition width around each crossover, in octaves.
constexpr double kTransitionOctaves = 0.5;
constexpr double kT60Min = 0.1;
constexpr double kT60Max = 4.0;
// Guards the energy normalization when every band gain is zero.
constexpr double kEnergyFloor = 1e-30;

double decay_rate(double t60, double sample_rate) { return std::log(1000.0) / (t60 * sample_rate); }

double step_up(double freq_hz, double crossover_hz) {
  if (freq_hz <= 0.0) return 0.0;
  const double x = std::log2(freq_hz / crossover_hz) / kTransitionOctaves + 0.5;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * x));
}

}  // namespace

NoiseShapedReverb::NoiseShapedReverb(std::uint64_t noise_seed) : seed_(noise_seed) {
  for (std::size_t b = 0; b < kBands; ++b) {
    specs_.push_back({"band" + std::to_string(b) + "_gain", "ratio", 0.0, 1.0, Scale::linear});
  }
  for (std::size_t b = 0; b < kBands; ++b) {
    specs_.push_back({"band" + std::to_string(b) + "_t60", "seconds", kT60Min, kT60Max, Scale::logarithmic});
  }
  specs_.push_back({"mix", "ratio", 0.0, 1.0, Scale::linear});
}

std::vector<double> NoiseShapedReverb::crossover_frequencies() {
  std::vector<double> f(kBands - 1);
  for (std::size_t j = 0; j < f.size(); ++j) {
    f[j] = kTopCrossoverHz / std::exp2(static_cast<double>(f.size() - 1 - j));
  }
  return f;
}

std::vector<double> NoiseShapedReverb::band_masks(double freq_hz) {
  static const auto crossovers = crossover_frequencies();
  std::vector<double> m(kBands);
  // Adjacent step functions telescope, so the masks sum to one.
  double prev_step = 1.0;
  for (std::size_t b = 0; b + 1 < kBands; ++b) {
    const double s = step_up(freq_hz, crossovers[b]);
    m[b] = prev_step - s;
    prev_step = s;
  }
  m[kBands - 1] = prev_step;
  return m;
}

std::shared_ptr<const NoiseShapedReverb::BandNoise> NoiseShapedReverb::band_noise(double sample_rate) const {
  std::lock_guard lock(cache_mutex_);
  if (auto it = cache_.find(sample_rate); it != cache_.end()) return it->second;

  auto noise = std::make_shared<BandNoise>();
  noise->length = static_cast<std::size_t>(std::llround(kIrSeconds * sample_rate));
  std::mt19937_64 rng(seed_);
  std::normal_distribution<double> normal;
  std::vector<double> white(noise->length);
  for (double& v : white) v = normal(rng);

  const RealFft fft(noise->length);
  const auto spectrum = fft.forward(white);
  noise->bands.resize(kBands);
  std::vector<std::vector<double>> masks(spectrum.size());
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    masks[k] = band_masks(static_cast<double>(k) * sample_rate / static_cast<double>(noise->length));
  }
  for (std::size_t b = 0; b < kBands; ++b) {
    std::vector<Complex> shaped(spectrum.size());
    for (std::size_t k = 0; k < spectrum.size(); ++k) shaped[k] = spectrum[k] * masks[k][b];
    noise->bands[b] = fft.inverse(shaped);
  }
  cache_.emplace(sample_rate, noise);
  return noise;
}

void NoiseShapedReverb::check_values(std::span<const double> values) const {
  if (values.size() != specs_.size()) {
    throw InvalidArgument("reverb: expected " + std::to_string(specs_.size()) + " values, got " +
                          std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < specs_[i].min || values[i] > specs_[i].max) {
      throw InvalidArgument("reverb: " + specs_[i].name + " outside [" + std::to_string(specs_[i].min) + ", " +
                            std::to_string(specs_[i].max) + "]");
    }
  }
}

namespace {

// Unnormalized IR: sum over bands of gain * band noise * exp(-ln(1000) t / T60).
std::vector<double> shaped_sum(const NoiseShapedReverb::BandNoise& noise, std::span<const double> values,
                               double sample_rate) {
  constexpr std::size_t nb = NoiseShapedReverb::kBands;
  std::vector<double> r(noise.length, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    const double gain = values[b];
    if (gain == 0.0) continue;
    const double q = std::exp(-decay_rate(values[nb + b], sample_rate));
    double env = 1.0;
    const auto& band = noise.bands[b];
    for (std::size_t t = 0; t < noise.length; ++t) {
      r[t] += gain * band[t] * env;
      env *= q;
    }
  }
  return r;
}

double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

}  // namespace

std::vector<double> NoiseShapedReverb::impulse_response(std::span<const double> values, double sample_rate) const {
  check_values(values);
  if (!(sample_rate > 0.0)) throw InvalidArgument("reverb: sample rate must be positive");
  auto r = shaped_sum(*band_noise(sample_rate), values, sample_rate);
  const double scale = 1.0 / std::sqrt(energy(r) + kEnergyFloor);
  for (double& v : r) v *= scale;
  return r;
}

std::vector<double> NoiseShapedReverb::process(std::span<const double> input, double sample_rate,
                                               std::span<const double> values) const {
  return linearize(input, sample_rate, values).output;
}

EffectLinearization NoiseShapedReverb::linearize(std::span<const double> input, double sample_rate,
                                                 std::span<const double> values) const {
  check_values(values);
  if (!(sample_rate > 0.0)) throw InvalidArgument("reverb: sample rate must be positive");
  const std::size_t n = input.size();
  if (n == 0) return {{}, [](std::span<const double>) { return EffectGradient{}; }};

  const double mix = values[2 * kBands];
  auto noise = band_noise(sample_rate);
  const std::size_t ir_len = noise->length;

  auto r = std::make_shared<std::vector<double>>(shaped_sum(*noise, values, sample_rate));
  const double scale = 1.0 / std::sqrt(energy(*r) + kEnergyFloor);
  std::vector<double> h(ir_len);
  for (std::size_t t = 0; t < ir_len; ++t) h[t] = (*r)[t] * scale;

  const std::size_t len = next_power_of_two(n + ir_len);
  const RealFft fft(len);
  auto x_spec = std::make_shared<const std::vector<Complex>>(fft.forward(input));
  auto h_spec = std::make_shared<const std::vector<Complex>>(fft.forward(h));
  std::vector<Complex> prod(x_spec->size());
  for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = (*x_spec)[k] * (*h_spec)[k];
  auto wet = std::make_shared<std::vector<double>>(fft.inverse(prod));
  wet->resize(n);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (1.0 - mix) * input[i] + mix * (*wet)[i];

  auto dry = std::make_shared<const std::vector<double>>(input.begin(), input.end());
  std::vector<double> vals(values.begin(), values.end());
  auto pullback = [fft, noise, r, scale, x_spec, h_spec, wet, dry, vals, n, ir_len,
                   sample_rate](std::span<const double> grad_out) {
    if (grad_out.size() != n) throw InvalidArgument("reverb: gradient length mismatch");
    const double mix = vals[2 * kBands];
    const auto d = fft.forward(grad_out);

    EffectGradient g;
    g.params.assign(vals.size(), 0.0);

    std::vector<Complex> tmp(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) tmp[k] = d[k] * std::conj((*h_spec)[k]);
    g.input = fft.inverse(tmp);
    g.input.resize(n);
    double dmix = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g.input[i] = (1.0 - mix) * grad_out[i] + mix * g.input[i];
      dmix += ((*wet)[i] - (*dry)[i]) * grad_out[i];
    }
    g.params[2 * kBands] = dmix;

    // dL/dh: cross-correlation of the output gradient with the dry input.
    for (std::size_t k = 0; k < d.size(); ++k) tmp[k] = d[k] * std::conj((*x_spec)[k]);
    auto dh = fft.inverse(tmp);
    dh.resize(ir_len);
    double dh_dot_r = 0.0;
    for (std::size_t t = 0; t < ir_len; ++t) {
      dh[t] *= mix;
      dh_dot_r += dh[t] * (*r)[t];
    }
    // Through h = r / sqrt(E + floor).
    const double k3 = dh_dot_r * scale * scale * scale;
    std::vector<double> dr(ir_len);
    for (std::size_t t = 0; t < ir_len; ++t) dr[t] = scale * dh[t] - k3 * (*r)[t];

    for (std::size_t b = 0; b < kBands; ++b) {
      const double gain = vals[b];
      const double t60 = vals[kBands + b];
      const double rate = decay_rate(t60, sample_rate);
      const double q = std::exp(-rate);
      const auto& band = noise->bands[b];
      double env = 1.0;
      double dgain = 0.0;
      double dt60 = 0.0;
      for (std::size_t t = 0; t < ir_len; ++t) {
        const double term = dr[t] * band[t] * env;
        dgain += term;
        dt60 += term * static_cast<double>(t);
        env *= q;
      }
      g.params[b] = dgain;
      // d/dT60 exp(-c t / T60) = exp(...) * c t / T60^2, with c t = rate * T60 * t.
      g.params[kBands + b] = gain * dt60 * rate / t60;
    }
    return g;
  };
  return {std::move(out), std::move(pullback)};
}

AudioBuffer render_reverb(const AudioBuffer& audio, const MappedParams& mapped, std::uint64_t noise_seed) {
  validate(audio);
  AudioBuffer out = audio;
  out.samples = NoiseShapedReverb(noise_seed).process(audio.samples, audio.sample_rate, mapped.values());
  return out;
}

}  // namespace promptfx
