#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "jet.hpp"
#include "promptfx/effects.hpp"
#include "promptfx/errors.hpp"

namespace promptfx {
namespace {

using Jet3 = detail::Jet<3>;

enum class BandShape { low_shelf, peaking, high_shelf };

struct BandLayout {
  const char* prefix;
  BandShape shape;
  double freq_min;
  double freq_max;
};

constexpr std::array<BandLayout, ParametricEq6::kBands> kLayout{{
    {"low_shelf", BandShape::low_shelf, 20.0, 450.0},
    {"peak1", BandShape::peaking, 200.0, 2000.0},
    {"peak2", BandShape::peaking, 600.0, 4000.0},
    {"peak3", BandShape::peaking, 1500.0, 8000.0},
    {"peak4", BandShape::peaking, 4000.0, 12000.0},
    {"high_shelf", BandShape::high_shelf, 6000.0, 18000.0},
}};

constexpr double kGainRangeDb = 18.0;
constexpr double kQMin = 0.3;
constexpr double kQMax = 6.0;

// Audio EQ cookbook biquad, coefficients differentiated w.r.t. (gain, freq, Q).
struct Biquad {
  Jet3 b0, b1, b2, a0, a1, a2;
};

Biquad design(BandShape shape, double gain_db, double freq_hz, double q, double sample_rate) {
  const Jet3 gain = Jet3::variable(gain_db, 0);
  const Jet3 freq = Jet3::variable(freq_hz, 1);
  const Jet3 qj = Jet3::variable(q, 2);

  const Jet3 amp = exp(gain * (std::numbers::ln10 / 40.0));
  const Jet3 w0 = freq * (2.0 * std::numbers::pi / sample_rate);
  const Jet3 cw = cos(w0);
  const Jet3 alpha = sin(w0) / (qj * 2.0);

  Biquad c;
  switch (shape) {
    case BandShape::peaking:
      c.b0 = Jet3(1.0) + alpha * amp;
      c.b1 = cw * -2.0;
      c.b2 = Jet3(1.0) - alpha * amp;
      c.a0 = Jet3(1.0) + alpha / amp;
      c.a1 = cw * -2.0;
      c.a2 = Jet3(1.0) - alpha / amp;
      break;
    case BandShape::low_shelf: {
      const Jet3 ap1 = amp + 1.0;
      const Jet3 am1 = amp - 1.0;
      const Jet3 s = sqrt(amp) * alpha * 2.0;
      c.b0 = amp * (ap1 - am1 * cw + s);
      c.b1 = amp * (am1 - ap1 * cw) * 2.0;
      c.b2 = amp * (ap1 - am1 * cw - s);
      c.a0 = ap1 + am1 * cw + s;
      c.a1 = (am1 + ap1 * cw) * -2.0;
      c.a2 = ap1 + am1 * cw - s;
      break;
    }
    case BandShape::high_shelf: {
      const Jet3 ap1 = amp + 1.0;
      const Jet3 am1 = amp - 1.0;
      const Jet3 s = sqrt(amp) * alpha * 2.0;
      c.b0 = amp * (ap1 + am1 * cw + s);
      c.b1 = amp * (am1 + ap1 * cw) * -2.0;
      c.b2 = amp * (ap1 + am1 * cw - s);
      c.a0 = ap1 - am1 * cw + s;
      c.a1 = (am1 - ap1 * cw) * 2.0;
      c.a2 = ap1 - am1 * cw - s;
      break;
    }
  }
  return c;
}

// Plain complex arithmetic; std::complex division carries inf/nan recovery
// paths that dominate the per-bin cost.
inline Complex mul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline Complex div(Complex a, Complex b) {
  const double inv = 1.0 / (b.real() * b.real() + b.imag() * b.imag());
  return {(a.real() * b.real() + a.imag() * b.imag()) * inv, (a.imag() * b.real() - a.real() * b.imag()) * inv};
}

inline Complex poly(double c0, double c1, double c2, Complex z1, Complex z2) {
  return {c0 + c1 * z1.real() + c2 * z2.real(), c1 * z1.imag() + c2 * z2.imag()};
}

// H(e^{jw}) = (b0 + b1 z^-1 + b2 z^-2) / (a0 + a1 z^-1 + a2 z^-2)
inline Complex section_value(const Biquad& c, Complex z1, Complex z2) {
  return div(poly(c.b0.v, c.b1.v, c.b2.v, z1, z2), poly(c.a0.v, c.a1.v, c.a2.v, z1, z2));
}

// e^{-j 2 pi k / len} for k = 0..len/2, shared across calls.
std::shared_ptr<const std::vector<Complex>> unit_phasors(std::size_t len) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const std::vector<Complex>>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[len];
  if (!slot) {
    auto z = std::make_shared<std::vector<Complex>>(len / 2 + 1);
    for (std::size_t k = 0; k < z->size(); ++k) {
      (*z)[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len));
    }
    slot = std::move(z);
  }
  return slot;
}

std::array<Biquad, ParametricEq6::kBands> design_all(std::span<const double> values, double sample_rate) {
  std::array<Biquad, ParametricEq6::kBands> sections;
  for (std::size_t b = 0; b < ParametricEq6::kBands; ++b) {
    const auto* v = values.data() + b * ParametricEq6::kParamsPerBand;
    sections[b] = design(kLayout[b].shape, v[0], v[1], v[2], sample_rate);
  }
  return sections;
}

// Weight of bin k in the real inverse transform: interior bins appear twice.
double bin_weight(std::size_t k, std::size_t fft_len) { return (k == 0 || 2 * k == fft_len) ? 1.0 : 2.0; }

}  // namespace

ParametricEq6::ParametricEq6() {
  for (const auto& band : kLayout) {
    const std::string p = band.prefix;
    specs_.push_back({p + "_gain_db", "dB", -kGainRangeDb, kGainRangeDb, Scale::linear});
    specs_.push_back({p + "_freq_hz", "Hz", band.freq_min, band.freq_max, Scale::logarithmic});
    specs_.push_back({p + "_q", "ratio", kQMin, kQMax, Scale::logarithmic});
  }
}

void ParametricEq6::check_values(std::span<const double> values, double sample_rate) const {
  if (values.size() != specs_.size()) {
    throw InvalidArgument("eq: expected " + std::to_string(specs_.size()) + " values, got " +
                          std::to_string(values.size()));
  }
  if (!(sample_rate > 0.0)) throw InvalidArgument("eq: sample rate must be positive");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < specs_[i].min || values[i] > specs_[i].max) {
      throw InvalidArgument("eq: " + specs_[i].name + " outside [" + std::to_string(specs_[i].min) + ", " +
                            std::to_string(specs_[i].max) + "]");
    }
  }
  for (std::size_t b = 0; b < kBands; ++b) {
    if (values[b * kParamsPerBand + 1] >= 0.5 * sample_rate) {
      throw InvalidArgument("eq: " + specs_[b * kParamsPerBand + 1].name + " is not below Nyquist at " +
                            std::to_string(sample_rate) + " Hz");
    }
  }
}

std::vector<Complex> ParametricEq6::response(std::span<const double> values, std::span<const double> freqs_hz,
                                             double sample_rate) const {
  check_values(values, sample_rate);
  const auto sections = design_all(values, sample_rate);
  std::vector<Complex> out;
  out.reserve(freqs_hz.size());
  for (double f : freqs_hz) {
    if (!(f > 0.0 && f < 0.5 * sample_rate)) {
      throw InvalidArgument("eq_response: frequency " + std::to_string(f) + " Hz outside (0, Nyquist)");
    }
    const Complex z1 = std::polar(1.0, -2.0 * std::numbers::pi * f / sample_rate);
    const Complex z2 = mul(z1, z1);
    Complex h(1.0, 0.0);
    for (const auto& sec : sections) h = mul(h, section_value(sec, z1, z2));
    out.push_back(h);
  }
  return out;
}

std::size_t ParametricEq6::fft_size(std::size_t samples) {
  // Room for the sections' decaying tails before circular wrap-around.
  return next_power_of_two(std::max<std::size_t>(2 * samples, 16384));
}

std::vector<Complex> ParametricEq6::grid_response(std::span<const double> values, std::size_t fft_len,
                                                  double sample_rate) const {
  const auto sections = design_all(values, sample_rate);
  const auto z = unit_phasors(fft_len);
  std::vector<Complex> h(fft_len / 2 + 1);
  for (std::size_t k = 0; k < h.size(); ++k) {
    const Complex z1 = (*z)[k];
    const Complex z2 = mul(z1, z1);
    Complex v(1.0, 0.0);
    for (const auto& sec : sections) v = mul(v, section_value(sec, z1, z2));
    h[k] = v;
  }
  return h;
}

std::vector<double> ParametricEq6::process(std::span<const double> input, double sample_rate,
                                           std::span<const double> values) const {
  return linearize(input, sample_rate, values).output;
}

EffectLinearization ParametricEq6::linearize(std::span<const double> input, double sample_rate,
                                             std::span<const double> values) const {
  check_values(values, sample_rate);
  const std::size_t n = input.size();
  if (n == 0) return {{}, [](std::span<const double>) { return EffectGradient{}; }};

  const std::size_t len = fft_size(n);
  const RealFft fft(len);
  auto spectrum = std::make_shared<const std::vector<Complex>>(fft.forward(input));
  auto h = std::make_shared<const std::vector<Complex>>(grid_response(values, len, sample_rate));

  std::vector<Complex> y(h->size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = (*spectrum)[k] * (*h)[k];
  auto out = fft.inverse(y);
  out.resize(n);

  std::vector<double> vals(values.begin(), values.end());
  auto pullback = [fft, spectrum, h, vals, n, len, sample_rate](std::span<const double> grad_out) {
    if (grad_out.size() != n) throw InvalidArgument("eq: gradient length mismatch");
    const auto d = fft.forward(grad_out);

    EffectGradient g;
    std::vector<Complex> dx(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) dx[k] = std::conj((*h)[k]) * d[k];
    g.input = fft.inverse(dx);
    g.input.resize(n);

    // dL/dH_k as a complex number (real part: d/dRe, imaginary part: d/dIm).
    // dH/dp for a parameter of band b is (product of the other bands) times
    // (dnum - H_b dden) / den.
    const auto sections = design_all(vals, sample_rate);
    const auto z = unit_phasors(len);
    std::array<double, kBands * kParamsPerBand> acc{};
    const double inv_len = 1.0 / static_cast<double>(len);
    for (std::size_t k = 0; k < d.size(); ++k) {
      const Complex gk = (bin_weight(k, len) * inv_len) * mul(std::conj((*spectrum)[k]), d[k]);
      const Complex z1 = (*z)[k];
      const Complex z2 = mul(z1, z1);
      std::array<Complex, kBands> value;
      std::array<Complex, kBands> den;
      for (std::size_t b = 0; b < kBands; ++b) {
        const auto& c = sections[b];
        den[b] = poly(c.a0.v, c.a1.v, c.a2.v, z1, z2);
        value[b] = div(poly(c.b0.v, c.b1.v, c.b2.v, z1, z2), den[b]);
      }
      std::array<Complex, kBands + 1> prefix;
      std::array<Complex, kBands + 1> suffix;
      prefix[0] = suffix[kBands] = Complex(1.0, 0.0);
      for (std::size_t b = 0; b < kBands; ++b) prefix[b + 1] = mul(prefix[b], value[b]);
      for (std::size_t b = kBands; b-- > 0;) suffix[b] = mul(suffix[b + 1], value[b]);
      for (std::size_t b = 0; b < kBands; ++b) {
        const auto& c = sections[b];
        // Fold the conjugated upstream weight into the common factor once.
        const Complex common = div(mul(prefix[b], suffix[b + 1]), den[b]);
        const Complex w = mul(std::conj(gk), common);
        for (std::size_t i = 0; i < kParamsPerBand; ++i) {
          const Complex dnum = poly(c.b0.d[i], c.b1.d[i], c.b2.d[i], z1, z2);
          const Complex dden = poly(c.a0.d[i], c.a1.d[i], c.a2.d[i], z1, z2);
          const Complex t = dnum - mul(value[b], dden);
          // Re(conj(gk) * dh)
          acc[b * kParamsPerBand + i] += w.real() * t.real() - w.imag() * t.imag();
        }
      }
    }
    g.params.assign(acc.begin(), acc.end());
    return g;
  };
  return {std::move(out), std::move(pullback)};
}

std::vector<Complex> eq_response(const MappedParams& mapped, std::span<const double> freqs_hz, double sample_rate) {
  return ParametricEq6().response(mapped.values(), freqs_hz, sample_rate);
}

AudioBuffer render_eq(const AudioBuffer& audio, const MappedParams& mapped) {
  validate(audio);
  AudioBuffer out = audio;
  out.samples = ParametricEq6().process(audio.samples, audio.sample_rate, mapped.values());
  return out;
}

}  // namespace promptfx
