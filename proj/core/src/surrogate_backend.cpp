#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "promptfx/embedding.hpp"
#include "promptfx/errors.hpp"
#include "promptfx/fft.hpp"

namespace promptfx {
namespace {

constexpr std::size_t kDim = SurrogateBackend::kDimension;
constexpr double kPowerFloor = 1e-20;

using Vec = std::vector<double>;

Vec centered_unit(Vec v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double& x : v) x -= mean;
  const double n = norm(v);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
  return v;
}

Vec ramp(double sign) {
  Vec v(kDim);
  for (std::size_t b = 0; b < kDim; ++b) v[b] = sign * static_cast<double>(b);
  return centered_unit(std::move(v));
}

// Raised-cosine bump covering bands lo..hi inclusive.
Vec bump(std::size_t lo, std::size_t hi) {
  Vec v(kDim, 0.0);
  const double width = static_cast<double>(hi - lo + 2);
  for (std::size_t b = lo; b <= hi; ++b) {
    v[b] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(b - lo + 1) / width));
  }
  return centered_unit(std::move(v));
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Vec hashed_direction(std::string_view key) {
  std::mt19937_64 rng(fnv1a(key));
  std::normal_distribution<double> normal;
  Vec v(kDim);
  for (double& x : v) x = normal(rng);
  return centered_unit(std::move(v));
}

const std::set<std::string, std::less<>>& filler_words() {
  static const std::set<std::string, std::less<>> words{
      "this", "sound", "sounds", "is",  "it",   "a",  "an", "the",  "and",  "yet",  "but",
      "with", "from",  "like",   "of",  "in",   "to", "as", "by",   "on",   "at",   "be",
      "very", "more",  "make",   "too", "some", "so", "through", "under", "coming", "delivered"};
  return words;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

}  // namespace

SurrogateBackend::SurrogateBackend()
    : descriptor_{"surrogate", kDimension, kSampleRate, 600.0, true},
      frame_len_(static_cast<std::size_t>(std::llround(kFrameSeconds * kSampleRate))),
      fft_len_(next_power_of_two(frame_len_)),
      window_(frame_len_),
      bin_band_(fft_len_ / 2 + 1, -1),
      band_bins_(kDimension, 0.0) {
  for (std::size_t n = 0; n < frame_len_; ++n) {
    window_[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(frame_len_));
  }
  for (std::size_t k = 0; k < bin_band_.size(); ++k) {
    const double f = static_cast<double>(k) * kSampleRate / static_cast<double>(fft_len_);
    if (auto b = band_of(f)) {
      bin_band_[k] = static_cast<int>(*b);
      band_bins_[*b] += 1.0;
    }
  }
  for (double c : band_bins_) {
    if (c == 0.0) throw Error("surrogate: a band has no FFT bins");
  }
}

std::optional<std::size_t> SurrogateBackend::band_of(double freq_hz) const {
  if (!(freq_hz >= kLowEdgeHz && freq_hz < kHighEdgeHz)) return std::nullopt;
  const double pos = std::log(freq_hz / kLowEdgeHz) / std::log(kHighEdgeHz / kLowEdgeHz) * kDimension;
  return std::min(kDimension - 1, static_cast<std::size_t>(pos));
}

std::optional<std::vector<double>> SurrogateBackend::lexicon_prototype(std::string_view word) const {
  // Brightness axis.
  static const std::set<std::string, std::less<>> rising{"bright", "crisp", "light", "clear", "thin", "brilliant"};
  static const std::set<std::string, std::less<>> falling{"muffled", "deep", "dark", "mellow", "soft", "dull"};
  if (rising.contains(word)) return ramp(1.0);
  if (falling.contains(word)) return ramp(-1.0);

  struct Band {
    const char* word;
    std::size_t lo;
    std::size_t hi;
  };
  static constexpr Band bands[] = {
      {"tinny", 20, 28},  {"metallic", 19, 27}, {"shrill", 22, 30}, {"sharp", 18, 26}, {"harsh", 16, 24},
      {"airy", 26, 31},   {"breezy", 25, 31},   {"grainy", 14, 22}, {"nasal", 12, 18}, {"warm", 3, 11},
      {"bassy", 0, 7},    {"boomy", 1, 9},      {"booming", 1, 9},  {"full", 2, 12},   {"heavy", 0, 8},
  };
  for (const auto& b : bands) {
    if (word == b.word) return bump(b.lo, b.hi);
  }
  return std::nullopt;
}

std::vector<double> SurrogateBackend::text_vector(std::string_view text) const {
  Vec sum(kDim, 0.0);
  bool negate = false;
  bool any = false;
  for (const auto& w : tokenize(text)) {
    if (w == "not" || w == "no") {
      negate = !negate;
      continue;
    }
    if (filler_words().contains(w)) continue;
    auto proto = lexicon_prototype(w);
    const Vec v = proto ? std::move(*proto) : hashed_direction(w);
    const double sign = negate ? -1.0 : 1.0;
    for (std::size_t i = 0; i < kDim; ++i) sum[i] += sign * v[i];
    negate = false;
    any = true;
  }
  if (!any || norm(sum) < 1e-9) {
    std::string key;
    for (const auto& w : tokenize(text)) key += w + " ";
    return hashed_direction(key);
  }
  return sum;
}

std::vector<double> SurrogateBackend::audio_vector(std::span<const double> samples) const {
  return audio_linearization(samples).vector;
}

EmbeddingBackend::RawLinearization SurrogateBackend::audio_linearization(std::span<const double> samples) const {
  const std::size_t n = samples.size();
  const std::size_t frames = (n + frame_len_ - 1) / frame_len_;
  const RealFft fft(fft_len_);

  auto spectra = std::make_shared<std::vector<std::vector<Complex>>>();
  spectra->reserve(frames);
  Vec power(kDim, 0.0);
  std::vector<double> seg(frame_len_);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * frame_len_;
    const std::size_t len = std::min(frame_len_, n - start);
    std::fill(seg.begin(), seg.end(), 0.0);
    for (std::size_t i = 0; i < len; ++i) seg[i] = samples[start + i] * window_[i];
    auto spec = fft.forward(seg);
    for (std::size_t k = 0; k < spec.size(); ++k) {
      if (bin_band_[k] >= 0) power[static_cast<std::size_t>(bin_band_[k])] += std::norm(spec[k]);
    }
    spectra->push_back(std::move(spec));
  }
  const double inv_frames = 1.0 / static_cast<double>(frames);
  Vec feature(kDim);
  for (std::size_t b = 0; b < kDim; ++b) {
    power[b] *= inv_frames / band_bins_[b];
    feature[b] = std::log(power[b] + kPowerFloor);
  }
  double mean = 0.0;
  for (double x : feature) mean += x;
  mean /= static_cast<double>(kDim);
  for (double& x : feature) x -= mean;

  auto pullback = [this, spectra, power, n, inv_frames, fft](std::span<const double> grad) {
    // Mean subtraction is an orthogonal projection, so its adjoint is itself.
    double gmean = 0.0;
    for (double g : grad) gmean += g;
    gmean /= static_cast<double>(kDim);
    Vec per_bin(kDim);
    for (std::size_t b = 0; b < kDim; ++b) {
      per_bin[b] = (grad[b] - gmean) / (power[b] + kPowerFloor) * inv_frames / band_bins_[b];
    }

    std::vector<double> out(n, 0.0);
    const double scale = 2.0 * static_cast<double>(fft_len_);
    std::vector<Complex> z(fft_len_ / 2 + 1);
    for (std::size_t f = 0; f < spectra->size(); ++f) {
      const auto& spec = (*spectra)[f];
      for (std::size_t k = 0; k < z.size(); ++k) {
        if (bin_band_[k] < 0) {
          z[k] = 0.0;
          continue;
        }
        // The inverse transform counts interior bins twice.
        const double w = (k == 0 || 2 * k == fft_len_) ? 1.0 : 0.5;
        z[k] = w * per_bin[static_cast<std::size_t>(bin_band_[k])] * spec[k];
      }
      const auto back = fft.inverse(z);
      const std::size_t start = f * frame_len_;
      const std::size_t len = std::min(frame_len_, n - start);
      for (std::size_t i = 0; i < len; ++i) out[start + i] = scale * window_[i] * back[i];
    }
    return out;
  };
  return {std::move(feature), std::move(pullback)};
}

}  // namespace promptfx
