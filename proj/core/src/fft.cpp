#include "promptfx/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

#include "promptfx/errors.hpp"

namespace promptfx {
namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// FFTW planning is not thread-safe; execution with the new-array interface is.
// Plans live for the whole process.
PlanPair plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  const int len = static_cast<int>(n);
  auto* real = fftw_alloc_real(n);
  auto* spec = fftw_alloc_complex(n / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p{fftw_plan_dft_r2c_1d(len, real, spec, flags), fftw_plan_dft_c2r_1d(len, spec, real, flags)};
  fftw_free(real);
  fftw_free(spec);
  if (!p.forward || !p.inverse) throw Error("fft: planning failed for size " + std::to_string(n));
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
  if (size < 2) throw InvalidArgument("fft: size must be at least 2");
  const auto p = plans_for(size);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

std::vector<Complex> RealFft::forward(std::span<const double> input) const {
  std::vector<double> buf(size_, 0.0);
  std::copy_n(input.begin(), std::min(input.size(), size_), buf.begin());
  std::vector<Complex> out(bins());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), buf.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> RealFft::inverse(std::span<const Complex> spectrum) const {
  if (spectrum.size() != bins()) throw InvalidArgument("fft: spectrum length mismatch");
  // c2r overwrites its input.
  std::vector<Complex> spec(spectrum.begin(), spectrum.end());
  spec.front().imag(0.0);
  if (size_ % 2 == 0) spec.back().imag(0.0);
  std::vector<double> out(size_);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), reinterpret_cast<fftw_complex*>(spec.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(size_);
  for (double& v : out) v *= scale;
  return out;
}

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace promptfx
