#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace promptfx {

using Complex = std::complex<double>;

/// Real-input FFT of a fixed length. Instances are cheap handles onto plans
/// shared process-wide; `forward` and `inverse` are safe to call concurrently.
class RealFft {
 public:
  explicit RealFft(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  std::size_t bins() const noexcept { return size_ / 2 + 1; }

  /// Spectrum of `input` zero-padded (or truncated) to size(); bins() values.
  std::vector<Complex> forward(std::span<const double> input) const;

  /// Inverse of forward, scaled by 1/size(). Imaginary parts of the DC and
  /// Nyquist bins are ignored.
  std::vector<double> inverse(std::span<const Complex> spectrum) const;

 private:
  std::size_t size_;
  void* forward_plan_;
  void* inverse_plan_;
};

std::size_t next_power_of_two(std::size_t n);

}  // namespace promptfx
