#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

// Reference computations written independently of the library, used as test
// oracles.
namespace oracle {

enum class Shape { low_shelf, peaking, high_shelf };

struct Coeffs {
  double b0, b1, b2, a1, a2;  // normalized by a0
};

/// RBJ cookbook section.
Coeffs cookbook(Shape shape, double gain_db, double freq, double q, double rate);
std::complex<double> response(const Coeffs& c, double freq, double rate);
/// Direct form I, zero initial state.
std::vector<double> iir(const Coeffs& c, std::span<const double> x);

/// |X(f)| / N of the DFT evaluated at an arbitrary frequency.
double dft_magnitude(std::span<const double> x, double freq, double rate);
/// Linear convolution truncated to x.size().
std::vector<double> convolve(std::span<const double> x, std::span<const double> h);
/// T60 from the Schroeder backward integral, line fit between -5 and -35 dB.
double schroeder_t60(std::span<const double> ir, double rate);

double snr_db(std::span<const double> ref, std::span<const double> test);

/// Central differences of f at x along each coordinate in `coords`.
std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        const std::vector<double>& x, const std::vector<std::size_t>& coords,
                                        double h);
/// |a - b| / max(|a|, |b|, floor), elementwise, then the median.
double median_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12);

}  // namespace oracle
