#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace promptfx::detail {

// Forward-mode dual number carrying N partial derivatives.
template <std::size_t N>
struct Jet {
  double v = 0.0;
  std::array<double, N> d{};

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT: constants promote implicitly

  static Jet variable(double value, std::size_t index) {
    Jet j(value);
    j.d[index] = 1.0;
    return j;
  }

  friend Jet operator+(Jet a, const Jet& b) {
    a.v += b.v;
    for (std::size_t i = 0; i < N; ++i) a.d[i] += b.d[i];
    return a;
  }
  friend Jet operator-(Jet a, const Jet& b) {
    a.v -= b.v;
    for (std::size_t i = 0; i < N; ++i) a.d[i] -= b.d[i];
    return a;
  }
  friend Jet operator-(Jet a) {
    a.v = -a.v;
    for (auto& x : a.d) x = -x;
    return a;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(a.v * b.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r(a.v / b.v);
    const double inv = 1.0 / (b.v * b.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv;
    return r;
  }

 private:
  static Jet chain(const Jet& a, double value, double slope) {
    Jet r(value);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = slope * a.d[i];
    return r;
  }

 public:
  friend Jet sin(const Jet& a) { return chain(a, std::sin(a.v), std::cos(a.v)); }
  friend Jet cos(const Jet& a) { return chain(a, std::cos(a.v), -std::sin(a.v)); }
  friend Jet sqrt(const Jet& a) {
    const double s = std::sqrt(a.v);
    return chain(a, s, 0.5 / s);
  }
  friend Jet exp(const Jet& a) {
    const double e = std::exp(a.v);
    return chain(a, e, e);
  }
};

}  // namespace promptfx::detail
