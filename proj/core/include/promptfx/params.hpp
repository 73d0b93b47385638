#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptfx {

enum class Scale { linear, logarithmic };

/// One named control of an effect, bounded to [min, max].
struct ParamSpec {
  std::string name;
  std::string unit;  // "dB", "Hz", "seconds" or "ratio"
  double min = 0.0;
  double max = 1.0;
  Scale scale = Scale::linear;
};

/// Throws InvalidArgument unless min < max (and min > 0 on a log scale).
void validate(const ParamSpec& spec);

/// Unconstrained optimizer-domain vector, one entry per ParamSpec of a chain.
struct RawParams {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
};

struct MappedParam {
  std::string name;
  std::string unit;
  double value = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Bounded, named effect values in spec order.
struct MappedParams {
  std::vector<MappedParam> entries;

  std::size_t size() const noexcept { return entries.size(); }
  std::vector<double> values() const;
  /// Throws InvalidArgument if no entry has this name.
  const MappedParam& at(std::string_view name) const;
};

double logistic(double w) noexcept;

/// Linear:      p = min + s(w) (max - min)
/// Logarithmic: p = exp(ln min + s(w) (ln max - ln min))
/// with s the standard logistic function.
double map_value(double raw, const ParamSpec& spec);
/// d map_value / d raw.
double map_derivative(double raw, const ParamSpec& spec);
/// Inverse of map_value on the open interval (min, max).
double unmap_value(double value, const ParamSpec& spec);

MappedParams map_params(const RawParams& raw, std::span<const ParamSpec> specs);

/// Names and bounds from `specs`, values as given (used for hand-set values).
MappedParams make_mapped(std::span<const double> values, std::span<const ParamSpec> specs);

}  // namespace promptfx
