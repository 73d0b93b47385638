#include "promptfx/params.hpp"

#include <algorithm>
#include <cmath>

#include "promptfx/errors.hpp"

namespace promptfx {

void validate(const ParamSpec& spec) {
  if (!(spec.min < spec.max)) throw InvalidArgument("param " + spec.name + ": min must be below max");
  if (spec.scale == Scale::logarithmic && !(spec.min > 0.0)) {
    throw InvalidArgument("param " + spec.name + ": logarithmic scale needs min > 0");
  }
}

std::vector<double> MappedParams::values() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.value);
  return out;
}

const MappedParam& MappedParams::at(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  throw InvalidArgument("no parameter named " + std::string(name));
}

double logistic(double w) noexcept {
  if (w >= 0.0) return 1.0 / (1.0 + std::exp(-w));
  const double e = std::exp(w);
  return e / (1.0 + e);
}

double map_value(double raw, const ParamSpec& spec) {
  const double s = logistic(raw);
  if (spec.scale == Scale::linear) return spec.min + s * (spec.max - spec.min);
  const double lo = std::log(spec.min);
  // exp(log(x)) may round just outside the bounds.
  return std::clamp(std::exp(lo + s * (std::log(spec.max) - lo)), spec.min, spec.max);
}

double map_derivative(double raw, const ParamSpec& spec) {
  const double s = logistic(raw);
  const double ds = s * (1.0 - s);
  if (spec.scale == Scale::linear) return ds * (spec.max - spec.min);
  return map_value(raw, spec) * ds * (std::log(spec.max) - std::log(spec.min));
}

double unmap_value(double value, const ParamSpec& spec) {
  if (!(value > spec.min && value < spec.max)) {
    throw InvalidArgument("param " + spec.name + ": value outside the open interval (min, max)");
  }
  const double s = spec.scale == Scale::linear
                       ? (value - spec.min) / (spec.max - spec.min)
                       : (std::log(value) - std::log(spec.min)) / (std::log(spec.max) - std::log(spec.min));
  return std::log(s / (1.0 - s));
}

MappedParams map_params(const RawParams& raw, std::span<const ParamSpec> specs) {
  if (raw.size() != specs.size()) {
    throw InvalidArgument("map_params: expected " + std::to_string(specs.size()) + " raw values, got " +
                          std::to_string(raw.size()));
  }
  MappedParams out;
  out.entries.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!std::isfinite(raw.values[i])) throw InvalidArgument("map_params: non-finite raw value");
    const auto& s = specs[i];
    out.entries.push_back({s.name, s.unit, map_value(raw.values[i], s), s.min, s.max});
  }
  return out;
}

MappedParams make_mapped(std::span<const double> values, std::span<const ParamSpec> specs) {
  if (values.size() != specs.size()) throw InvalidArgument("make_mapped: length mismatch");
  MappedParams out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    out.entries.push_back({specs[i].name, specs[i].unit, values[i], specs[i].min, specs[i].max});
  }
  return out;
}

}  // namespace promptfx
