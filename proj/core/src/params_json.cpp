#include "promptfx/params_json.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "promptfx/errors.hpp"

namespace promptfx {
namespace {

std::optional<EffectKind> kind_from_name(std::string_view name) {
  if (name == "eq") return EffectKind::parametric_eq6;
  if (name == "reverb") return EffectKind::noise_shaped_reverb;
  return std::nullopt;
}

std::vector<std::string> stage_keys(const FxChain& chain) {
  std::map<EffectKind, int> seen;
  std::vector<std::string> keys;
  for (auto k : chain.stages) {
    const int count = ++seen[k];
    std::string key(effect_name(k));
    if (count > 1) key += "#" + std::to_string(count);
    keys.push_back(std::move(key));
  }
  return keys;
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

const char* scale_name(Scale scale) { return scale == Scale::linear ? "linear" : "logarithmic"; }

OrderedJson params_to_json(const FxProcessor& processor, const MappedParams& mapped) {
  if (mapped.size() != processor.parameter_count()) throw InvalidArgument("params_to_json: count mismatch");
  const auto keys = stage_keys(processor.chain());
  OrderedJson doc = OrderedJson::object();
  for (std::size_t s = 0; s < processor.stage_count(); ++s) {
    OrderedJson effect = OrderedJson::object();
    const auto n = processor.stage(s).parameter_count();
    for (std::size_t j = 0; j < n; ++j) {
      const auto& p = mapped.entries[processor.offset(s) + j];
      effect[p.name] = {{"value", p.value}, {"unit", p.unit}, {"min", p.min}, {"max", p.max}};
    }
    doc[keys[s]] = std::move(effect);
  }
  return doc;
}

ParsedParams params_from_json(const OrderedJson& doc) {
  if (!doc.is_object()) throw SchemaError("", "parameter document must be a JSON object");
  ParsedParams parsed;
  std::vector<std::string> keys;
  for (const auto& [key, value] : doc.items()) {
    if (key == kMetadataKey) {
      parsed.metadata = value;
      continue;
    }
    const auto base = key.substr(0, key.find('#'));
    const auto kind = kind_from_name(base);
    if (!kind) throw SchemaError(key, "unknown effect");
    parsed.chain.stages.push_back(*kind);
    keys.push_back(key);
  }
  if (keys != stage_keys(parsed.chain)) {
    throw SchemaError("", "effect keys must be the effect name, with #N suffixes on repeats");
  }

  const FxProcessor processor(parsed.chain);
  for (std::size_t s = 0; s < processor.stage_count(); ++s) {
    const auto& key = keys[s];
    const auto& effect = doc.at(key);
    if (!effect.is_object()) throw SchemaError(key, "effect entry must be an object");
    const auto specs = processor.stage(s).specs();
    for (const auto& [name, _] : effect.items()) {
      const bool known = std::any_of(specs.begin(), specs.end(), [&](const ParamSpec& p) { return p.name == name; });
      if (!known) throw SchemaError(key + "." + name, "unknown parameter");
    }
    for (const auto& spec : specs) {
      const std::string path = key + "." + spec.name;
      if (!effect.contains(spec.name)) throw SchemaError(path, "missing parameter");
      const auto& entry = effect.at(spec.name);
      if (!entry.is_object() || !entry.contains("value")) throw SchemaError(path + ".value", "missing value");
      const auto& value = entry.at("value");
      if (!value.is_number()) throw SchemaError(path + ".value", "value must be a number");
      const double v = value.get<double>();
      if (!std::isfinite(v) || v < spec.min || v > spec.max) {
        throw SchemaError(path + ".value", "value " + format_number(v) + " outside [" + format_number(spec.min) +
                                               ", " + format_number(spec.max) + "] " + spec.unit);
      }
      parsed.mapped.entries.push_back({spec.name, spec.unit, v, spec.min, spec.max});
    }
  }
  return parsed;
}

OrderedJson chains_schema() {
  OrderedJson chains = OrderedJson::array();
  for (const auto& name : FxChain::supported_names()) {
    const FxProcessor processor(FxChain::parse(name));
    const auto keys = stage_keys(processor.chain());
    OrderedJson effects = OrderedJson::array();
    for (std::size_t s = 0; s < processor.stage_count(); ++s) {
      OrderedJson params = OrderedJson::array();
      for (const auto& p : processor.stage(s).specs()) {
        params.push_back({{"name", p.name},
                          {"unit", p.unit},
                          {"min", p.min},
                          {"max", p.max},
                          {"scale", scale_name(p.scale)}});
      }
      effects.push_back({{"name", keys[s]}, {"parameters", std::move(params)}});
    }
    chains.push_back(
        {{"name", name}, {"parameter_count", processor.parameter_count()}, {"effects", std::move(effects)}});
  }
  return {{"chains", std::move(chains)}};
}

}  // namespace promptfx
