#pragma once

#include <json.hpp>

#include "promptfx/fx_chain.hpp"

namespace promptfx {

using OrderedJson = nlohmann::ordered_json;

/// Key reserved for run metadata inside a parameter document.
inline constexpr const char* kMetadataKey = "metadata";

/// Canonical parameter document:
///   {effect: {param: {value, unit, min, max}}, ...}
/// ordered by chain stage, then by parameter spec. A repeated effect is keyed
/// "name#2", "name#3", ...
OrderedJson params_to_json(const FxProcessor& processor, const MappedParams& mapped);

struct ParsedParams {
  FxChain chain;
  MappedParams mapped;
  OrderedJson metadata;  // null when absent
};

/// Validates a parameter document against the effect schemas. Every parameter
/// must be present, numeric, and inside its closed [min, max] range. Errors
/// are SchemaError carrying the dotted field path.
ParsedParams params_from_json(const OrderedJson& doc);

/// Schema of every supported chain, for building generic UIs and for `chains`.
OrderedJson chains_schema();

const char* scale_name(Scale scale);

}  // namespace promptfx
