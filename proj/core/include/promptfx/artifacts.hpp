#pragma once

#include <filesystem>
#include <string>

#include "promptfx/optimizer.hpp"
#include "promptfx/params_json.hpp"

namespace promptfx {

/// Canonical parameter document for the chosen run plus a "metadata" block
/// (chain, sample rate, reverb noise seed, variant, seed, losses).
OrderedJson result_params_json(const OptimizationResult& result, double sample_rate);

/// "run,iteration,loss" with one row per recorded iteration of every run.
std::string loss_trace_csv(const OptimizationResult& result);

/// Full configuration echo and outcome summary.
OrderedJson run_meta_json(const OptimizationResult& result, const std::string& backend_name, double sample_rate);

struct RunArtifacts {
  std::filesystem::path effected_wav;
  std::filesystem::path params_json;
  std::filesystem::path losses_csv;
  std::filesystem::path run_meta_json;
};

inline constexpr const char* kEffectedWav = "effected.wav";
inline constexpr const char* kParamsJson = "params.json";
inline constexpr const char* kLossesCsv = "losses.csv";
inline constexpr const char* kRunMetaJson = "run_meta.json";

/// Writes effected.wav (float32), params.json, losses.csv and run_meta.json.
RunArtifacts write_run_artifacts(const OptimizationResult& result, const std::filesystem::path& dir,
                                 const std::string& backend_name);

/// Reads a parameter document and renders it onto `audio`. The audio is
/// resampled to the document's recorded sample rate (when present) and the
/// recorded reverb noise seed is used.
AudioBuffer render_from_params(const AudioBuffer& audio, const OrderedJson& params_doc);

std::string format_double(double v);

}  // namespace promptfx
