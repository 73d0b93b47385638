#include "promptfx/artifacts.hpp"

#include <cstdio>

#include "promptfx/errors.hpp"
#include "promptfx/util.hpp"

namespace promptfx {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

OrderedJson result_params_json(const OptimizationResult& result, double sample_rate) {
  const FxProcessor processor(result.chain, result.reverb_noise_seed);
  auto doc = params_to_json(processor, result.mapped_params);
  doc[kMetadataKey] = {
      {"chain", result.chain.name()},
      {"sample_rate", sample_rate},
      {"reverb_noise_seed", result.reverb_noise_seed},
      {"variant", variant_name(result.config_echo.variant)},
      {"seed", result.config_echo.seed},
      {"chosen_run", result.chosen_run},
      {"final_losses", result.final_losses},
  };
  return doc;
}

std::string loss_trace_csv(const OptimizationResult& result) {
  std::string out = "run,iteration,loss\n";
  for (std::size_t r = 0; r < result.loss_traces.size(); ++r) {
    for (const auto& p : result.loss_traces[r]) {
      out += std::to_string(r) + "," + std::to_string(p.iteration) + "," + format_double(p.loss) + "\n";
    }
  }
  return out;
}

OrderedJson run_meta_json(const OptimizationResult& result, const std::string& backend_name, double sample_rate) {
  const auto& c = result.config_echo;
  return {
      {"variant", variant_name(c.variant)},
      {"chain", result.chain.name()},
      {"prompt",
       {{"target", result.prompts.target_text},
        {"contrast", result.prompts.contrast_text},
        {"prefix", result.prompts.prefix},
        {"rendered_target", result.prompts.rendered_target()},
        {"rendered_contrast", result.prompts.rendered_contrast()}}},
      {"learning_rate", c.learning_rate},
      {"iterations", c.iterations},
      {"runs", c.runs},
      {"max_shift_ms", c.max_shift_ms},
      {"init", "standard_normal"},
      {"optimizer", {{"name", "adam"}, {"beta1", c.adam_beta1}, {"beta2", c.adam_beta2}, {"eps", c.adam_eps}}},
      {"early_stop_patience", c.early_stop_patience},
      {"seed", c.seed},
      {"run_seeds",
       [&] {
         OrderedJson s = OrderedJson::array();
         for (int r = 0; r < c.runs; ++r) s.push_back(c.seed + static_cast<std::uint64_t>(r));
         return s;
       }()},
      {"reverb_noise_seed", result.reverb_noise_seed},
      {"backend", backend_name},
      {"sample_rate", sample_rate},
      {"initial_losses", result.initial_losses},
      {"final_losses", result.final_losses},
      {"chosen_run", result.chosen_run},
  };
}

RunArtifacts write_run_artifacts(const OptimizationResult& result, const std::filesystem::path& dir,
                                 const std::string& backend_name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const double rate = result.effected_audio.sample_rate;
  RunArtifacts a{dir / kEffectedWav, dir / kParamsJson, dir / kLossesCsv, dir / kRunMetaJson};
  save_audio(result.effected_audio, a.effected_wav, BitDepth::float32);
  write_text_file(a.params_json, result_params_json(result, rate).dump(2) + "\n");
  write_text_file(a.losses_csv, loss_trace_csv(result));
  write_text_file(a.run_meta_json, run_meta_json(result, backend_name, rate).dump(2) + "\n");
  return a;
}

AudioBuffer render_from_params(const AudioBuffer& audio, const OrderedJson& params_doc) {
  const auto parsed = params_from_json(params_doc);
  std::uint64_t seed = NoiseShapedReverb::kDefaultSeed;
  AudioBuffer input = audio;
  if (parsed.metadata.is_object()) {
    const auto& m = parsed.metadata;
    if (m.contains("reverb_noise_seed")) {
      if (!m.at("reverb_noise_seed").is_number_unsigned()) {
        throw SchemaError("metadata.reverb_noise_seed", "must be a non-negative integer");
      }
      seed = m.at("reverb_noise_seed").get<std::uint64_t>();
    }
    if (m.contains("sample_rate")) {
      if (!m.at("sample_rate").is_number() || !(m.at("sample_rate").get<double>() > 0.0)) {
        throw SchemaError("metadata.sample_rate", "must be a positive number");
      }
      input = resample(input, m.at("sample_rate").get<double>());
    }
  }
  return FxProcessor(parsed.chain, seed).render_mapped(input, parsed.mapped);
}

}  // namespace promptfx
