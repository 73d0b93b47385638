#include "promptfx/conditions.hpp"

namespace promptfx {

RandomCondition random_condition(const AudioBuffer& audio, const FxChain& chain, std::uint64_t seed,
                                 std::uint64_t reverb_seed) {
  const FxProcessor processor(chain, reverb_seed);
  CounterRng rng(derive_seed(seed, kRandomConditionStream));
  RandomCondition out;
  out.raw = draw_standard_normal(processor.parameter_count(), rng);
  out.mapped = processor.map(out.raw);
  out.audio = processor.render(audio, out.raw);
  return out;
}

ConditionSet generate_conditions(const AudioBuffer& audio, std::string_view prompt, const FxChain& chain,
                                 const OptimizationConfig& config, const EmbeddingBackend& backend) {
  const auto prompts = build_prompts(prompt);
  auto cfg = config;
  cfg.variant = LossVariant::cosine;
  ConditionSet set;
  set.cosine = optimize(audio, prompts, chain, cfg, backend);
  cfg.variant = LossVariant::directional;
  set.directional = optimize(audio, prompts, chain, cfg, backend);
  set.random = random_condition(audio, chain, config.seed, config.reverb_seed);
  set.nofx = audio;
  return set;
}

}  // namespace promptfx
