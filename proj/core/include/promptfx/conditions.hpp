#pragma once

#include <cstdint>
#include <string_view>

#include "promptfx/optimizer.hpp"

namespace promptfx {

struct RandomCondition {
  RawParams raw;
  MappedParams mapped;
  AudioBuffer audio;
};

/// The four stimuli produced for one (audio, prompt, chain) cell.
struct ConditionSet {
  OptimizationResult cosine;
  OptimizationResult directional;
  RandomCondition random;
  AudioBuffer nofx;
};

/// Stream index mixed into the config seed for the random condition, so its
/// draw is independent of every optimization restart.
inline constexpr std::uint64_t kRandomConditionStream = 0x52414E44;

/// One standard-normal raw draw for `chain`, rendered once.
RandomCondition random_condition(const AudioBuffer& audio, const FxChain& chain, std::uint64_t seed,
                                 std::uint64_t reverb_seed = NoiseShapedReverb::kDefaultSeed);

/// Cosine and directional optimizations (the variant in `config` is ignored),
/// a random draw, and the untouched input. `audio` must be at the backend rate.
ConditionSet generate_conditions(const AudioBuffer& audio, std::string_view prompt, const FxChain& chain,
                                 const OptimizationConfig& config, const EmbeddingBackend& backend);

}  // namespace promptfx
