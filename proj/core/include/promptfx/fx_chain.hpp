#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "promptfx/audio.hpp"
#include "promptfx/effects.hpp"
#include "promptfx/params.hpp"

namespace promptfx {

enum class EffectKind { parametric_eq6, noise_shaped_reverb };

std::string_view effect_name(EffectKind kind);

/// Ordered effect stages. An empty chain is the identity.
struct FxChain {
  std::vector<EffectKind> stages;

  /// Accepts "eq", "reverb", "eq-reverb" and any other '-'-joined stage list
  /// ("reverb-eq", "none" for the empty chain).
  static FxChain parse(std::string_view name);
  /// The chains exposed to users: eq, reverb, eq-reverb.
  static std::vector<std::string> supported_names();

  std::string name() const;
  bool operator==(const FxChain&) const = default;
};

/// Gradient of a scalar objective w.r.t. chain input samples and raw params.
struct ChainGradient {
  std::vector<double> input;
  std::vector<double> raw;
};

struct ChainLinearization {
  AudioBuffer output;
  std::function<ChainGradient(std::span<const double> grad_output)> pullback;
};

/// Immutable renderer for one chain. Rendering is a pure function of
/// (audio, params, chain, noise seed) and may be called concurrently.
class FxProcessor {
 public:
  explicit FxProcessor(FxChain chain, std::uint64_t reverb_seed = NoiseShapedReverb::kDefaultSeed);

  const FxChain& chain() const noexcept { return chain_; }
  std::uint64_t reverb_seed() const noexcept { return reverb_seed_; }
  std::size_t parameter_count() const noexcept { return specs_.size(); }
  /// Concatenated specs in stage order.
  std::span<const ParamSpec> specs() const noexcept { return specs_; }
  /// Stage i consumes specs()[offset(i), offset(i) + stage(i).parameter_count()).
  const Effect& stage(std::size_t i) const { return *effects_.at(i); }
  std::size_t stage_count() const noexcept { return effects_.size(); }
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }

  MappedParams map(const RawParams& raw) const;

  AudioBuffer render(const AudioBuffer& audio, const RawParams& raw) const;
  /// Renders from bounded values; values may sit on the closed bounds.
  AudioBuffer render_mapped(const AudioBuffer& audio, const MappedParams& mapped) const;
  ChainLinearization linearize(const AudioBuffer& audio, const RawParams& raw) const;

 private:
  void check_raw(const RawParams& raw) const;

  FxChain chain_;
  std::uint64_t reverb_seed_;
  std::vector<std::shared_ptr<const Effect>> effects_;
  std::vector<std::size_t> offsets_;
  std::vector<ParamSpec> specs_;
};

AudioBuffer render_chain(const AudioBuffer& audio, const RawParams& raw, const FxChain& chain,
                         std::uint64_t reverb_seed = NoiseShapedReverb::kDefaultSeed);

}  // namespace promptfx
