#include "promptfx/fx_chain.hpp"

#include <cmath>

#include "promptfx/errors.hpp"

namespace promptfx {

std::string_view effect_name(EffectKind kind) {
  switch (kind) {
    case EffectKind::parametric_eq6:
      return "eq";
    case EffectKind::noise_shaped_reverb:
      return "reverb";
  }
  return "unknown";
}

FxChain FxChain::parse(std::string_view name) {
  FxChain chain;
  if (name == "none") return chain;
  std::size_t start = 0;
  while (start <= name.size()) {
    const auto end = std::min(name.find('-', start), name.size());
    const auto token = name.substr(start, end - start);
    if (token == "eq") {
      chain.stages.push_back(EffectKind::parametric_eq6);
    } else if (token == "reverb") {
      chain.stages.push_back(EffectKind::noise_shaped_reverb);
    } else {
      std::string supported;
      for (const auto& s : supported_names()) supported += (supported.empty() ? "" : ", ") + s;
      throw InvalidArgument("unknown chain '" + std::string(name) + "' (supported: " + supported + ")");
    }
    start = end + 1;
  }
  return chain;
}

std::vector<std::string> FxChain::supported_names() { return {"eq", "reverb", "eq-reverb"}; }

std::string FxChain::name() const {
  if (stages.empty()) return "none";
  std::string out;
  for (auto k : stages) {
    if (!out.empty()) out += '-';
    out += effect_name(k);
  }
  return out;
}

FxProcessor::FxProcessor(FxChain chain, std::uint64_t reverb_seed)
    : chain_(std::move(chain)), reverb_seed_(reverb_seed) {
  for (auto kind : chain_.stages) {
    std::shared_ptr<const Effect> e;
    if (kind == EffectKind::parametric_eq6) {
      e = std::make_shared<ParametricEq6>();
    } else {
      e = std::make_shared<NoiseShapedReverb>(reverb_seed_);
    }
    offsets_.push_back(specs_.size());
    specs_.insert(specs_.end(), e->specs().begin(), e->specs().end());
    effects_.push_back(std::move(e));
  }
}

void FxProcessor::check_raw(const RawParams& raw) const {
  if (raw.size() != specs_.size()) {
    throw InvalidArgument("chain " + chain_.name() + ": expected " + std::to_string(specs_.size()) +
                          " raw parameters, got " + std::to_string(raw.size()));
  }
  for (double v : raw.values) {
    if (!std::isfinite(v)) throw InvalidArgument("chain: non-finite raw parameter");
  }
}

MappedParams FxProcessor::map(const RawParams& raw) const {
  check_raw(raw);
  return map_params(raw, specs_);
}

AudioBuffer FxProcessor::render(const AudioBuffer& audio, const RawParams& raw) const {
  return render_mapped(audio, map(raw));
}

AudioBuffer FxProcessor::render_mapped(const AudioBuffer& audio, const MappedParams& mapped) const {
  validate(audio);
  if (mapped.size() != specs_.size()) throw InvalidArgument("chain: mapped parameter count mismatch");
  const auto values = mapped.values();
  AudioBuffer out = audio;
  for (std::size_t i = 0; i < effects_.size(); ++i) {
    const std::span<const double> slice(values.data() + offsets_[i], effects_[i]->parameter_count());
    out.samples = effects_[i]->process(out.samples, out.sample_rate, slice);
  }
  return out;
}

ChainLinearization FxProcessor::linearize(const AudioBuffer& audio, const RawParams& raw) const {
  validate(audio);
  check_raw(raw);
  std::vector<double> mapped(raw.size());
  std::vector<double> slope(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    mapped[i] = map_value(raw.values[i], specs_[i]);
    slope[i] = map_derivative(raw.values[i], specs_[i]);
  }

  std::vector<EffectPullback> pullbacks;
  AudioBuffer out = audio;
  for (std::size_t i = 0; i < effects_.size(); ++i) {
    const std::span<const double> slice(mapped.data() + offsets_[i], effects_[i]->parameter_count());
    auto lin = effects_[i]->linearize(out.samples, out.sample_rate, slice);
    out.samples = std::move(lin.output);
    pullbacks.push_back(std::move(lin.pullback));
  }

  auto offsets = offsets_;
  auto pullback = [pullbacks = std::move(pullbacks), offsets = std::move(offsets), slope = std::move(slope),
                   n = audio.size()](std::span<const double> grad_output) {
    if (grad_output.size() != n) throw InvalidArgument("chain: gradient length mismatch");
    ChainGradient g;
    g.raw.assign(slope.size(), 0.0);
    std::vector<double> upstream(grad_output.begin(), grad_output.end());
    for (std::size_t i = pullbacks.size(); i-- > 0;) {
      auto eg = pullbacks[i](upstream);
      for (std::size_t j = 0; j < eg.params.size(); ++j) {
        g.raw[offsets[i] + j] = eg.params[j] * slope[offsets[i] + j];
      }
      upstream = std::move(eg.input);
    }
    g.input = std::move(upstream);
    return g;
  };
  return {std::move(out), std::move(pullback)};
}

AudioBuffer render_chain(const AudioBuffer& audio, const RawParams& raw, const FxChain& chain,
                         std::uint64_t reverb_seed) {
  return FxProcessor(chain, reverb_seed).render(audio, raw);
}

}  // namespace promptfx
