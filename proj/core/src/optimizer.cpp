#include "promptfx/optimizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <random>

#include "promptfx/errors.hpp"
#include "promptfx/losses.hpp"

namespace promptfx {
namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string trim(std::string_view s) {
  auto b = s.begin();
  auto e = s.end();
  while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
  return std::string(b, e);
}

// Embeddings shared by every run of one optimization.
struct Targets {
  Embedding target;
  Embedding contrast;
  std::optional<Embedding> input;  // A1, directional variant only
};

LossWithGradient loss_for(LossVariant variant, const Targets& t, const Embedding& effected) {
  if (variant == LossVariant::cosine) return cosine_loss_with_grad(effected, t.target);
  return directional_loss_with_grad(*t.input, effected, t.contrast, t.target);
}

void check_prompt_pair(const PromptSpec& prompts, const Embedding& target, const Embedding& contrast) {
  std::vector<double> d(target.dimension());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = target.values[i] - contrast.values[i];
  if (norm(d) < kDegenerateTextDistance) {
    throw DegeneratePromptError("prompts '" + prompts.rendered_target() + "' and '" + prompts.rendered_contrast() +
                                "' have identical embeddings");
  }
}

Targets make_targets(const AudioBuffer& audio, const PromptSpec& prompts, LossVariant variant,
                     const EmbeddingBackend& backend) {
  Targets t{backend.embed_text(prompts.rendered_target()), backend.embed_text(prompts.rendered_contrast()), {}};
  if (variant == LossVariant::directional) {
    check_prompt_pair(prompts, t.target, t.contrast);
    t.input = backend.embed_audio(audio);
  }
  return t;
}

double shift_free_loss(const AudioBuffer& audio, const FxProcessor& processor, const RawParams& raw,
                       LossVariant variant, const Targets& targets, const EmbeddingBackend& backend) {
  const auto effected = backend.embed_audio(processor.render(audio, raw));
  if (variant == LossVariant::cosine) return cosine_loss(effected, targets.target);
  return directional_loss(*targets.input, effected, targets.contrast, targets.target);
}

struct RunOutcome {
  std::vector<LossPoint> trace;
  RawParams params;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

RunOutcome run_once(std::size_t run, const AudioBuffer& audio, const FxProcessor& processor,
                    const OptimizationConfig& config, const Targets& targets, const EmbeddingBackend& backend,
                    const ProgressCallback& progress) {
  CounterRng rng(config.seed + run);
  RunOutcome out;
  out.params = draw_standard_normal(processor.parameter_count(), rng);
  out.initial_loss = shift_free_loss(audio, processor, out.params, config.variant, targets, backend);
  out.trace.reserve(static_cast<std::size_t>(config.iterations));

  Adam adam(out.params.size(),
            {config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps});
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int it = 0; it < config.iterations; ++it) {
    const auto lin = processor.linearize(audio, out.params);
    const long shift = draw_shift(config.max_shift_ms, audio.sample_rate, rng);
    const auto emb = backend.linearize_audio(circular_shift(lin.output, shift));
    const auto loss = loss_for(config.variant, targets, emb.embedding);

    AudioBuffer grad_shifted{emb.pullback(loss.grad), audio.sample_rate, std::nullopt};
    const auto grad_out = circular_shift(grad_shifted, -shift);
    const auto grad = lin.pullback(grad_out.samples);

    adam.step(out.params.values, grad.raw);
    out.trace.push_back({it, loss.value});
    if (progress) progress({run, it + 1, loss.value});

    if (config.early_stop_patience > 0) {
      if (loss.value < best) {
        best = loss.value;
        since_best = 0;
      } else if (++since_best >= config.early_stop_patience) {
        break;
      }
    }
  }
  out.final_loss = shift_free_loss(audio, processor, out.params, config.variant, targets, backend);
  return out;
}

}  // namespace

void check_prompt_pair(const PromptSpec& prompts, const EmbeddingBackend& backend) {
  check_prompt_pair(prompts, backend.embed_text(prompts.rendered_target()),
                    backend.embed_text(prompts.rendered_contrast()));
}

CounterRng::result_type CounterRng::operator()() noexcept { return splitmix64(key_ + 0x632BE59BD9B4E019ULL * counter_++); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed ^ splitmix64(stream));
}

RawParams draw_standard_normal(std::size_t count, CounterRng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RawParams p;
  p.values.resize(count);
  for (double& v : p.values) v = normal(rng);
  return p;
}

Adam::Adam(std::size_t size, AdamOptions options) : options_(options), m_(size, 0.0), v_(size, 0.0) {
  if (!(options.learning_rate > 0.0)) throw InvalidArgument("adam: learning rate must be positive");
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw InvalidArgument("adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * grad[i];
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= options_.learning_rate * mhat / (std::sqrt(vhat) + options_.epsilon);
  }
}

std::string_view variant_name(LossVariant v) { return v == LossVariant::cosine ? "cosine" : "directional"; }

LossVariant parse_variant(std::string_view name) {
  if (name == "cosine") return LossVariant::cosine;
  if (name == "directional") return LossVariant::directional;
  throw InvalidArgument("unknown variant '" + std::string(name) + "' (supported: cosine, directional)");
}

PromptSpec build_prompts(std::string_view target, std::optional<std::string_view> contrast) {
  PromptSpec p;
  p.target_text = trim(target);
  if (p.target_text.empty()) throw InvalidArgument("prompt: target text is empty");
  if (contrast && !trim(*contrast).empty()) {
    p.contrast_text = trim(*contrast);
  } else {
    p.contrast_text = "NOT " + p.target_text;
  }
  return p;
}

void OptimizationConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning rate must be positive");
  if (iterations < 1) throw InvalidArgument("iterations must be at least 1");
  if (runs < 1) throw InvalidArgument("runs must be at least 1");
  if (!(max_shift_ms >= 0.0) || !std::isfinite(max_shift_ms)) throw InvalidArgument("max shift must be >= 0 ms");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw InvalidArgument("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw InvalidArgument("adam epsilon must be positive");
  if (early_stop_patience < 0) throw InvalidArgument("early stop patience must be >= 0");
}

AudioBuffer circular_shift(const AudioBuffer& buffer, long k) {
  AudioBuffer out = buffer;
  const auto n = static_cast<long>(buffer.size());
  if (n == 0) return out;
  const long s = ((k % n) + n) % n;
  std::rotate_copy(buffer.samples.begin(), buffer.samples.end() - s, buffer.samples.end(), out.samples.begin());
  return out;
}

long draw_shift(double max_ms, double sample_rate, CounterRng& rng) {
  if (!(max_ms >= 0.0)) throw InvalidArgument("random_shift: max_ms must be >= 0");
  const long limit = std::lround(max_ms * sample_rate / 1000.0);
  if (limit == 0) return 0;
  std::uniform_int_distribution<long> dist(-limit, limit);
  return dist(rng);
}

AudioBuffer random_shift(const AudioBuffer& buffer, double max_ms, CounterRng& rng) {
  return circular_shift(buffer, draw_shift(max_ms, buffer.sample_rate, rng));
}

std::size_t select_best_run(std::span<const double> final_losses) {
  if (final_losses.empty()) throw InvalidArgument("select_best_run: no runs");
  return static_cast<std::size_t>(std::min_element(final_losses.begin(), final_losses.end()) - final_losses.begin());
}

double evaluate_loss(const AudioBuffer& audio, const PromptSpec& prompts, const FxProcessor& processor,
                     const RawParams& raw, LossVariant variant, const EmbeddingBackend& backend) {
  const auto targets = make_targets(audio, prompts, variant, backend);
  return shift_free_loss(audio, processor, raw, variant, targets, backend);
}

OptimizationResult optimize(const AudioBuffer& audio, const PromptSpec& prompts, const FxChain& chain,
                            const OptimizationConfig& config, const EmbeddingBackend& backend,
                            const ProgressCallback& progress) {
  config.validate();
  validate(audio);
  if (audio.empty()) throw InvalidArgument("optimize: empty audio");
  const auto& desc = backend.descriptor();
  if (!desc.differentiable_audio) throw BackendError("backend " + desc.name + " cannot differentiate audio");
  if (std::abs(audio.sample_rate - desc.input_sample_rate) > 1e-9) {
    throw InvalidArgument("optimize: audio must be resampled to " + std::to_string(desc.input_sample_rate) + " Hz");
  }

  const FxProcessor processor(chain, config.reverb_seed);
  const auto targets = make_targets(audio, prompts, config.variant, backend);

  const auto runs = static_cast<std::size_t>(config.runs);
  std::vector<RunOutcome> outcomes(runs);
  if (config.parallel_runs && runs > 1) {
    std::vector<std::future<RunOutcome>> futures;
    for (std::size_t r = 0; r < runs; ++r) {
      futures.push_back(std::async(std::launch::async, [&, r] {
        return run_once(r, audio, processor, config, targets, backend, progress);
      }));
    }
    for (std::size_t r = 0; r < runs; ++r) outcomes[r] = futures[r].get();
  } else {
    for (std::size_t r = 0; r < runs; ++r) {
      outcomes[r] = run_once(r, audio, processor, config, targets, backend, progress);
    }
  }

  OptimizationResult result;
  for (auto& o : outcomes) {
    result.loss_traces.push_back(std::move(o.trace));
    result.initial_losses.push_back(o.initial_loss);
    result.final_losses.push_back(o.final_loss);
    result.run_params.push_back(std::move(o.params));
  }
  result.chosen_run = select_best_run(result.final_losses);
  result.raw_params = result.run_params[result.chosen_run];
  result.mapped_params = processor.map(result.raw_params);
  result.effected_audio = processor.render(audio, result.raw_params);
  result.config_echo = config;
  result.prompts = prompts;
  result.chain = chain;
  result.reverb_noise_seed = processor.reverb_seed();
  return result;
}

}  // namespace promptfx
