#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptfx/audio.hpp"
#include "promptfx/embedding.hpp"
#include "promptfx/fx_chain.hpp"
#include "promptfx/params.hpp"

namespace promptfx {

/// Counter-based generator: output i is splitmix64(key + i). Two generators
/// with different keys produce independent, reproducible streams.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Mixes a user seed and a stream index into a generator key.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// I.i.d. standard-normal raw parameters.
RawParams draw_standard_normal(std::size_t count, CounterRng& rng);

struct AdamOptions {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction; no schedule, weight decay or clipping.
class Adam {
 public:
  Adam(std::size_t size, AdamOptions options);
  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps() const noexcept { return t_; }

 private:
  AdamOptions options_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

enum class LossVariant { cosine, directional };

std::string_view variant_name(LossVariant v);
LossVariant parse_variant(std::string_view name);

inline constexpr const char* kDefaultPromptPrefix = "this sound is";

struct PromptSpec {
  std::string target_text;
  std::string contrast_text;
  std::string prefix = kDefaultPromptPrefix;

  std::string rendered_target() const { return prefix + " " + target_text; }
  std::string rendered_contrast() const { return prefix + " " + contrast_text; }
};

/// Contrast defaults to "NOT <target>". Throws InvalidArgument on an empty target.
PromptSpec build_prompts(std::string_view target, std::optional<std::string_view> contrast = std::nullopt);

/// Throws DegeneratePromptError when target and contrast embed to the same
/// point, which leaves the directional loss undefined.
void check_prompt_pair(const PromptSpec& prompts, const EmbeddingBackend& backend);

struct OptimizationConfig {
  LossVariant variant = LossVariant::cosine;
  double learning_rate = 1e-2;
  int iterations = 600;
  int runs = 3;
  double max_shift_ms = 1500.0;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t reverb_seed = NoiseShapedReverb::kDefaultSeed;
  /// Stop a run after this many iterations without a new best training loss.
  /// 0 disables early stopping (the default), giving fixed-length traces.
  int early_stop_patience = 0;
  /// Execute restarts on separate threads. Results do not depend on this.
  bool parallel_runs = true;

  void validate() const;
};

struct LossPoint {
  int iteration = 0;
  double loss = 0.0;
};

struct OptimizationResult {
  std::size_t chosen_run = 0;
  RawParams raw_params;
  MappedParams mapped_params;
  std::vector<std::vector<LossPoint>> loss_traces;  // per run, one point per iteration
  std::vector<double> initial_losses;               // shift-free loss at initialization, per run
  std::vector<double> final_losses;                 // shift-free loss after the last step, per run
  std::vector<RawParams> run_params;                // final raw parameters, per run
  AudioBuffer effected_audio;
  OptimizationConfig config_echo;
  PromptSpec prompts;
  FxChain chain;
  std::uint64_t reverb_noise_seed = 0;
};

struct Progress {
  std::size_t run = 0;
  int iteration = 0;
  double loss = 0.0;
};

/// Called after each iteration; may be invoked from several threads at once
/// when runs execute in parallel.
using ProgressCallback = std::function<void(const Progress&)>;

/// Circular shift: output[(i + k) mod n] = input[i].
AudioBuffer circular_shift(const AudioBuffer& buffer, long k);
/// Draws k uniformly from [-K, K], K = round(max_ms * rate / 1000), and shifts.
AudioBuffer random_shift(const AudioBuffer& buffer, double max_ms, CounterRng& rng);
long draw_shift(double max_ms, double sample_rate, CounterRng& rng);

/// Index of the smallest final loss (first on ties).
std::size_t select_best_run(std::span<const double> final_losses);

/// Loss of the effected audio for fixed raw parameters with no shift; the
/// quantity used to compare runs.
double evaluate_loss(const AudioBuffer& audio, const PromptSpec& prompts, const FxProcessor& processor,
                     const RawParams& raw, LossVariant variant, const EmbeddingBackend& backend);

/// Single-instance optimization of the chain's raw parameters so that the
/// effected audio's embedding matches the prompt. `audio` must already be at
/// the backend's input rate.
OptimizationResult optimize(const AudioBuffer& audio, const PromptSpec& prompts, const FxChain& chain,
                            const OptimizationConfig& config, const EmbeddingBackend& backend,
                            const ProgressCallback& progress = {});

}  // namespace promptfx
