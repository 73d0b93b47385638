#include <benchmark/benchmark.h>

#include <random>

#include "promptfx/embedding.hpp"
#include "promptfx/fx_chain.hpp"
#include "promptfx/losses.hpp"
#include "promptfx/optimizer.hpp"

using namespace promptfx;

static AudioBuffer noise(double seconds) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 0.2);
  AudioBuffer a;
  a.sample_rate = 48000.0;
  a.samples.resize(static_cast<std::size_t>(seconds * a.sample_rate));
  for (auto& s : a.samples) s = n(rng);
  return a;
}

static RawParams raw_for(const FxProcessor& p) {
  CounterRng rng(3);
  return draw_standard_normal(p.parameter_count(), rng);
}

static void BM_Render(benchmark::State& st, const char* chain) {
  const auto audio = noise(static_cast<double>(st.range(0)));
  const FxProcessor p(FxChain::parse(chain));
  const auto raw = raw_for(p);
  for (auto _ : st) benchmark::DoNotOptimize(p.render(audio, raw));
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(audio.size()));
}

static void BM_Linearize(benchmark::State& st, const char* chain) {
  const auto audio = noise(static_cast<double>(st.range(0)));
  const FxProcessor p(FxChain::parse(chain));
  const auto raw = raw_for(p);
  const std::vector<double> g(audio.size(), 1e-3);
  for (auto _ : st) {
    auto lin = p.linearize(audio, raw);
    benchmark::DoNotOptimize(lin.pullback(g));
  }
}

static void BM_SurrogateEmbed(benchmark::State& st) {
  const auto audio = noise(static_cast<double>(st.range(0)));
  const SurrogateBackend backend;
  for (auto _ : st) benchmark::DoNotOptimize(backend.embed_audio(audio));
}

static void BM_SurrogateVjp(benchmark::State& st) {
  const auto audio = noise(static_cast<double>(st.range(0)));
  const SurrogateBackend backend;
  const std::vector<double> de(SurrogateBackend::kDimension, 0.1);
  for (auto _ : st) {
    auto lin = backend.linearize_audio(audio);
    benchmark::DoNotOptimize(lin.pullback(de));
  }
}

// One optimizer iteration: 1 run, 1 step.
static void BM_OptimizerStep(benchmark::State& st, const char* chain) {
  const auto audio = noise(static_cast<double>(st.range(0)));
  const SurrogateBackend backend;
  OptimizationConfig c;
  c.iterations = 1;
  c.runs = 1;
  c.seed = 1;
  const auto prompts = build_prompts("bright");
  for (auto _ : st) benchmark::DoNotOptimize(optimize(audio, prompts, FxChain::parse(chain), c, backend));
}

BENCHMARK_CAPTURE(BM_Render, eq, "eq")->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Render, reverb, "reverb")->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Linearize, eq, "eq")->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Linearize, reverb, "reverb")->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Linearize, eq_reverb, "eq-reverb")->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SurrogateEmbed)->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SurrogateVjp)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_OptimizerStep, eq, "eq")->Arg(2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
