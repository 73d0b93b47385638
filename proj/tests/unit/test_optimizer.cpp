#include <gtest/gtest.h>

#include <cmath>
#include <mutex>
#include <set>

#include "promptfx/errors.hpp"
#include "promptfx/optimizer.hpp"
#include "signals.hpp"

using namespace promptfx;

namespace {

const SurrogateBackend& backend() {
  static const SurrogateBackend b;
  return b;
}

OptimizationConfig small_config(std::uint64_t seed) {
  OptimizationConfig c;
  c.iterations = 12;
  c.runs = 3;
  c.seed = seed;
  c.max_shift_ms = 50.0;
  return c;
}

}  // namespace

TEST(CounterRng, ReproducibleAndKeyed) {
  CounterRng a(7), b(7), c(8);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
  }
  EXPECT_EQ(a.counter(), 100u);
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(CircularShift, MovesSamplesModuloLength) {
  AudioBuffer a;
  a.sample_rate = 48000;
  a.samples = {1, 2, 3, 4, 5};
  EXPECT_EQ(circular_shift(a, 2).samples, (std::vector<double>{4, 5, 1, 2, 3}));
  EXPECT_EQ(circular_shift(a, -1).samples, (std::vector<double>{2, 3, 4, 5, 1}));
  EXPECT_EQ(circular_shift(a, 7).samples, circular_shift(a, 2).samples);
  EXPECT_EQ(circular_shift(a, 0).samples, a.samples);
}

TEST(CircularShift, PreservesMultisetAndEnergy) {
  const auto a = testsig::pink_noise(0.1, 48000, 11);
  CounterRng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto s = random_shift(a, 30.0, rng);
    ASSERT_EQ(s.size(), a.size());
    std::multiset<double> x(a.samples.begin(), a.samples.end()), y(s.samples.begin(), s.samples.end());
    EXPECT_EQ(x, y);
  }
}

TEST(DrawShift, StaysWithinBoundAndCoversBothSigns) {
  CounterRng rng(5);
  const long bound = std::lround(1500.0 * 48000.0 / 1000.0);
  long lo = 0, hi = 0;
  for (int i = 0; i < 2000; ++i) {
    const long k = draw_shift(1500.0, 48000.0, rng);
    ASSERT_LE(std::abs(k), bound);
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  EXPECT_LT(lo, -bound / 2);
  EXPECT_GT(hi, bound / 2);
  CounterRng z(5);
  EXPECT_EQ(draw_shift(0.0, 48000.0, z), 0);
}

TEST(SelectBestRun, ArgminFirstOnTies) {
  EXPECT_EQ(select_best_run(std::vector<double>{0.5, 0.2, 0.9}), 1u);
  EXPECT_EQ(select_best_run(std::vector<double>{0.3, 0.1, 0.1}), 1u);
  EXPECT_EQ(select_best_run(std::vector<double>{0.0}), 0u);
  EXPECT_THROW(select_best_run(std::vector<double>{}), InvalidArgument);
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  Adam adam(3, {0.05, 0.9, 0.999, 1e-8});
  std::vector<double> p = {1.0, -2.0, 0.5};
  const std::vector<double> g = {3.0, -0.001, 40.0};
  adam.step(p, g);
  EXPECT_NEAR(p[0], 1.0 - 0.05, 1e-8);
  EXPECT_NEAR(p[1], -2.0 + 0.05, 1e-5);
  EXPECT_NEAR(p[2], 0.5 - 0.05, 1e-8);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, MatchesReferenceRecursion) {
  const AdamOptions o{0.1, 0.8, 0.9, 1e-6};
  Adam adam(1, o);
  std::vector<double> p = {2.0};
  double q = 2.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 25; ++t) {
    const double g = 2.0 * q - 1.0;  // d/dq (q^2 - q)
    m = o.beta1 * m + (1 - o.beta1) * g;
    v = o.beta2 * v + (1 - o.beta2) * g * g;
    const double mh = m / (1 - std::pow(o.beta1, t));
    const double vh = v / (1 - std::pow(o.beta2, t));
    q -= o.learning_rate * mh / (std::sqrt(vh) + o.epsilon);
    adam.step(p, std::vector<double>{2.0 * p[0] - 1.0});
    ASSERT_NEAR(p[0], q, 1e-12) << t;
  }
}

TEST(StandardNormal, MomentsOverManyDraws) {
  CounterRng rng(99);
  const auto r = draw_standard_normal(20000, rng);
  double mean = 0, sq = 0;
  for (double x : r.values) mean += x;
  mean /= r.size();
  for (double x : r.values) sq += (x - mean) * (x - mean);
  EXPECT_NEAR(mean, 0.0, 0.03);
  EXPECT_NEAR(std::sqrt(sq / r.size()), 1.0, 0.03);
}

TEST(Config, DefaultsAndValidation) {
  const OptimizationConfig c;
  EXPECT_EQ(c.variant, LossVariant::cosine);
  EXPECT_EQ(c.learning_rate, 0.01);
  EXPECT_EQ(c.iterations, 600);
  EXPECT_EQ(c.runs, 3);
  EXPECT_EQ(c.max_shift_ms, 1500.0);
  EXPECT_EQ(c.adam_beta1, 0.9);
  EXPECT_EQ(c.adam_beta2, 0.999);
  EXPECT_EQ(c.early_stop_patience, 0);
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.runs = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = c;
  bad.iterations = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = c;
  bad.learning_rate = -1;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = c;
  bad.max_shift_ms = -1;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Prompts, DefaultContrastAndPrefix) {
  const auto p = build_prompts("bright");
  EXPECT_EQ(p.rendered_target(), "this sound is bright");
  EXPECT_EQ(p.rendered_contrast(), "this sound is NOT bright");
  const auto q = build_prompts("bright", "dark");
  EXPECT_EQ(q.rendered_contrast(), "this sound is dark");
  EXPECT_THROW(build_prompts(""), InvalidArgument);
  EXPECT_EQ(parse_variant("directional"), LossVariant::directional);
  EXPECT_THROW(parse_variant("euclidean"), InvalidArgument);
}

TEST(Prompts, DegeneratePairIsDetected) {
  EXPECT_THROW(check_prompt_pair(build_prompts("bright", "bright"), backend()), DegeneratePromptError);
  // filler words do not change the surrogate embedding
  EXPECT_THROW(check_prompt_pair(build_prompts("bright", "very bright"), backend()), DegeneratePromptError);
  EXPECT_NO_THROW(check_prompt_pair(build_prompts("bright"), backend()));
}

TEST(Optimize, ShapesAndSelection) {
  const auto audio = testsig::pink_noise(0.25, 48000, 1);
  const auto r = optimize(audio, build_prompts("bright"), FxChain::parse("eq"), small_config(4), backend());
  ASSERT_EQ(r.loss_traces.size(), 3u);
  for (const auto& t : r.loss_traces) {
    ASSERT_EQ(t.size(), 12u);
    for (int i = 0; i < 12; ++i) EXPECT_EQ(t[i].iteration, i);
  }
  ASSERT_EQ(r.final_losses.size(), 3u);
  ASSERT_EQ(r.initial_losses.size(), 3u);
  EXPECT_EQ(r.chosen_run, select_best_run(r.final_losses));
  EXPECT_EQ(r.raw_params.values, r.run_params[r.chosen_run].values);
  EXPECT_EQ(r.raw_params.size(), 18u);
  EXPECT_EQ(r.effected_audio.size(), audio.size());

  const FxProcessor proc(r.chain, r.reverb_noise_seed);
  const double chosen =
      evaluate_loss(audio, r.prompts, proc, r.raw_params, LossVariant::cosine, backend());
  EXPECT_NEAR(chosen, r.final_losses[r.chosen_run], 1e-12);
  const auto rendered = proc.render(audio, r.raw_params);
  EXPECT_EQ(rendered.samples, r.effected_audio.samples);
}

TEST(Optimize, SameSeedSameResultParallelOrNot) {
  const auto audio = testsig::pink_noise(0.25, 48000, 2);
  auto c = small_config(21);
  const auto a = optimize(audio, build_prompts("muffled"), FxChain::parse("eq"), c, backend());
  c.parallel_runs = false;
  const auto b = optimize(audio, build_prompts("muffled"), FxChain::parse("eq"), c, backend());
  EXPECT_EQ(a.final_losses, b.final_losses);
  EXPECT_EQ(a.raw_params.values, b.raw_params.values);
  c.seed = 22;
  const auto d = optimize(audio, build_prompts("muffled"), FxChain::parse("eq"), c, backend());
  EXPECT_NE(a.raw_params.values, d.raw_params.values);
}

TEST(Optimize, RunsAreIndependentOfRunCount) {
  const auto audio = testsig::pink_noise(0.25, 48000, 2);
  auto c = small_config(8);
  const auto three = optimize(audio, build_prompts("warm"), FxChain::parse("eq"), c, backend());
  c.runs = 1;
  const auto one = optimize(audio, build_prompts("warm"), FxChain::parse("eq"), c, backend());
  EXPECT_EQ(one.run_params[0].values, three.run_params[0].values);
}

TEST(Optimize, DescendsOnAverage) {
  const auto audio = testsig::pink_noise(0.5, 48000, 3);
  auto c = small_config(1);
  c.iterations = 60;
  c.max_shift_ms = 0.0;
  const auto r = optimize(audio, build_prompts("bright"), FxChain::parse("eq"), c, backend());
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(r.final_losses[i], r.initial_losses[i]);
}

TEST(Optimize, EarlyStopTruncatesTraces) {
  const auto audio = testsig::pink_noise(0.25, 48000, 3);
  auto c = small_config(2);
  c.iterations = 200;
  c.learning_rate = 0.5;
  c.early_stop_patience = 3;
  const auto r = optimize(audio, build_prompts("bright"), FxChain::parse("eq"), c, backend());
  bool any_short = false;
  for (const auto& t : r.loss_traces) {
    ASSERT_GE(t.size(), 1u);
    ASSERT_LE(t.size(), 200u);
    if (t.size() < 200) {
      any_short = true;
      double best = t.front().loss;
      std::size_t best_at = 0;
      for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i].loss < best) best = t[i].loss, best_at = i;
      }
      EXPECT_EQ(t.size() - 1 - best_at, 3u);
    }
  }
  EXPECT_TRUE(any_short);
}

TEST(Optimize, ProgressSeesEveryIteration) {
  const auto audio = testsig::pink_noise(0.25, 48000, 4);
  std::mutex m;
  std::vector<int> seen(3, 0);
  optimize(audio, build_prompts("bright"), FxChain::parse("eq"), small_config(3), backend(),
           [&](const Progress& p) {
             std::lock_guard l(m);
             ++seen.at(p.run);
           });
  EXPECT_EQ(seen, (std::vector<int>{12, 12, 12}));
}

TEST(Optimize, DirectionalVariantRuns) {
  const auto audio = testsig::pink_noise(0.25, 48000, 5);
  auto c = small_config(6);
  c.variant = LossVariant::directional;
  const auto r = optimize(audio, build_prompts("bright"), FxChain::parse("eq"), c, backend());
  for (double l : r.final_losses) {
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, 2.0);
  }
  EXPECT_THROW(optimize(audio, build_prompts("bright", "bright"), FxChain::parse("eq"), c, backend()),
               DegeneratePromptError);
}

TEST(Optimize, RejectsWrongRate) {
  const auto audio = testsig::pink_noise(0.25, 44100, 5);
  EXPECT_THROW(optimize(audio, build_prompts("bright"), FxChain::parse("eq"), small_config(1), backend()),
               InvalidArgument);
}
