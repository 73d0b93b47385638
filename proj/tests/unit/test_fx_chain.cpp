#include <gtest/gtest.h>

#include <future>

#include "oracles.hpp"
#include "promptfx/errors.hpp"
#include "promptfx/fx_chain.hpp"
#include "promptfx/optimizer.hpp"
#include "signals.hpp"

using namespace promptfx;

namespace {

RawParams draw(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  return draw_standard_normal(n, rng);
}

}  // namespace

TEST(FxChain, ParsesSupportedNames) {
  EXPECT_EQ(FxChain::parse("eq").stages, std::vector{EffectKind::parametric_eq6});
  EXPECT_EQ(FxChain::parse("reverb").stages, std::vector{EffectKind::noise_shaped_reverb});
  EXPECT_EQ(FxChain::parse("eq-reverb").stages,
            (std::vector{EffectKind::parametric_eq6, EffectKind::noise_shaped_reverb}));
  EXPECT_TRUE(FxChain::parse("none").stages.empty());
  EXPECT_EQ(FxChain::parse("eq-reverb").name(), "eq-reverb");
  EXPECT_EQ(FxChain::supported_names(), (std::vector<std::string>{"eq", "reverb", "eq-reverb"}));
}

TEST(FxChain, UnknownChainListsSupported) {
  try {
    FxChain::parse("flanger");
    FAIL();
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("flanger"), std::string::npos);
    EXPECT_NE(msg.find("eq-reverb"), std::string::npos);
  }
  EXPECT_THROW(FxChain::parse(""), InvalidArgument);
}

TEST(FxChain, ParameterCounts) {
  EXPECT_EQ(FxProcessor(FxChain::parse("eq")).parameter_count(), 18u);
  EXPECT_EQ(FxProcessor(FxChain::parse("reverb")).parameter_count(), 23u);
  EXPECT_EQ(FxProcessor(FxChain::parse("eq-reverb")).parameter_count(), 41u);
  EXPECT_EQ(FxProcessor(FxChain::parse("none")).parameter_count(), 0u);
}

TEST(FxChain, EmptyChainIsIdentity) {
  const auto x = testsig::sine(300, 0.1, 48000);
  EXPECT_EQ(FxProcessor(FxChain::parse("none")).render(x, {}).samples, x.samples);
}

TEST(FxChain, StagesApplyInOrder) {
  const auto x = testsig::vowel(0.3, 48000);
  const FxProcessor both(FxChain::parse("eq-reverb"));
  const FxProcessor eq(FxChain::parse("eq"));
  const FxProcessor rv(FxChain::parse("reverb"));
  const auto raw = draw(41, 4);
  RawParams a, b;
  a.values.assign(raw.values.begin(), raw.values.begin() + 18);
  b.values.assign(raw.values.begin() + 18, raw.values.end());
  const auto y = both.render(x, raw);
  const auto z = rv.render(eq.render(x, a), b);
  EXPECT_EQ(y.samples, z.samples);

  RawParams swapped;
  swapped.values = b.values;
  swapped.values.insert(swapped.values.end(), a.values.begin(), a.values.end());
  const auto w = FxProcessor(FxChain::parse("reverb-eq")).render(x, swapped);
  EXPECT_NE(y.samples, w.samples);
}

TEST(FxChain, RawRenderEqualsMappedRender) {
  const auto x = testsig::white_noise(0.2, 48000, 2);
  const FxProcessor p(FxChain::parse("eq-reverb"));
  const auto raw = draw(41, 8);
  EXPECT_EQ(p.render(x, raw).samples, p.render_mapped(x, p.map(raw)).samples);
}

TEST(FxChain, RenderPreservesLengthAndRate) {
  const auto x = testsig::white_noise(0.123, 44100, 2);
  const FxProcessor p(FxChain::parse("eq-reverb"));
  const auto y = p.render(x, draw(41, 1));
  EXPECT_EQ(y.size(), x.size());
  EXPECT_EQ(y.sample_rate, x.sample_rate);
}

TEST(FxChain, ConcurrentRendersAgree) {
  const auto x = testsig::pink_noise(0.2, 48000, 6);
  const FxProcessor p(FxChain::parse("eq-reverb"));
  const auto raw = draw(41, 3);
  const auto ref = p.render(x, raw).samples;
  std::vector<std::future<std::vector<double>>> fs;
  for (int i = 0; i < 4; ++i) fs.push_back(std::async(std::launch::async, [&] { return p.render(x, raw).samples; }));
  for (auto& f : fs) EXPECT_EQ(f.get(), ref);
}

TEST(FxChain, WrongParameterCountThrows) {
  const auto x = testsig::white_noise(0.05, 48000, 2);
  EXPECT_THROW(FxProcessor(FxChain::parse("eq")).render(x, draw(17, 1)), InvalidArgument);
}
