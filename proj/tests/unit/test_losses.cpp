#include <gtest/gtest.h>

#include <cmath>

#include "promptfx/errors.hpp"
#include "promptfx/losses.hpp"

using namespace promptfx;

namespace {

Embedding unit(std::vector<double> v, Modality m = Modality::audio) {
  const double n = norm(v);
  for (double& x : v) x /= n;
  return {v, m};
}

}  // namespace

TEST(CosineLoss, ReferenceValues) {
  const auto a = unit({1, 0, 0});
  EXPECT_NEAR(cosine_loss(a, unit({1, 0, 0}, Modality::text)), 0.0, 1e-12);
  EXPECT_NEAR(cosine_loss(a, unit({0, 1, 0}, Modality::text)), 1.0, 1e-12);
  EXPECT_NEAR(cosine_loss(a, unit({-1, 0, 0}, Modality::text)), 2.0, 1e-12);
  // 60 degrees
  EXPECT_NEAR(cosine_loss(a, unit({0.5, std::sqrt(3.0) / 2, 0}, Modality::text)), 0.5, 1e-12);
}

TEST(CosineLoss, GradientIsMinusText) {
  const auto a = unit({1, 2, 3});
  const auto t = unit({-1, 0, 2}, Modality::text);
  const auto g = cosine_loss_with_grad(a, t);
  EXPECT_NEAR(g.value, cosine_loss(a, t), 1e-15);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(g.grad[i], -t.values[i]);
}

TEST(CosineLoss, DimensionMismatchThrows) {
  EXPECT_THROW(cosine_loss(unit({1, 0}), unit({1, 0, 0})), InvalidArgument);
}

TEST(DirectionalLoss, AlignedOppositeOrthogonal) {
  const auto a1 = unit({1, 1, 0});
  const auto t1 = unit({0, 1, 1}, Modality::text);
  const auto t2 = unit({1, 0, 1}, Modality::text);  // dT = (1, -1, 0)/sqrt2
  // a2 - a1 parallel to dT
  auto a2 = a1;
  a2.values = {a1.values[0] + 0.1, a1.values[1] - 0.1, 0};
  EXPECT_NEAR(directional_loss(a1, a2, t1, t2), 0.0, 1e-7);
  a2.values = {a1.values[0] - 0.1, a1.values[1] + 0.1, 0};
  EXPECT_NEAR(directional_loss(a1, a2, t1, t2), 2.0, 1e-7);
  a2.values = {a1.values[0], a1.values[1], 0.2};
  EXPECT_NEAR(directional_loss(a1, a2, t1, t2), 1.0, 1e-12);
}

TEST(DirectionalLoss, InvariantToPositiveScalingOfTextDisplacement) {
  const auto a1 = unit({0.2, 0.9, -0.3, 0.1});
  const auto a2 = unit({0.5, 0.4, 0.1, -0.2});
  const auto t1 = unit({1, 0, 0, 0}, Modality::text);
  const auto t2 = unit({0, 1, 0.3, 0}, Modality::text);
  const double base = directional_loss(a1, a2, t1, t2);
  for (double s : {0.01, 0.5, 3.0, 100.0}) {
    Embedding t2s = t1;
    for (std::size_t i = 0; i < 4; ++i) t2s.values[i] = t1.values[i] + s * (t2.values[i] - t1.values[i]);
    EXPECT_NEAR(directional_loss(a1, a2, t1, t2s), base, 1e-9) << s;
  }
}

TEST(DirectionalLoss, DegeneratePromptsThrow) {
  const auto a1 = unit({1, 0});
  const auto a2 = unit({0, 1});
  const auto t = unit({1, 1}, Modality::text);
  EXPECT_THROW(directional_loss(a1, a2, t, t), DegeneratePromptError);
  EXPECT_THROW(directional_loss_with_grad(a1, a2, t, t), DegeneratePromptError);
}

TEST(DirectionalLoss, GradientMatchesFiniteDifference) {
  const auto a1 = unit({0.2, 0.9, -0.3, 0.1});
  const auto a2 = unit({0.5, 0.4, 0.1, -0.2});
  const auto t1 = unit({1, 0, 0, 0}, Modality::text);
  const auto t2 = unit({0, 1, 0.3, 0}, Modality::text);
  const auto g = directional_loss_with_grad(a1, a2, t1, t2);
  EXPECT_NEAR(g.value, directional_loss(a1, a2, t1, t2), 1e-15);
  const double h = 1e-6;
  for (std::size_t i = 0; i < 4; ++i) {
    auto p = a2, m = a2;
    p.values[i] += h;
    m.values[i] -= h;
    const double fd = (directional_loss(a1, p, t1, t2) - directional_loss(a1, m, t1, t2)) / (2 * h);
    EXPECT_NEAR(g.grad[i], fd, 1e-7);
  }
}
