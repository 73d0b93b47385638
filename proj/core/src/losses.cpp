#include "promptfx/losses.hpp"

#include <cmath>

#include "promptfx/errors.hpp"

namespace promptfx {
namespace {

void require_same_dimension(std::initializer_list<const Embedding*> es) {
  const auto d = (*es.begin())->dimension();
  for (const auto* e : es) {
    if (e->dimension() != d) throw InvalidArgument("loss: embedding dimension mismatch");
  }
}

std::vector<double> difference(const Embedding& to, const Embedding& from) {
  std::vector<double> d(to.dimension());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = to.values[i] - from.values[i];
  return d;
}

}  // namespace

double cosine_loss(const Embedding& audio, const Embedding& text) {
  require_same_dimension({&audio, &text});
  return 1.0 - dot(audio.values, text.values);
}

LossWithGradient cosine_loss_with_grad(const Embedding& audio, const Embedding& text) {
  LossWithGradient out;
  out.value = cosine_loss(audio, text);
  out.grad.resize(text.dimension());
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] = -text.values[i];
  return out;
}

double directional_loss(const Embedding& a1, const Embedding& a2, const Embedding& t1, const Embedding& t2) {
  return directional_loss_with_grad(a1, a2, t1, t2).value;
}

LossWithGradient directional_loss_with_grad(const Embedding& a1, const Embedding& a2, const Embedding& t1,
                                            const Embedding& t2) {
  require_same_dimension({&a1, &a2, &t1, &t2});
  const auto da = difference(a2, a1);
  const auto dt = difference(t2, t1);
  const double nt = norm(dt);
  if (nt < kDegenerateTextDistance) {
    throw DegeneratePromptError("target and contrast prompts have identical embeddings");
  }
  std::vector<double> ut(dt.size());
  for (std::size_t i = 0; i < dt.size(); ++i) ut[i] = dt[i] / nt;
  const double na = norm(da);
  const double denom = na + kDirectionalEpsilon;
  const double inner = dot(da, ut);

  LossWithGradient out;
  out.value = 1.0 - inner / denom;
  // d/d(dA) of -<dA,u>/(|dA|+eps); the second term vanishes when dA = 0.
  out.grad.resize(da.size());
  const double radial = na > 0.0 ? inner / (na * denom * denom) : 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) out.grad[i] = -ut[i] / denom + radial * da[i];
  return out;
}

}  // namespace promptfx
