#pragma once

#include <vector>

#include "promptfx/embedding.hpp"

namespace promptfx {

/// Added to |dA| in the directional loss denominator.
inline constexpr double kDirectionalEpsilon = 1e-8;
/// Text displacements shorter than this mean the prompt pair is degenerate.
inline constexpr double kDegenerateTextDistance = 1e-8;

struct LossWithGradient {
  double value = 0.0;
  std::vector<double> grad;  // w.r.t. the optimized (effected) audio embedding
};

/// 1 - <audio, text>, in [0, 2] for unit vectors.
double cosine_loss(const Embedding& audio, const Embedding& text);
LossWithGradient cosine_loss_with_grad(const Embedding& audio, const Embedding& text);

/// Misalignment between the audio displacement (a2 - a1) and the text
/// displacement (t2 - t1):
///   1 - <dA, dT / |dT|> / (|dA| + eps)
/// Throws DegeneratePromptError when |t2 - t1| < kDegenerateTextDistance.
double directional_loss(const Embedding& a1, const Embedding& a2, const Embedding& t1, const Embedding& t2);
/// Gradient is taken w.r.t. a2.
LossWithGradient directional_loss_with_grad(const Embedding& a1, const Embedding& a2, const Embedding& t1,
                                            const Embedding& t2);

}  // namespace promptfx
