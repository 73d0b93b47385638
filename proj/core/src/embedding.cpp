#include "promptfx/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "promptfx/errors.hpp"

namespace promptfx {
namespace {

constexpr double kMinNorm = 1e-12;

bool blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Embedding EmbeddingBackend::embed_text(std::string_view text) const {
  if (blank(text)) throw InvalidArgument("embed_text: empty text");
  auto v = text_vector(text);
  if (v.size() != descriptor().dimension) throw BackendError("embed_text: backend returned wrong dimension");
  const double n = norm(v);
  if (!(n > kMinNorm)) throw BackendError("embed_text: backend returned a zero vector");
  for (double& x : v) x /= n;
  return {std::move(v), Modality::text};
}

std::span<const double> EmbeddingBackend::checked_window(const AudioBuffer& audio, std::size_t& offset) const {
  if (audio.empty()) throw InvalidArgument("embed_audio: empty buffer");
  validate(audio);
  const auto& d = descriptor();
  if (std::abs(audio.sample_rate - d.input_sample_rate) > 1e-9) {
    throw InvalidArgument("embed_audio: expected " + std::to_string(d.input_sample_rate) + " Hz input, got " +
                          std::to_string(audio.sample_rate) + " Hz (resample first)");
  }
  const auto max_len = static_cast<std::size_t>(std::floor(d.max_input_seconds * d.input_sample_rate));
  offset = 0;
  std::size_t len = audio.size();
  if (max_len > 0 && len > max_len) {
    offset = (len - max_len) / 2;
    len = max_len;
  }
  return std::span<const double>(audio.samples).subspan(offset, len);
}

Embedding EmbeddingBackend::embed_audio(const AudioBuffer& audio) const {
  std::size_t offset = 0;
  const auto window = checked_window(audio, offset);
  auto v = audio_vector(window);
  if (v.size() != descriptor().dimension) throw BackendError("embed_audio: backend returned wrong dimension");
  const double n = norm(v);
  if (!(n > kMinNorm)) throw BackendError("embed_audio: audio has no usable spectral shape (zero embedding)");
  for (double& x : v) x /= n;
  return {std::move(v), Modality::audio};
}

AudioEmbeddingLinearization EmbeddingBackend::linearize_audio(const AudioBuffer& audio) const {
  if (!descriptor().differentiable_audio) throw BackendError("backend " + descriptor().name + " is not differentiable");
  std::size_t offset = 0;
  const auto window = checked_window(audio, offset);
  auto raw = audio_linearization(window);
  if (raw.vector.size() != descriptor().dimension) throw BackendError("embed_audio: backend returned wrong dimension");
  const double n = norm(raw.vector);
  if (!(n > kMinNorm)) throw BackendError("embed_audio: audio has no usable spectral shape (zero embedding)");

  Embedding e{raw.vector, Modality::audio};
  for (double& x : e.values) x /= n;

  auto pullback = [unit = e.values, n, inner = std::move(raw.pullback), offset, window_len = window.size(),
                   total = audio.size()](std::span<const double> grad) {
    if (grad.size() != unit.size()) throw InvalidArgument("embedding pullback: dimension mismatch");
    // Through e = v / |v|: dv = (de - e (e . de)) / |v|.
    const double proj = dot(unit, grad);
    std::vector<double> dv(unit.size());
    for (std::size_t i = 0; i < unit.size(); ++i) dv[i] = (grad[i] - unit[i] * proj) / n;
    const auto dwin = inner(dv);
    std::vector<double> out(total, 0.0);
    std::copy_n(dwin.begin(), std::min(window_len, dwin.size()), out.begin() + static_cast<long>(offset));
    return out;
  };
  return {std::move(e), std::move(pullback)};
}

std::shared_ptr<const EmbeddingBackend> make_backend(std::string_view name, const BackendOptions& options) {
  if (name == "surrogate") return std::make_shared<SurrogateBackend>();
  if (name == "pretrained") {
    std::optional<std::filesystem::path> checkpoint = options.checkpoint;
    if (!checkpoint) {
      if (const char* env = std::getenv(kCheckpointEnv); env && *env) checkpoint = env;
    }
    if (!checkpoint) {
      throw BackendError(std::string("pretrained backend needs a checkpoint (set ") + kCheckpointEnv + ")");
    }
    const char* python = std::getenv(kPythonEnv);
    const char* bridge = std::getenv(kBridgeEnv);
    BridgeBackend::Options opts;
    opts.command = {python && *python ? python : "python3", bridge && *bridge ? bridge : PROMPTFX_DEFAULT_BRIDGE,
                    "--checkpoint", checkpoint->string()};
    return std::make_shared<BridgeBackend>(std::move(opts));
  }
  throw InvalidArgument("unknown backend '" + std::string(name) + "' (supported: surrogate, pretrained)");
}

}  // namespace promptfx
