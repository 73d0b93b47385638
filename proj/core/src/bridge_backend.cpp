#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <json.hpp>

#include "promptfx/embedding.hpp"
#include "promptfx/errors.hpp"

namespace promptfx {
namespace {

using Json = nlohmann::json;

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BackendError(std::string("bridge: write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::vector<double> as_vector(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw BackendError(std::string("bridge: reply lacks ") + key);
  return j.at(key).get<std::vector<double>>();
}

}  // namespace

BridgeBackend::BridgeBackend(Options options) {
  if (options.command.empty()) throw BackendError("bridge: empty command");
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw BackendError("bridge: pipe() failed");

  // argv must be built before fork.
  std::vector<char*> argv;
  for (auto& a : options.command) argv.push_back(a.data());
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw BackendError("bridge: fork() failed");
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execvp(argv[0], argv.data());
    _exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  try {
    const auto reply = Json::parse(call(R"({"op":"describe"})"));
    descriptor_.name = reply.value("name", std::string("pretrained"));
    descriptor_.dimension = reply.at("dimension").get<std::size_t>();
    descriptor_.input_sample_rate = reply.at("sample_rate").get<double>();
    descriptor_.max_input_seconds = reply.at("max_seconds").get<double>();
    descriptor_.differentiable_audio = reply.value("differentiable_audio", true);
  } catch (const Json::exception& e) {
    throw BackendError(std::string("bridge: bad describe reply: ") + e.what());
  }
}

BridgeBackend::~BridgeBackend() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == 0) {
      ::kill(pid_, SIGTERM);
      ::waitpid(pid_, &status, 0);
    }
  }
}

std::string BridgeBackend::call(const std::string& request) const {
  std::lock_guard lock(mutex_);
  write_all(to_child_, request + "\n");
  for (;;) {
    if (const auto nl = pending_.find('\n'); nl != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      const auto reply = Json::parse(line, nullptr, false);
      if (reply.is_discarded()) throw BackendError("bridge: malformed reply");
      if (reply.contains("error")) throw BackendError("bridge: " + reply.at("error").get<std::string>());
      return line;
    }
    char buf[65536];
    const auto n = ::read(from_child_, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw BackendError("bridge: helper process exited");
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

std::vector<double> BridgeBackend::text_vector(std::string_view text) const {
  const Json req{{"op", "text"}, {"text", std::string(text)}};
  return as_vector(Json::parse(call(req.dump())), "embedding");
}

std::vector<double> BridgeBackend::audio_vector(std::span<const double> samples) const {
  const Json req{{"op", "audio"}, {"samples", std::vector<double>(samples.begin(), samples.end())}};
  return as_vector(Json::parse(call(req.dump())), "embedding");
}

EmbeddingBackend::RawLinearization BridgeBackend::audio_linearization(std::span<const double> samples) const {
  auto copy = std::make_shared<const std::vector<double>>(samples.begin(), samples.end());
  auto vec = audio_vector(samples);
  auto pullback = [this, copy](std::span<const double> grad) {
    const Json req{{"op", "audio_vjp"}, {"samples", *copy}, {"grad", std::vector<double>(grad.begin(), grad.end())}};
    auto out = as_vector(Json::parse(call(req.dump())), "grad_samples");
    if (out.size() != copy->size()) throw BackendError("bridge: gradient length mismatch");
    return out;
  };
  return {std::move(vec), std::move(pullback)};
}

}  // namespace promptfx
