#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "promptfx/embedding.hpp"
#include "promptfx/job_store.hpp"
#include "promptfx/optimizer.hpp"

namespace promptfx {

struct ServiceOptions {
  std::filesystem::path data_dir = "promptfx-jobs";
  /// Jobs executed at once; the rest wait in FIFO order.
  int workers = 1;
  /// Largest accepted audio upload, in bytes.
  std::size_t max_upload_bytes = 64u << 20;
  std::string cors_origin = "*";
  /// Defaults for fields a job request leaves out. seed is ignored: requests
  /// without a seed get a fresh one, echoed in the job.
  OptimizationConfig defaults;
  /// Minimum spacing between progress writes to the job store.
  std::chrono::milliseconds progress_interval{100};
  std::string backend_name = "surrogate";
};

/// HTTP facade:
///   POST /v1/jobs                      multipart: audio, prompt, chain, variant?, contrast?,
///                                      iterations?, runs?, learning_rate?, seed?, max_shift_ms?
///   GET  /v1/jobs/{id}
///   GET  /v1/jobs/{id}/artifacts/{name}
///   POST /v1/render                    multipart: audio, params
///   GET  /v1/chains
class Service {
 public:
  Service(ServiceOptions options, std::shared_ptr<const EmbeddingBackend> backend);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listening socket; port 0 picks a free one. Returns the port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires bind().
  void run();
  void stop();

  JobStore& store();
  /// Polls until the job leaves queued/running or the timeout expires.
  std::optional<Job> wait_for(const std::string& id, std::chrono::milliseconds timeout);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace promptfx
