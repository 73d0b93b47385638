#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "promptfx/params_json.hpp"

namespace promptfx {

enum class JobStatus { queued, running, done, failed };

std::string_view job_status_name(JobStatus s);

struct JobProgress {
  std::size_t run = 0;
  int iteration = 0;
  double loss = 0.0;
};

struct Job {
  std::string id;
  JobStatus status = JobStatus::queued;
  std::optional<JobProgress> progress;
  OrderedJson request;                          // echo of the validated request
  std::vector<std::vector<double>> loss_trace;  // per run, as reported so far
  std::vector<std::string> artifacts;           // file names inside dir, once done
  OrderedJson summary;                          // final losses etc., once done
  std::string failure_reason;                   // machine-readable, once failed
  std::string failure_message;
  std::filesystem::path dir;
};

/// In-memory job table mirrored to <dir>/job.json on every write. All
/// mutations go through one lock; status may only move
/// queued -> running -> done | failed, and finished jobs never change.
class JobStore {
 public:
  explicit JobStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Registers a queued job. Returns false (and leaves the table alone) if the
  /// id already exists.
  bool create(const std::string& id, OrderedJson request);
  std::optional<Job> get(const std::string& id) const;
  std::filesystem::path dir_of(const std::string& id) const { return root_ / id; }

  void mark_running(const std::string& id);
  /// Appends trace points (run, loss) and records the latest progress.
  void report(const std::string& id, const JobProgress& latest,
              const std::vector<std::pair<std::size_t, double>>& points);
  /// Finishes a running job; `trace` replaces the streamed loss trace.
  void complete(const std::string& id, std::vector<std::string> artifacts, OrderedJson summary,
                std::vector<std::vector<double>> trace);
  void fail(const std::string& id, std::string reason, std::string message);

  /// Number of store writes so far (for tests of the progress throttle).
  std::size_t writes() const;

  static OrderedJson to_json(const Job& job);

 private:
  Job& at(const std::string& id);
  void persist(const Job& job);

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::map<std::string, Job> jobs_;
  std::size_t writes_ = 0;
};

}  // namespace promptfx
