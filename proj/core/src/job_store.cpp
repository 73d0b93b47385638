#include "promptfx/job_store.hpp"

#include "promptfx/errors.hpp"
#include "promptfx/util.hpp"

namespace promptfx {

std::string_view job_status_name(JobStatus s) {
  switch (s) {
    case JobStatus::queued: return "queued";
    case JobStatus::running: return "running";
    case JobStatus::done: return "done";
    case JobStatus::failed: return "failed";
  }
  return "failed";
}

JobStore::JobStore(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw IoError("cannot create " + root_.string() + ": " + ec.message());
}

bool JobStore::create(const std::string& id, OrderedJson request) {
  std::lock_guard lock(mutex_);
  if (jobs_.count(id)) return false;
  Job job;
  job.id = id;
  job.request = std::move(request);
  job.dir = root_ / id;
  std::filesystem::create_directories(job.dir);
  persist(jobs_.emplace(id, std::move(job)).first->second);
  return true;
}

std::optional<Job> JobStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

Job& JobStore::at(const std::string& id) {
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw InvalidArgument("unknown job " + id);
  return it->second;
}

void JobStore::mark_running(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto& job = at(id);
  if (job.status != JobStatus::queued) throw InvalidArgument("job " + id + " is not queued");
  job.status = JobStatus::running;
  persist(job);
}

void JobStore::report(const std::string& id, const JobProgress& latest,
                      const std::vector<std::pair<std::size_t, double>>& points) {
  std::lock_guard lock(mutex_);
  auto& job = at(id);
  if (job.status != JobStatus::running) throw InvalidArgument("job " + id + " is not running");
  for (const auto& [run, loss] : points) {
    if (job.loss_trace.size() <= run) job.loss_trace.resize(run + 1);
    job.loss_trace[run].push_back(loss);
  }
  job.progress = latest;
  persist(job);
}

void JobStore::complete(const std::string& id, std::vector<std::string> artifacts, OrderedJson summary,
                        std::vector<std::vector<double>> trace) {
  std::lock_guard lock(mutex_);
  auto& job = at(id);
  if (job.status != JobStatus::running) throw InvalidArgument("job " + id + " is not running");
  job.status = JobStatus::done;
  job.artifacts = std::move(artifacts);
  job.summary = std::move(summary);
  job.loss_trace = std::move(trace);
  persist(job);
}

void JobStore::fail(const std::string& id, std::string reason, std::string message) {
  std::lock_guard lock(mutex_);
  auto& job = at(id);
  if (job.status == JobStatus::done || job.status == JobStatus::failed) {
    throw InvalidArgument("job " + id + " already finished");
  }
  job.status = JobStatus::failed;
  job.failure_reason = std::move(reason);
  job.failure_message = std::move(message);
  persist(job);
}

std::size_t JobStore::writes() const {
  std::lock_guard lock(mutex_);
  return writes_;
}

OrderedJson JobStore::to_json(const Job& job) {
  OrderedJson j = {{"id", job.id}, {"status", job_status_name(job.status)}};
  if (job.progress) {
    j["progress"] = {{"run", job.progress->run}, {"iteration", job.progress->iteration}, {"loss", job.progress->loss}};
  } else {
    j["progress"] = nullptr;
  }
  j["request"] = job.request;
  j["loss_trace"] = job.loss_trace;
  if (job.status == JobStatus::done) {
    OrderedJson links = OrderedJson::object();
    for (const auto& a : job.artifacts) links[a] = "/v1/jobs/" + job.id + "/artifacts/" + a;
    j["artifacts"] = links;
    j["result"] = job.summary;
  }
  if (job.status == JobStatus::failed) {
    j["error"] = {{"reason", job.failure_reason}, {"message", job.failure_message}};
  }
  return j;
}

void JobStore::persist(const Job& job) {
  ++writes_;
  write_text_file(job.dir / "job.json", to_json(job).dump(2) + "\n");
}

}  // namespace promptfx
