#include "promptfx/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <condition_variable>
#include <deque>
#include <random>
#include <thread>

#include "promptfx/artifacts.hpp"
#include "promptfx/errors.hpp"
#include "promptfx/util.hpp"

namespace promptfx {

namespace {

constexpr const char* kInputWav = "input.wav";

struct HttpError {
  int status;
  std::string code;
  std::string message;
  std::string field;
  OrderedJson extra = OrderedJson::object();
};

void send_json(httplib::Response& res, int status, const OrderedJson& body) {
  res.status = status;
  res.set_content(body.dump(2), "application/json");
}

void send_error(httplib::Response& res, const HttpError& e) {
  OrderedJson err = {{"code", e.code}, {"message", e.message}};
  if (!e.field.empty()) err["field"] = e.field;
  for (const auto& [k, v] : e.extra.items()) err[k] = v;
  send_json(res, e.status, {{"error", err}});
}

std::optional<std::string> form_value(const httplib::Request& req, const std::string& name) {
  if (req.has_file(name)) return req.get_file_value(name).content;
  if (req.has_param(name)) return req.get_param_value(name);
  return std::nullopt;
}

template <typename T>
std::optional<T> number_field(const httplib::Request& req, const std::string& name) {
  const auto text = form_value(req, name);
  if (!text || text->empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    T v{};
    if constexpr (std::is_floating_point_v<T>) {
      v = static_cast<T>(std::stod(*text, &used));
    } else if constexpr (std::is_unsigned_v<T>) {
      if (text->front() == '-') throw std::invalid_argument("negative");
      v = static_cast<T>(std::stoull(*text, &used));
    } else {
      v = static_cast<T>(std::stoll(*text, &used));
    }
    if (used != text->size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw HttpError{400, "invalid_field", "field '" + name + "' must be a number", name};
  }
}

AudioBuffer decode_upload(const std::string& bytes, std::size_t cap) {
  if (bytes.size() > cap) {
    throw HttpError{413, "payload_too_large",
                    "audio upload exceeds " + std::to_string(cap) + " bytes", "audio",
                    {{"max_bytes", cap}}};
  }
  try {
    return decode_wav(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  } catch (const Error& e) {
    throw HttpError{400, "invalid_audio", e.what(), "audio"};
  }
}

std::string failure_reason(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const DegeneratePromptError&) {
    return "degenerate_prompt";
  } catch (const IoError&) {
    return "io_error";
  } catch (const BackendError&) {
    return "backend_error";
  } catch (const InvalidArgument&) {
    return "invalid_argument";
  } catch (...) {
    return "internal_error";
  }
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  std::shared_ptr<const EmbeddingBackend> backend;
  JobStore store;
  httplib::Server server;
  bool bound = false;

  std::mutex queue_mutex;
  std::condition_variable queue_cv;
  std::deque<std::string> queue;
  bool stopping = false;
  std::vector<std::thread> workers;

  Impl(ServiceOptions o, std::shared_ptr<const EmbeddingBackend> b)
      : options(std::move(o)), backend(std::move(b)), store(options.data_dir) {
    if (!backend) throw InvalidArgument("service: backend required");
    if (options.workers < 1) throw InvalidArgument("service: workers must be >= 1");
    routes();
    for (int i = 0; i < options.workers; ++i) workers.emplace_back([this] { work(); });
  }

  ~Impl() {
    {
      std::lock_guard lock(queue_mutex);
      stopping = true;
    }
    queue_cv.notify_all();
    server.stop();
    for (auto& t : workers) t.join();
  }

  void routes() {
    server.set_payload_max_length(options.max_upload_bytes + (1u << 20));
    server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string msg = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        msg = e.what();
      } catch (...) {
      }
      spdlog::error("service: unhandled exception: {}", msg);
      send_error(res, {500, "internal_error", msg, ""});
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 413) {
        send_error(res, {413, "payload_too_large", "request body too large", ""});
      } else if (res.status == 404) {
        send_error(res, {404, "not_found", "no such resource", ""});
      }
    });

    auto guarded = [](auto fn) {
      return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
          fn(req, res);
        } catch (const HttpError& e) {
          send_error(res, e);
        }
      };
    };

    server.Get("/v1/chains", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, chains_schema());
    });
    server.Post("/v1/jobs", guarded([this](const httplib::Request& req, httplib::Response& res) { create_job(req, res); }));
    server.Get(R"(/v1/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto job = store.get(req.matches[1]);
      if (!job) return send_error(res, {404, "unknown_job", "no job " + std::string(req.matches[1]), "id"});
      send_json(res, 200, JobStore::to_json(*job));
    });
    server.Get(R"(/v1/jobs/([^/]+)/artifacts/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      artifact(req.matches[1], req.matches[2], res);
    });
    server.Post("/v1/render", guarded([this](const httplib::Request& req, httplib::Response& res) { render(req, res); }));
  }

  void create_job(const httplib::Request& req, httplib::Response& res) {
    const auto audio_bytes = form_value(req, "audio");
    if (!audio_bytes) throw HttpError{400, "missing_field", "multipart field 'audio' is required", "audio"};
    const auto audio = decode_upload(*audio_bytes, options.max_upload_bytes);

    const auto prompt = form_value(req, "prompt").value_or("");
    if (prompt.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw HttpError{400, "invalid_field", "prompt must not be empty", "prompt"};
    }
    const auto chain_name = form_value(req, "chain").value_or("");
    FxChain chain;
    const auto supported = FxChain::supported_names();
    if (std::find(supported.begin(), supported.end(), chain_name) == supported.end()) {
      std::string list;
      for (const auto& s : supported) list += (list.empty() ? "" : ", ") + s;
      throw HttpError{400, "invalid_field", "unsupported chain '" + chain_name + "'; supported: " + list, "chain",
                      {{"supported", supported}}};
    }
    chain = FxChain::parse(chain_name);

    OptimizationConfig config = options.defaults;
    try {
      config.variant = parse_variant(form_value(req, "variant").value_or("cosine"));
    } catch (const InvalidArgument& e) {
      throw HttpError{400, "invalid_field", e.what(), "variant"};
    }
    if (auto v = number_field<int>(req, "iterations")) config.iterations = *v;
    if (auto v = number_field<int>(req, "runs")) config.runs = *v;
    if (auto v = number_field<double>(req, "learning_rate")) config.learning_rate = *v;
    if (auto v = number_field<double>(req, "max_shift_ms")) config.max_shift_ms = *v;
    if (auto v = number_field<std::uint64_t>(req, "seed")) {
      config.seed = *v;
    } else {
      config.seed = std::random_device{}() | (static_cast<std::uint64_t>(std::random_device{}()) << 32);
    }
    try {
      config.validate();
    } catch (const InvalidArgument& e) {
      throw HttpError{400, "invalid_field", e.what(), ""};
    }

    const auto contrast = form_value(req, "contrast");
    PromptSpec prompts;
    try {
      prompts = contrast && !contrast->empty() ? build_prompts(prompt, *contrast) : build_prompts(prompt);
      if (config.variant == LossVariant::directional) check_prompt_pair(prompts, *backend);
    } catch (const DegeneratePromptError& e) {
      throw HttpError{422, "degenerate_prompt", e.what(), "contrast"};
    } catch (const InvalidArgument& e) {
      throw HttpError{400, "invalid_field", e.what(), "prompt"};
    }

    OrderedJson request = {
        {"prompt", prompts.target_text},
        {"contrast", prompts.contrast_text},
        {"chain", chain.name()},
        {"variant", variant_name(config.variant)},
        {"iterations", config.iterations},
        {"runs", config.runs},
        {"learning_rate", config.learning_rate},
        {"max_shift_ms", config.max_shift_ms},
        {"seed", config.seed},
        {"audio_sha256", sha256_hex(*audio_bytes)},
        {"audio_sample_rate", audio.sample_rate},
        {"audio_samples", audio.size()},
        {"backend", options.backend_name},
    };
    const std::string id = sha256_hex(request.dump()).substr(0, 20);
    const bool fresh = !store.get(id).has_value();
    if (fresh) {
      std::filesystem::create_directories(store.dir_of(id));
      write_text_file(store.dir_of(id) / kInputWav, *audio_bytes);
      if (store.create(id, request)) {
        {
          std::lock_guard lock(queue_mutex);
          queue.push_back(id);
        }
        queue_cv.notify_one();
      }
    }
    send_json(res, 202, {{"id", id}, {"status_url", "/v1/jobs/" + id}});
  }

  void artifact(const std::string& id, const std::string& name, httplib::Response& res) {
    const auto job = store.get(id);
    if (!job) return send_error(res, {404, "unknown_job", "no job " + id, "id"});
    if (job->status != JobStatus::done) {
      return send_error(res, {404, "not_ready", "job " + id + " has no artifacts yet", "id"});
    }
    if (std::find(job->artifacts.begin(), job->artifacts.end(), name) == job->artifacts.end()) {
      return send_error(res, {404, "unknown_artifact", "job " + id + " has no artifact '" + name + "'", "name"});
    }
    std::string type = "application/octet-stream";
    const auto ext = std::filesystem::path(name).extension();
    if (ext == ".wav") type = "audio/wav";
    if (ext == ".json") type = "application/json";
    if (ext == ".csv") type = "text/csv";
    res.set_content(read_text_file(job->dir / name), type);
    res.set_header("Content-Disposition", "attachment; filename=\"" + name + "\"");
  }

  void render(const httplib::Request& req, httplib::Response& res) {
    const auto audio_bytes = form_value(req, "audio");
    if (!audio_bytes) throw HttpError{400, "missing_field", "multipart field 'audio' is required", "audio"};
    const auto params_text = form_value(req, "params");
    if (!params_text) throw HttpError{400, "missing_field", "multipart field 'params' is required", "params"};
    const auto audio = decode_upload(*audio_bytes, options.max_upload_bytes);
    OrderedJson doc;
    try {
      doc = OrderedJson::parse(*params_text);
    } catch (const std::exception& e) {
      throw HttpError{422, "schema_violation", std::string("params is not valid JSON: ") + e.what(), "params"};
    }
    AudioBuffer out;
    try {
      out = render_from_params(audio, doc);
    } catch (const SchemaError& e) {
      throw HttpError{422, "schema_violation", e.what(), e.field()};
    } catch (const InvalidArgument& e) {
      throw HttpError{422, "schema_violation", e.what(), ""};
    }
    const auto wav = encode_wav(out, BitDepth::float32);
    res.status = 200;
    res.set_content(std::string(wav.begin(), wav.end()), "audio/wav");
  }

  void work() {
    for (;;) {
      std::string id;
      {
        std::unique_lock lock(queue_mutex);
        queue_cv.wait(lock, [this] { return stopping || !queue.empty(); });
        if (stopping) return;
        id = queue.front();
        queue.pop_front();
      }
      execute(id);
    }
  }

  void execute(const std::string& id) {
    store.mark_running(id);
    try {
      const auto job = *store.get(id);
      const auto& r = job.request;
      OptimizationConfig config = options.defaults;
      config.variant = parse_variant(r.at("variant").get<std::string>());
      config.iterations = r.at("iterations").get<int>();
      config.runs = r.at("runs").get<int>();
      config.learning_rate = r.at("learning_rate").get<double>();
      config.max_shift_ms = r.at("max_shift_ms").get<double>();
      config.seed = r.at("seed").get<std::uint64_t>();
      const auto prompts = build_prompts(r.at("prompt").get<std::string>(), r.at("contrast").get<std::string>());
      const auto chain = FxChain::parse(r.at("chain").get<std::string>());
      const auto audio = resample(load_audio(job.dir / kInputWav), backend->descriptor().input_sample_rate);

      std::mutex progress_mutex;
      std::vector<std::pair<std::size_t, double>> pending;
      auto last_write = std::chrono::steady_clock::now() - options.progress_interval;
      auto progress = [&](const Progress& p) {
        std::lock_guard lock(progress_mutex);
        pending.emplace_back(p.run, p.loss);
        const auto now = std::chrono::steady_clock::now();
        if (now - last_write < options.progress_interval) return;
        store.report(id, {p.run, p.iteration, p.loss}, pending);
        pending.clear();
        last_write = now;
      };
      const auto result = optimize(audio, prompts, chain, config, *backend, progress);
      write_run_artifacts(result, job.dir, options.backend_name);

      std::vector<std::vector<double>> trace;
      for (const auto& t : result.loss_traces) {
        auto& row = trace.emplace_back();
        for (const auto& p : t) row.push_back(p.loss);
      }
      OrderedJson summary = {{"chosen_run", result.chosen_run},
                             {"initial_losses", result.initial_losses},
                             {"final_losses", result.final_losses}};
      store.complete(id, {kEffectedWav, kParamsJson, kLossesCsv, kRunMetaJson, kInputWav}, std::move(summary),
                     std::move(trace));
    } catch (const std::exception& e) {
      const auto reason = failure_reason(std::current_exception());
      spdlog::warn("service: job {} failed ({}): {}", id, reason, e.what());
      store.fail(id, reason, e.what());
    }
  }
};

Service::Service(ServiceOptions options, std::shared_ptr<const EmbeddingBackend> backend)
    : impl_(std::make_unique<Impl>(std::move(options), std::move(backend))) {}

Service::~Service() = default;

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    port = impl_->server.bind_to_any_port(host);
    if (port < 0) throw IoError("cannot bind " + host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return port;
}

void Service::run() {
  if (!impl_->bound) throw InvalidArgument("service: bind() first");
  impl_->server.listen_after_bind();
}

void Service::stop() { impl_->server.stop(); }

JobStore& Service::store() { return impl_->store; }

std::optional<Job> Service::wait_for(const std::string& id, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    auto job = impl_->store.get(id);
    if (!job) return std::nullopt;
    if (job->status == JobStatus::done || job->status == JobStatus::failed) return job;
    if (std::chrono::steady_clock::now() >= deadline) return job;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace promptfx
