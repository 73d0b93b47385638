#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>

#include "promptfx/artifacts.hpp"
#include "promptfx/batch.hpp"
#include "promptfx/errors.hpp"
#include "promptfx/service.hpp"
#include "promptfx/util.hpp"

namespace promptfx::cli {

namespace {

namespace fs = std::filesystem;

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) | rd();
}

struct UsageError : Error {
  using Error::Error;
};

struct BackendFlags {
  std::string name = "surrogate";
  std::optional<std::string> checkpoint;

  void add(CLI::App& app) {
    app.add_option("--backend", name, "Embedding backend")
        ->check(CLI::IsMember({"surrogate", "pretrained"}))
        ->capture_default_str();
    app.add_option("--checkpoint", checkpoint, "Checkpoint directory for the pretrained backend");
  }

  std::shared_ptr<const EmbeddingBackend> make() const {
    BackendOptions o;
    if (checkpoint) o.checkpoint = fs::path(*checkpoint);
    return make_backend(name, o);
  }
};

struct ConfigFlags {
  int iterations = 600;
  int runs = 3;
  double learning_rate = 1e-2;
  double max_shift_ms = 1500.0;
  std::optional<std::uint64_t> seed;
  int patience = 0;
  bool sequential = false;

  void add(CLI::App& app) {
    app.add_option("--iters", iterations, "Iterations per run")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--runs", runs, "Independent restarts")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--lr", learning_rate, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--max-shift-ms", max_shift_ms, "Largest random circular shift per iteration")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--seed", seed, "Seed for all randomness (default: OS entropy)");
    app.add_option("--early-stop", patience, "Stop a run after this many iterations without improvement (0: off)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_flag("--sequential", sequential, "Run restarts one after another");
  }

  OptimizationConfig make() const {
    OptimizationConfig c;
    c.iterations = iterations;
    c.runs = runs;
    c.learning_rate = learning_rate;
    c.max_shift_ms = max_shift_ms;
    c.seed = seed ? *seed : entropy_seed();
    c.early_stop_patience = patience;
    c.parallel_runs = !sequential;
    return c;
  }
};

FxChain parse_chain_flag(const std::string& name) {
  const auto supported = FxChain::supported_names();
  if (std::find(supported.begin(), supported.end(), name) == supported.end()) {
    std::string list;
    for (const auto& s : supported) list += (list.empty() ? "" : ", ") + s;
    throw UsageError("--chain: unsupported chain '" + name + "' (supported: " + list + ")");
  }
  return FxChain::parse(name);
}

int cmd_run(const std::string& input, const std::string& prompt, const std::optional<std::string>& contrast,
            const std::string& chain_name, const std::string& variant, const ConfigFlags& cf,
            const BackendFlags& bf, const std::string& out_dir, bool quiet, Streams s) {
  const auto chain = parse_chain_flag(chain_name);
  auto config = cf.make();
  config.variant = parse_variant(variant);
  PromptSpec prompts;
  try {
    prompts = contrast ? build_prompts(prompt, *contrast) : build_prompts(prompt);
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--prompt: ") + e.what());
  }
  const auto backend = bf.make();
  const auto audio = resample(load_audio(input), backend->descriptor().input_sample_rate);

  std::mutex log_mutex;
  const int step = std::max(1, config.iterations / 10);
  ProgressCallback progress;
  if (!quiet) {
    progress = [&](const Progress& p) {
      if ((p.iteration + 1) % step != 0) return;
      std::lock_guard lock(log_mutex);
      s.err << "run " << p.run << " iteration " << (p.iteration + 1) << "/" << config.iterations << " loss "
            << p.loss << "\n";
    };
  }
  const auto result = optimize(audio, prompts, chain, config, *backend, progress);
  const auto files = write_run_artifacts(result, out_dir, backend->descriptor().name);
  s.err << "chosen run " << result.chosen_run << " final loss " << result.final_losses[result.chosen_run]
        << "; wrote " << files.effected_wav.string() << ", " << files.params_json.string() << ", "
        << files.losses_csv.string() << ", " << files.run_meta_json.string() << "\n";
  if (!s.out_is_terminal) s.out << read_text_file(files.params_json);
  return kOk;
}

int cmd_render(const std::string& input, const std::string& params_path, const std::string& out_path, Streams s) {
  const auto audio = load_audio(input);
  OrderedJson doc;
  try {
    doc = OrderedJson::parse(read_text_file(params_path));
  } catch (const OrderedJson::parse_error& e) {
    throw SchemaError("", std::string("params file is not valid JSON: ") + e.what());
  }
  const auto out = render_from_params(audio, doc);
  const auto report = save_audio(out, out_path, BitDepth::float32);
  s.err << "wrote " << out_path << " (" << out.size() << " samples at " << out.sample_rate << " Hz";
  if (report.clipped()) s.err << ", " << report.clipped_samples << " samples clipped";
  s.err << ")\n";
  return kOk;
}

int cmd_batch(const std::optional<std::string>& manifest, const std::vector<std::string>& audio,
              const std::vector<std::string>& prompts, const std::vector<std::string>& chains,
              const std::string& variants, const ConfigFlags& cf, const BackendFlags& bf, const std::string& out,
              int workers, Streams s) {
  std::vector<BatchCell> cells;
  if (manifest) {
    cells = load_manifest(*manifest);
  } else {
    if (audio.empty() || prompts.empty() || chains.empty()) {
      throw UsageError("batch: give --manifest, or all of --audio, --prompt and --chain");
    }
    for (const auto& c : chains) parse_chain_flag(c);
    std::string text = "audio_path,prompt,chain,variants\n";
    for (const auto& a : audio) {
      for (const auto& p : prompts) {
        for (const auto& c : chains) text += format_csv_row({a, p, c, variants});
      }
    }
    cells = parse_manifest(text);
  }
  const auto backend = bf.make();
  BatchOptions options;
  options.config = cf.make();
  options.out_dir = out;
  options.workers = workers;
  options.backend_name = backend->descriptor().name;
  const auto summary = run_batch(cells, options, *backend, [&](const CellResult& r) {
    s.err << "cell " << r.id << ": " << (r.status == CellStatus::failed ? "failed: " + r.error
                                         : r.status == CellStatus::reused ? "reused" : "ok")
          << "\n";
  });
  s.err << summary.cells.size() << " cells: " << summary.count(CellStatus::ok) << " ok, "
        << summary.count(CellStatus::reused) << " reused, " << summary.count(CellStatus::failed)
        << " failed; index " << summary.index_path.string() << "\n";
  if (!s.out_is_terminal) s.out << summary.index_path.string() << "\n";
  return kOk;
}

Service* g_service = nullptr;

void handle_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const std::string& host, int port, int workers, const std::string& data_dir, double max_upload_mb,
              const std::string& cors, const BackendFlags& bf, Streams s) {
  ServiceOptions o;
  o.data_dir = data_dir;
  o.workers = workers;
  o.max_upload_bytes = static_cast<std::size_t>(max_upload_mb * 1024.0 * 1024.0);
  o.cors_origin = cors;
  const auto backend = bf.make();
  o.backend_name = backend->descriptor().name;
  Service service(o, backend);
  const int bound = service.bind(host, port);
  s.err << "listening on http://" << host << ":" << bound << " (data in " << data_dir << ")\n";
  g_service = &service;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  service.run();
  g_service = nullptr;
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, Streams s) {
  CLI::App app{"Text-prompted audio effect parameter optimization", "promptfx"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // run
  auto* run = app.add_subcommand("run", "Optimize an effect chain so the audio matches a prompt");
  std::string run_input, run_prompt, run_chain = "eq", run_variant = "cosine", run_out;
  std::optional<std::string> run_contrast;
  bool run_quiet = false, run_verbose = false;
  ConfigFlags run_cfg;
  BackendFlags run_backend;
  run->add_option("input", run_input, "Input WAV")->required();
  run->add_option("--prompt", run_prompt, "Target description, e.g. \"warm and full\"")->required();
  run->add_option("--contrast", run_contrast, "Contrast description for the directional loss (default: NOT <prompt>)");
  run->add_option("--chain", run_chain, "Effect chain: eq, reverb or eq-reverb")->capture_default_str();
  run->add_option("--variant", run_variant, "Loss")
      ->check(CLI::IsMember({"cosine", "directional"}))
      ->capture_default_str();
  run->add_option("--out", run_out, "Output directory")->required();
  auto* quiet = run->add_flag("--quiet,-q", run_quiet, "No progress output");
  run->add_flag("--verbose,-v", run_verbose, "Debug logging")->excludes(quiet);
  run_cfg.add(*run);
  run_backend.add(*run);

  // render
  auto* render = app.add_subcommand("render", "Render a params.json onto an audio file");
  std::string render_input, render_params, render_out;
  render->add_option("input", render_input, "Input WAV")->required();
  render->add_option("--params", render_params, "Parameter file (as written by run)")->required();
  render->add_option("--out", render_out, "Output WAV")->required();

  // batch
  auto* batch = app.add_subcommand("batch", "Run a grid of audio x prompt x chain cells");
  std::optional<std::string> batch_manifest;
  std::vector<std::string> batch_audio, batch_prompts, batch_chains;
  std::string batch_variants = "cosine;directional;random;nofx", batch_out;
  int batch_workers = 1;
  ConfigFlags batch_cfg;
  BackendFlags batch_backend;
  auto* manifest_opt =
      batch->add_option("--manifest", batch_manifest, "CSV with columns audio_path,prompt,chain,variants");
  batch->add_option("--audio", batch_audio, "Audio files for a grid")->excludes(manifest_opt);
  batch->add_option("--prompt", batch_prompts, "Prompts for a grid")->excludes(manifest_opt);
  batch->add_option("--chain", batch_chains, "Chains for a grid")->excludes(manifest_opt);
  batch->add_option("--variants", batch_variants, "';'-separated conditions for a grid")
      ->excludes(manifest_opt)
      ->capture_default_str();
  batch->add_option("--out", batch_out, "Results directory")->required();
  batch->add_option("--workers", batch_workers, "Cells processed at once")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  batch_cfg.add(*batch);
  batch_backend.add(*batch);

  // serve
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  std::string serve_host = "127.0.0.1", serve_data = "promptfx-jobs", serve_cors = "*";
  int serve_port = 8080, serve_workers = 1;
  double serve_max_mb = 64.0;
  BackendFlags serve_backend;
  serve->add_option("--host", serve_host)->capture_default_str();
  serve->add_option("--port", serve_port)->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--workers", serve_workers, "Jobs executed at once")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve->add_option("--data-dir", serve_data, "Job directory root")->capture_default_str();
  serve->add_option("--max-upload-mb", serve_max_mb)->check(CLI::PositiveNumber)->capture_default_str();
  serve->add_option("--cors-origin", serve_cors)->capture_default_str();
  serve_backend.add(*serve);

  auto* chains = app.add_subcommand("chains", "Print the parameter schema of every chain as JSON");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("promptfx");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    s.out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    s.out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    s.err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    s.err << sub->help();
    return kInvalidFlags;
  }

  if (run_verbose) spdlog::set_level(spdlog::level::debug);
  try {
    if (*run) {
      return cmd_run(run_input, run_prompt, run_contrast, run_chain, run_variant, run_cfg, run_backend, run_out,
                     run_quiet, s);
    }
    if (*render) return cmd_render(render_input, render_params, render_out, s);
    if (*batch) {
      return cmd_batch(batch_manifest, batch_audio, batch_prompts, batch_chains, batch_variants, batch_cfg,
                       batch_backend, batch_out, batch_workers, s);
    }
    if (*serve) {
      return cmd_serve(serve_host, serve_port, serve_workers, serve_data, serve_max_mb, serve_cors, serve_backend, s);
    }
    if (*chains) {
      s.out << chains_schema().dump(2) << "\n";
      return kOk;
    }
  } catch (const UsageError& e) {
    s.err << "error: " << e.what() << "\n";
    return kInvalidFlags;
  } catch (const SchemaError& e) {
    s.err << "error: invalid parameters: " << e.what() << "\n";
    return kSchemaViolation;
  } catch (const DegeneratePromptError& e) {
    s.err << "error: " << e.what() << "\n";
    return kDegeneratePrompt;
  } catch (const IoError& e) {
    s.err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const fs::filesystem_error& e) {
    s.err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const InvalidArgument& e) {
    s.err << "error: " << e.what() << "\n";
    return kInvalidFlags;
  } catch (const std::exception& e) {
    s.err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kInvalidFlags;
}

}  // namespace promptfx::cli
