#include "promptfx/batch.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <thread>

#include "promptfx/artifacts.hpp"
#include "promptfx/conditions.hpp"
#include "promptfx/errors.hpp"
#include "promptfx/params_json.hpp"

namespace promptfx {

namespace fs = std::filesystem;

namespace {

constexpr Condition kAllConditions[] = {Condition::cosine, Condition::directional, Condition::random, Condition::nofx};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::string join_conditions(const std::vector<Condition>& cs) {
  std::string out;
  for (auto c : cs) {
    if (!out.empty()) out += ';';
    out += condition_name(c);
  }
  return out;
}

std::string status_name(CellStatus s) {
  switch (s) {
    case CellStatus::ok:
    case CellStatus::reused:
      return "ok";
    case CellStatus::failed: return "failed";
  }
  return "failed";
}

const CsvRow kIndexHeader = {"cell_id",  "status", "audio_path", "prompt", "chain",    "variants",
                             "cosine_final_loss", "directional_final_loss", "outputs", "checksum", "error"};

CsvRow index_row(const CellResult& r) {
  std::string cos, dir, outs;
  for (const auto& [c, loss] : r.final_losses) {
    (c == Condition::cosine ? cos : dir) = format_double(loss);
  }
  for (const auto& p : r.outputs) {
    if (!outs.empty()) outs += ';';
    outs += p.generic_string();
  }
  return {r.id, status_name(r.status), r.cell.audio_path.generic_string(), r.cell.prompt, r.cell.chain,
          join_conditions(r.cell.conditions), cos, dir, outs, r.checksum, r.error};
}

// Serializes index writes; every update rewrites the file in cell order.
class IndexWriter {
 public:
  IndexWriter(fs::path path, std::size_t n) : path_(std::move(path)), rows_(n) {}

  void record(const CellResult& r) {
    std::lock_guard lock(mutex_);
    rows_.at(r.index) = index_row(r);
    std::string text = format_csv_row(kIndexHeader);
    for (const auto& row : rows_) {
      if (!row.empty()) text += format_csv_row(row);
    }
    write_text_file(path_, text);
  }

 private:
  fs::path path_;
  std::mutex mutex_;
  std::vector<CsvRow> rows_;
};

std::string checksum_of(const fs::path& root, const std::vector<fs::path>& outputs) {
  std::string joined;
  for (const auto& p : outputs) joined += p.generic_string() + ":" + sha256_file(root / p) + "\n";
  return sha256_hex(joined);
}

OrderedJson cell_definition(const BatchCell& cell, std::uint64_t seed) {
  return {{"audio_path", cell.audio_path.generic_string()},
          {"prompt", cell.prompt},
          {"chain", cell.chain},
          {"variants", join_conditions(cell.conditions)},
          {"seed", seed}};
}

bool try_reuse(const fs::path& out_dir, CellResult& r, const OrderedJson& definition) {
  const auto record_path = out_dir / r.id / kCellRecord;
  if (!fs::exists(record_path)) return false;
  try {
    const auto rec = OrderedJson::parse(read_text_file(record_path));
    if (rec.value("status", "") != "ok" || rec.at("definition") != definition) return false;
    for (const auto& o : rec.at("outputs")) r.outputs.emplace_back(o.get<std::string>());
    for (const auto& [name, loss] : rec.at("final_losses").items()) {
      r.final_losses.emplace_back(parse_condition(name), loss.get<double>());
    }
    if (checksum_of(out_dir, r.outputs) != rec.at("checksum").get<std::string>()) return false;
    r.checksum = rec.at("checksum").get<std::string>();
    r.status = CellStatus::reused;
    return true;
  } catch (const std::exception& e) {
    spdlog::warn("batch: ignoring unreadable record {}: {}", record_path.string(), e.what());
    r.outputs.clear();
    r.final_losses.clear();
    return false;
  }
}

void run_cell(CellResult& r, const BatchOptions& options, const EmbeddingBackend& backend) {
  const auto& cell = r.cell;
  const auto definition = cell_definition(cell, options.config.seed);
  if (try_reuse(options.out_dir, r, definition)) return;

  const auto chain = FxChain::parse(cell.chain);
  const double rate = backend.descriptor().input_sample_rate;
  const auto audio = resample(load_audio(cell.audio_path), rate);
  const auto prompts = build_prompts(cell.prompt);
  const fs::path cell_dir = fs::path(r.id);

  auto emit = [&](const fs::path& rel) { r.outputs.push_back(rel); };
  for (const auto c : cell.conditions) {
    const fs::path rel = cell_dir / std::string(condition_name(c));
    const fs::path dir = options.out_dir / rel;
    switch (c) {
      case Condition::cosine:
      case Condition::directional: {
        auto cfg = options.config;
        cfg.variant = c == Condition::cosine ? LossVariant::cosine : LossVariant::directional;
        const auto result = optimize(audio, prompts, chain, cfg, backend);
        write_run_artifacts(result, dir, options.backend_name);
        for (const char* f : {kEffectedWav, kParamsJson, kLossesCsv, kRunMetaJson}) emit(rel / f);
        r.final_losses.emplace_back(c, result.final_losses.at(result.chosen_run));
        break;
      }
      case Condition::random: {
        const auto rnd = random_condition(audio, chain, options.config.seed, options.config.reverb_seed);
        fs::create_directories(dir);
        save_audio(rnd.audio, dir / kEffectedWav, BitDepth::float32);
        auto doc = params_to_json(FxProcessor(chain, options.config.reverb_seed), rnd.mapped);
        doc[kMetadataKey] = {{"chain", chain.name()},
                             {"sample_rate", rate},
                             {"reverb_noise_seed", options.config.reverb_seed},
                             {"seed", options.config.seed}};
        write_text_file(dir / kParamsJson, doc.dump(2) + "\n");
        emit(rel / kEffectedWav);
        emit(rel / kParamsJson);
        break;
      }
      case Condition::nofx:
        fs::create_directories(dir);
        save_audio(audio, dir / kEffectedWav, BitDepth::float32);
        emit(rel / kEffectedWav);
        break;
    }
  }
  r.checksum = checksum_of(options.out_dir, r.outputs);
  r.status = CellStatus::ok;

  OrderedJson losses = OrderedJson::object();
  for (const auto& [c, loss] : r.final_losses) losses[std::string(condition_name(c))] = loss;
  OrderedJson outs = OrderedJson::array();
  for (const auto& p : r.outputs) outs.push_back(p.generic_string());
  const OrderedJson record = {{"status", "ok"},
                              {"definition", definition},
                              {"final_losses", losses},
                              {"outputs", outs},
                              {"checksum", r.checksum}};
  write_text_file(options.out_dir / cell_dir / kCellRecord, record.dump(2) + "\n");
}

}  // namespace

std::string_view condition_name(Condition c) {
  switch (c) {
    case Condition::cosine: return "cosine";
    case Condition::directional: return "directional";
    case Condition::random: return "random";
    case Condition::nofx: return "nofx";
  }
  return "unknown";
}

Condition parse_condition(std::string_view name) {
  for (auto c : kAllConditions) {
    if (condition_name(c) == name) return c;
  }
  throw InvalidArgument("unknown variant '" + std::string(name) + "' (expected cosine, directional, random or nofx)");
}

std::vector<BatchCell> parse_manifest(std::string_view text, const fs::path& base_dir) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw InvalidArgument("manifest: empty");
  const CsvRow expected = {"audio_path", "prompt", "chain", "variants"};
  CsvRow header;
  for (const auto& h : rows.front()) header.push_back(trim(h));
  if (header != expected) throw InvalidArgument("manifest: header must be audio_path,prompt,chain,variants");

  std::vector<BatchCell> cells;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = "manifest row " + std::to_string(i + 1);
    if (row.size() != expected.size()) throw InvalidArgument(where + ": expected 4 fields");
    BatchCell cell;
    cell.audio_path = trim(row[0]);
    if (cell.audio_path.empty()) throw InvalidArgument(where + ": empty audio_path");
    if (cell.audio_path.is_relative() && !base_dir.empty()) cell.audio_path = base_dir / cell.audio_path;
    cell.prompt = trim(row[1]);
    if (cell.prompt.empty()) throw InvalidArgument(where + ": empty prompt");
    cell.chain = trim(row[2]);
    try {
      FxChain::parse(cell.chain);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where + ": " + e.what());
    }
    const std::string variants = trim(row[3]);
    std::size_t start = 0;
    while (start <= variants.size() && !variants.empty()) {
      const auto end = std::min(variants.find(';', start), variants.size());
      const auto name = trim(std::string_view(variants).substr(start, end - start));
      if (!name.empty()) {
        const auto c = parse_condition(name);
        if (std::find(cell.conditions.begin(), cell.conditions.end(), c) == cell.conditions.end()) {
          cell.conditions.push_back(c);
        }
      }
      start = end + 1;
    }
    if (cell.conditions.empty()) cell.conditions.assign(std::begin(kAllConditions), std::end(kAllConditions));
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<BatchCell> load_manifest(const fs::path& path) {
  return parse_manifest(read_text_file(path), path.parent_path());
}

std::vector<BatchCell> make_grid(const std::vector<fs::path>& audio, const std::vector<std::string>& prompts,
                                 const std::vector<std::string>& chains, const std::vector<Condition>& conditions) {
  std::vector<BatchCell> cells;
  for (const auto& a : audio) {
    for (const auto& p : prompts) {
      for (const auto& c : chains) cells.push_back({a, p, c, conditions});
    }
  }
  return cells;
}

std::size_t BatchSummary::count(CellStatus s) const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [s](const CellResult& r) { return r.status == s; }));
}

std::string cell_id(std::size_t index, const BatchCell& cell, std::uint64_t seed) {
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%05zu", index);
  return std::string(prefix) + "-" + sha256_hex(cell_definition(cell, seed).dump()).substr(0, 8);
}

BatchSummary run_batch(const std::vector<BatchCell>& cells, const BatchOptions& options,
                       const EmbeddingBackend& backend, const CellCallback& on_cell) {
  options.config.validate();
  if (options.out_dir.empty()) throw InvalidArgument("batch: output directory required");
  if (options.workers < 1) throw InvalidArgument("batch: workers must be >= 1");
  fs::create_directories(options.out_dir);

  BatchSummary summary;
  summary.index_path = options.out_dir / kIndexCsv;
  summary.cells.resize(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto& r = summary.cells[i];
    r.index = i;
    r.cell = cells[i];
    r.id = cell_id(i, cells[i], options.config.seed);
  }

  IndexWriter writer(summary.index_path, cells.size());
  std::mutex callback_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      auto& r = summary.cells[i];
      try {
        run_cell(r, options, backend);
      } catch (const std::exception& e) {
        r.status = CellStatus::failed;
        r.error = e.what();
        r.checksum.clear();
        spdlog::warn("batch: cell {} failed: {}", r.id, r.error);
      }
      writer.record(r);
      if (on_cell) {
        std::lock_guard lock(callback_mutex);
        on_cell(r);
      }
    }
  };

  const int n = std::min<int>(options.workers, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  std::vector<std::thread> threads;
  for (int t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (cells.empty()) write_text_file(summary.index_path, format_csv_row(kIndexHeader));
  return summary;
}

}  // namespace promptfx
