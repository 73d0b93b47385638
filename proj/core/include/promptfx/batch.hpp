#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "promptfx/optimizer.hpp"
#include "promptfx/util.hpp"

namespace promptfx {

enum class Condition { cosine, directional, random, nofx };

std::string_view condition_name(Condition c);
Condition parse_condition(std::string_view name);

/// One manifest row: an audio file, a prompt, a chain and the conditions to produce.
struct BatchCell {
  std::filesystem::path audio_path;
  std::string prompt;
  std::string chain;
  std::vector<Condition> conditions;
};

/// Manifest CSV with header "audio_path,prompt,chain,variants". variants is a
/// ';'-separated subset of cosine, directional, random, nofx (empty means all
/// four). Relative audio paths resolve against `base_dir`. Throws
/// InvalidArgument on a malformed header, row width, chain or variant.
std::vector<BatchCell> parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {});
std::vector<BatchCell> load_manifest(const std::filesystem::path& path);

/// Cartesian product helper: every audio x prompt x chain with the same conditions.
std::vector<BatchCell> make_grid(const std::vector<std::filesystem::path>& audio, const std::vector<std::string>& prompts,
                                 const std::vector<std::string>& chains, const std::vector<Condition>& conditions);

struct BatchOptions {
  OptimizationConfig config;
  std::filesystem::path out_dir;
  int workers = 1;
  std::string backend_name = "surrogate";
};

enum class CellStatus { ok, failed, reused };

struct CellResult {
  std::size_t index = 0;
  std::string id;
  CellStatus status = CellStatus::failed;
  BatchCell cell;
  std::vector<std::pair<Condition, double>> final_losses;  // optimized conditions only
  std::vector<std::filesystem::path> outputs;              // relative to out_dir
  std::string checksum;                                    // sha256 over output file hashes
  std::string error;
};

struct BatchSummary {
  std::filesystem::path index_path;
  std::vector<CellResult> cells;

  std::size_t count(CellStatus s) const;
};

using CellCallback = std::function<void(const CellResult&)>;

inline constexpr const char* kIndexCsv = "index.csv";
inline constexpr const char* kCellRecord = "cell.json";

/// Stable directory name for a cell: zero-padded index and a short content hash
/// of the cell definition and seed.
std::string cell_id(std::size_t index, const BatchCell& cell, std::uint64_t seed);

/// Runs every cell (up to `workers` at once), writing
///   <out>/<cell id>/<condition>/{effected.wav, params.json, ...}
///   <out>/<cell id>/cell.json
///   <out>/index.csv
/// A cell whose cell.json already records success is reused, not recomputed.
/// Per-cell failures are recorded in the index and do not stop the batch.
BatchSummary run_batch(const std::vector<BatchCell>& cells, const BatchOptions& options,
                       const EmbeddingBackend& backend, const CellCallback& on_cell = {});

}  // namespace promptfx
