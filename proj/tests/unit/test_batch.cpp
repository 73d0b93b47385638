#include <gtest/gtest.h>

#include <fstream>

#include "promptfx/audio.hpp"
#include "promptfx/batch.hpp"
#include "promptfx/errors.hpp"
#include "signals.hpp"

using namespace promptfx;
namespace fs = std::filesystem;

namespace {

BatchOptions quick(const fs::path& out) {
  BatchOptions o;
  o.config.iterations = 4;
  o.config.runs = 1;
  o.config.seed = 3;
  o.config.max_shift_ms = 10;
  o.out_dir = out;
  o.workers = 2;
  return o;
}

}  // namespace

TEST(Manifest, ParsesRowsAndDefaults) {
  const auto cells = parse_manifest(
      "audio_path,prompt,chain,variants\n"
      "a.wav,bright,eq,cosine;nofx\n"
      "/abs/b.wav,\"warm, full\",reverb,\n",
      "/data");
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].audio_path, fs::path("/data/a.wav"));
  EXPECT_EQ(cells[0].conditions, (std::vector<Condition>{Condition::cosine, Condition::nofx}));
  EXPECT_EQ(cells[1].audio_path, fs::path("/abs/b.wav"));
  EXPECT_EQ(cells[1].prompt, "warm, full");
  EXPECT_EQ(cells[1].conditions.size(), 4u);
}

TEST(Manifest, Errors) {
  EXPECT_THROW(parse_manifest(""), InvalidArgument);
  EXPECT_THROW(parse_manifest("audio,prompt,chain,variants\n"), InvalidArgument);
  EXPECT_THROW(parse_manifest("audio_path,prompt,chain,variants\na.wav,bright,eq\n"), InvalidArgument);
  EXPECT_THROW(parse_manifest("audio_path,prompt,chain,variants\na.wav,bright,flanger,\n"), InvalidArgument);
  EXPECT_THROW(parse_manifest("audio_path,prompt,chain,variants\na.wav,bright,eq,wobbly\n"), InvalidArgument);
  EXPECT_THROW(parse_manifest("audio_path,prompt,chain,variants\na.wav, ,eq,\n"), InvalidArgument);
  try {
    parse_manifest("audio_path,prompt,chain,variants\na.wav,x,eq,\nb.wav,y,flanger,\n");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
}

TEST(Batch, GridRerunAndFailureIsolation) {
  testsig::TempDir tmp("batch");
  save_audio(testsig::pink_noise(0.2, 48000, 1), tmp / "a.wav", BitDepth::float32);
  save_audio(testsig::white_noise(0.2, 44100, 2), tmp / "b.wav", BitDepth::pcm16);
  const SurrogateBackend backend;

  const auto grid = make_grid({tmp / "a.wav", tmp / "b.wav"}, {"bright", "muffled"}, {"eq"},
                              {Condition::cosine, Condition::random, Condition::nofx});
  ASSERT_EQ(grid.size(), 4u);
  const auto first = run_batch(grid, quick(tmp / "out"), backend);
  ASSERT_EQ(first.cells.size(), 4u);
  EXPECT_EQ(first.count(CellStatus::ok), 4u);
  EXPECT_TRUE(fs::exists(first.index_path));
  for (const auto& c : first.cells) {
    EXPECT_EQ(c.outputs.size(), 4u + 2u + 1u);
    for (const auto& o : c.outputs) EXPECT_TRUE(fs::exists(tmp / "out" / o.string())) << o;
    EXPECT_EQ(c.checksum.size(), 64u);
  }

  const auto second = run_batch(grid, quick(tmp / "out"), backend);
  EXPECT_EQ(second.count(CellStatus::reused), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(second.cells[i].id, first.cells[i].id);
    EXPECT_EQ(second.cells[i].checksum, first.cells[i].checksum);
  }

  // recomputation from scratch is bit-identical
  const auto fresh = run_batch(grid, quick(tmp / "out2"), backend);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(fresh.cells[i].checksum, first.cells[i].checksum);

  auto broken = grid;
  broken[1].audio_path = tmp / "missing.wav";
  const auto third = run_batch(broken, quick(tmp / "out3"), backend);
  EXPECT_EQ(third.count(CellStatus::failed), 1u);
  EXPECT_EQ(third.cells[1].status, CellStatus::failed);
  EXPECT_FALSE(third.cells[1].error.empty());
  EXPECT_EQ(third.count(CellStatus::ok), 3u);

  const auto index = parse_csv(read_text_file(third.index_path));
  ASSERT_EQ(index.size(), 5u);
  EXPECT_EQ(index[0][0], "cell_id");
  EXPECT_EQ(index[2][1], "failed");
  EXPECT_EQ(index[1][1], "ok");
}

TEST(Batch, CellIdDependsOnSeedAndDefinition) {
  const BatchCell c{"a.wav", "bright", "eq", {Condition::cosine}};
  EXPECT_EQ(cell_id(0, c, 1), cell_id(0, c, 1));
  EXPECT_NE(cell_id(0, c, 1), cell_id(0, c, 2));
  EXPECT_EQ(cell_id(7, c, 1).substr(0, 6), "00007-");
  auto d = c;
  d.prompt = "dark";
  EXPECT_NE(cell_id(0, c, 1), cell_id(0, d, 1));
}
