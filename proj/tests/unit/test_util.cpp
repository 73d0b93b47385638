#include <gtest/gtest.h>

#include "promptfx/errors.hpp"
#include "promptfx/util.hpp"
#include "signals.hpp"

using namespace promptfx;

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"),
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST(Sha256, FileMatchesString) {
  testsig::TempDir tmp("util");
  write_text_file(tmp / "x.txt", "abc");
  EXPECT_EQ(sha256_file(tmp / "x.txt"), sha256_hex("abc"));
  EXPECT_THROW(sha256_file(tmp / "nope"), IoError);
}

TEST(Csv, QuotingRoundTrip) {
  const CsvRow row = {"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
  const auto line = format_csv_row(row);
  const auto parsed = parse_csv(line + "\n");
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0], row);
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("ab"), "ab");
}

TEST(Csv, CrLfAndTrailingLine) {
  const auto rows = parse_csv("a,b\r\nc,d");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (CsvRow{"a", "b"}));
  EXPECT_EQ(rows[1], (CsvRow{"c", "d"}));
}

TEST(TextFile, AtomicWriteAndRead) {
  testsig::TempDir tmp("util");
  write_text_file(tmp / "f.txt", "one");
  write_text_file(tmp / "f.txt", "two");
  EXPECT_EQ(read_text_file(tmp / "f.txt"), "two");
  EXPECT_THROW(read_text_file(tmp / "missing.txt"), IoError);
}
