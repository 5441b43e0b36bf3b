#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "wfp/traces.hpp"

namespace fs = std::filesystem;
using namespace wfp;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("wfp_traces_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void touch_trace(const fs::path& path) { detail::write_file(path, "0.0\t1\n0.5\t-1\n"); }

}  // namespace

TEST(ParseTrace, ReadsPacketsInFileOrder) {
  const auto t = parse_trace("0.0\t1\n0.12\t-1\n");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], (Packet{0.0, Direction::outgoing}));
  EXPECT_EQ(t[1], (Packet{0.12, Direction::incoming}));
}

TEST(ParseTrace, EmptyInputIsEmptyTrace) {
  EXPECT_THROW(parse_trace(""), EmptyTrace);
  EXPECT_THROW(parse_trace("\n  \n\n"), EmptyTrace);
}

TEST(ParseTrace, DecreasingTimestampIsOrderError) { EXPECT_THROW(parse_trace("0.5\t1\n0.2\t-1\n"), OrderError); }

TEST(ParseTrace, EqualTimestampsAllowed) { EXPECT_EQ(parse_trace("0.5\t1\n0.5\t-1\n").size(), 2u); }

TEST(ParseTrace, MalformedLineReportsLineNumber) {
  try {
    parse_trace("0.0\t1\n\n0.1 -1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseTrace, RejectsSizesInsteadOfDirections) {
  EXPECT_THROW(parse_trace("0.0\t512\n"), ParseError);
  EXPECT_THROW(parse_trace("0.0\t0\n"), ParseError);
  EXPECT_THROW(parse_trace("0.0\t-1.0\n"), ParseError);
}

TEST(ParseTrace, RejectsBadTimestamps) {
  EXPECT_THROW(parse_trace("abc\t1\n"), ParseError);
  EXPECT_THROW(parse_trace("-0.5\t1\n"), ParseError);
  EXPECT_THROW(parse_trace("nan\t1\n"), ParseError);
}

TEST(ParseTrace, AcceptsSignedDirectionsAndCrlf) {
  const auto t = parse_trace("0.000000\t+1\r\n0.100000\t-1\r\n");
  EXPECT_EQ(t[0].direction, Direction::outgoing);
  EXPECT_EQ(t[1].direction, Direction::incoming);
}

TEST(RawTrace, ConstructorEnforcesInvariants) {
  EXPECT_THROW(RawTrace({}), EmptyTrace);
  EXPECT_THROW(RawTrace({{1.0, Direction::outgoing}, {0.5, Direction::incoming}}), OrderError);
  EXPECT_THROW(RawTrace({{-1.0, Direction::outgoing}}), TraceError);
  EXPECT_THROW(RawTrace({{0.0, static_cast<Direction>(2)}}), TraceError);
}

TEST(SerializeTrace, UsesFixedSixDecimalFormat) {
  const RawTrace t({{0.0, Direction::outgoing}, {0.12, Direction::incoming}});
  EXPECT_EQ(serialize_trace(t), "0.000000\t+1\n0.120000\t-1\n");
}

// parse(serialize(t)) == t for traces on the microsecond grid.
TEST(SerializeTrace, RoundTripProperty) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> len(1, 300), step(0, 50000), dir(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Packet> p;
    std::int64_t micros = std::uniform_int_distribution<std::int64_t>(0, 5'000'000)(rng);
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      micros += step(rng);
      p.push_back({static_cast<double>(micros) / 1e6, dir(rng) ? Direction::outgoing : Direction::incoming});
    }
    const RawTrace t(p);
    ASSERT_EQ(parse_trace(serialize_trace(t)), t);
  }
}

TEST(LoadCorpus, MonitoredEntriesLabeledFromFileNames) {
  const auto dir = temp_dir("mon");
  touch_trace(dir / "monitored/0-0.txt");
  touch_trace(dir / "monitored/0-1.txt");
  touch_trace(dir / "monitored/1-0.txt");
  const auto c = load_corpus(dir, 2);
  ASSERT_EQ(c.entries.size(), 3u);
  EXPECT_EQ(c.entries[0].label, (TraceLabel{0, 0}));
  EXPECT_EQ(c.entries[1].label, (TraceLabel{0, 1}));
  EXPECT_EQ(c.entries[2].label, (TraceLabel{1, 0}));
  EXPECT_EQ(c.entries[2].source, "monitored/1-0.txt");
  fs::remove_all(dir);
}

TEST(LoadCorpus, UnmonitoredOnlyCorpus) {
  const auto dir = temp_dir("unmon");
  touch_trace(dir / "unmonitored/42.txt");
  const auto c = load_corpus(dir, 0);
  ASSERT_EQ(c.entries.size(), 1u);
  EXPECT_EQ(c.entries[0].label, (TraceLabel{0, 42}));
  EXPECT_FALSE(c.is_monitored(c.entries[0].label));
  fs::remove_all(dir);
}

TEST(LoadCorpus, MissingSiteIsLayoutError) {
  const auto dir = temp_dir("missing");
  touch_trace(dir / "monitored/0-0.txt");
  EXPECT_THROW(load_corpus(dir, 2), LayoutError);
  fs::remove_all(dir);
}

TEST(LoadCorpus, SiteOutsideRangeIsLayoutError) {
  const auto dir = temp_dir("range");
  touch_trace(dir / "monitored/0-0.txt");
  touch_trace(dir / "monitored/3-0.txt");
  EXPECT_THROW(load_corpus(dir, 1), LayoutError);
  fs::remove_all(dir);
}

TEST(LoadCorpus, BadFileNameIsLayoutError) {
  const auto dir = temp_dir("name");
  touch_trace(dir / "monitored/site0.txt");
  EXPECT_THROW(load_corpus(dir, 1), LayoutError);
  fs::remove_all(dir);
}

TEST(LoadCorpus, ParseErrorsAggregatedWithPaths) {
  const auto dir = temp_dir("agg");
  touch_trace(dir / "monitored/0-0.txt");
  detail::write_file(dir / "monitored/0-1.txt", "");
  detail::write_file(dir / "unmonitored/3.txt", "1.0\t1\n0.5\t1\n");
  try {
    load_corpus(dir, 1);
    FAIL() << "expected CorpusError";
  } catch (const CorpusError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("monitored/0-1.txt"), std::string::npos);
    EXPECT_NE(msg.find("unmonitored/3.txt"), std::string::npos);
    EXPECT_NE(msg.find("OrderError"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(LoadCorpus, EntryCountMatchesFilesAndLabelsAreBijective) {
  const auto dir = temp_dir("bij");
  Corpus c;
  c.n_mon = 3;
  for (int s = 0; s < 3; ++s)
    for (int i = 0; i < 4; ++i) c.entries.push_back({RawTrace({{0.0, Direction::outgoing}}), {s, i}, ""});
  for (int u = 0; u < 5; ++u) c.entries.push_back({RawTrace({{0.0, Direction::incoming}}), {3, u * 7}, ""});
  write_corpus(c, dir);

  const auto loaded = load_corpus(dir, 3);
  ASSERT_EQ(loaded.entries.size(), c.entries.size());
  std::set<std::string> names;
  for (const auto& e : loaded.entries) {
    EXPECT_EQ(corpus_file_name(e.label, 3), e.source);
    names.insert(e.source);
  }
  EXPECT_EQ(names.size(), loaded.entries.size());
  fs::remove_all(dir);
}
