#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hifinet/error.hpp"
#include "hifinet/ingest.hpp"
#include "hifinet/rng.hpp"

using namespace hifinet;

namespace {

// An independent validity check for one Intel record: 8 fields, numeric
// mote id and temperature, finite.
bool intel_line_ok(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> f;
  for (std::string tok; in >> tok;) f.push_back(tok);
  if (f.size() < 5) return false;
  try {
    std::size_t pos = 0;
    (void)std::stoi(f[3], &pos);
    if (pos != f[3].size()) return false;
    const double t = std::stod(f[4], &pos);
    return pos == f[4].size() && std::isfinite(t);
  } catch (...) {
    return false;
  }
}

}  // namespace

TEST(ParseIntel, SingleRecordKeepsTemperature) {
  std::istringstream in("2004-03-06 10:00:00.001 12345 7 21.5 40.1 500 2.6\n");
  const auto r = parse_intel(in);
  ASSERT_EQ(r.series.size(), 1u);
  EXPECT_EQ(r.series[0].node_id, 7);
  ASSERT_EQ(r.series[0].size(), 1u);
  EXPECT_DOUBLE_EQ(r.series[0].values[0], 21.5);
  EXPECT_EQ(r.valid_count, 1u);
  EXPECT_EQ(r.dropped_count, 0u);
}

TEST(ParseIntel, EmptyInputIsEmptyDataset) {
  std::istringstream in("");
  EXPECT_THROW(parse_intel(in), EmptyDatasetError);
}

TEST(ParseIntel, MalformedLinesAreCounted) {
  const std::vector<std::string> lines = {
      "2004-03-06 10:00:00.001 1 7 21.5 40.1 500 2.6",
      "2004-03-06 10:01:00 2 7",
      "2004-03-06 10:02:00.5 3 8 19.0 40.1 500 2.6",
      "garbage line here x y z w v",
      "2004-03-06 10:03:00 4 7 22.0 40.0 480 2.6",
  };
  std::string text;
  std::size_t oracle_valid = 0;
  for (const auto& l : lines) {
    text += l + "\n";
    oracle_valid += intel_line_ok(l);
  }
  std::istringstream in(text);
  const auto r = parse_intel(in);
  EXPECT_EQ(r.valid_count, oracle_valid);
  EXPECT_EQ(r.dropped_count, lines.size() - oracle_valid);
  ASSERT_EQ(r.series.size(), 2u);
  EXPECT_EQ(r.series[0].node_id, 7);
  EXPECT_EQ(r.series[0].size(), 2u);
  EXPECT_LT(r.series[0].timestamps[0], r.series[0].timestamps[1]);
}

TEST(ParseIntel, ValueRangeFilter) {
  std::istringstream in(
      "2004-03-06 10:00:00 1 1 21.5 40 500 2.6\n"
      "2004-03-06 11:00:00 2 1 122.0 40 500 2.6\n");
  IntelParseOptions opt;
  opt.max_valid = 60;
  const auto r = parse_intel(in, opt);
  EXPECT_EQ(r.valid_count, 1u);
  EXPECT_EQ(r.dropped_count, 1u);
}

TEST(ParseNodeCsv, RowsDuplicatesAndOrder) {
  {
    std::istringstream in("timestamp,value\n0,20.0\n3600,20.5\n");
    EXPECT_EQ(parse_node_csv(in, 1).size(), 2u);
  }
  {
    std::istringstream in("timestamp,value\n0,20.0\n0,21.0\n");
    const auto s = parse_node_csv(in, 1);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_DOUBLE_EQ(s.values[0], 21.0);
  }
  {
    std::istringstream in("timestamp,value\n7200,3\n0,1\n3600,2\n");
    const auto s = parse_node_csv(in, 1);
    EXPECT_EQ(s.timestamps, (std::vector<double>{0, 3600, 7200}));
    EXPECT_EQ(s.values, (std::vector<double>{1, 2, 3}));
  }
}

TEST(ParseNodeCsv, IsoTimestampsAndErrors) {
  std::istringstream ok("timestamp,value\n1970-01-01T01:00:00Z,5\n");
  EXPECT_DOUBLE_EQ(parse_node_csv(ok, 3).timestamps[0], 3600.0);
  std::istringstream bad_header("time,v\n0,1\n");
  EXPECT_THROW(parse_node_csv(bad_header, 1), IngestError);
  std::istringstream bad_ts("timestamp,value\n0,1\nnot-a-time,2\n");
  try {
    parse_node_csv(bad_ts, 1);
    FAIL() << "expected an ingest error";
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Synthetic, ShapeConstantAndDeterminism) {
  SyntheticParams p;
  p.n_nodes = 6;
  p.n_days = 30;
  const auto a = generate_synthetic(p);
  ASSERT_EQ(a.size(), 6u);
  for (const auto& s : a) EXPECT_EQ(s.size(), 720u);
  const auto b = generate_synthetic(p);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);

  p.noise_sigma = 0;
  p.daily_amplitude = 0;
  for (const auto& s : generate_synthetic(p))
    for (double v : s.values) EXPECT_EQ(v, s.values.front());

  p.n_days = 0;
  EXPECT_THROW(generate_synthetic(p), ConfigError);
}

TEST(Align, IdentityAndInterpolation) {
  ReadingSeries a{1, {0, 3600, 7200}, {1, 2, 3}};
  ReadingSeries b{2, {0, 3600, 7200}, {4, 5, 6}};
  std::vector<ReadingSeries> both{a, b};
  const auto p = align(both, 3600);
  EXPECT_EQ(p.values[0], a.values);
  EXPECT_EQ(p.values[1], b.values);

  std::vector<ReadingSeries> gap{ReadingSeries{1, {0, 7200}, {20.0, 22.0}}};
  const auto q = align(gap, 3600);
  ASSERT_EQ(q.n_samples(), 3u);
  EXPECT_DOUBLE_EQ(q.values[0][1], 21.0);
}

TEST(Align, MissingNodeNamed) {
  std::vector<ReadingSeries> s{ReadingSeries{1, {0, 3600}, {1, 2}}, ReadingSeries{42, {90000}, {3}}};
  try {
    align(s, 3600, TimeRange{0, 3600});
    FAIL() << "expected an alignment error";
  } catch (const AlignmentError& e) {
    EXPECT_NE(std::string(e.what()).find("42"), std::string::npos) << e.what();
  }
}

TEST(Align, Idempotent) {
  SyntheticParams p;
  p.n_nodes = 3;
  p.n_days = 3;
  const auto once = align(generate_synthetic(p), 3600);
  const auto twice = align(to_series(once), 3600);
  ASSERT_EQ(once.n_samples(), twice.n_samples());
  for (std::size_t i = 0; i < once.n_nodes(); ++i)
    for (std::size_t k = 0; k < once.n_samples(); ++k) EXPECT_NEAR(once.values[i][k], twice.values[i][k], 1e-12);
}

TEST(Windows, CountsAndSimpleLabels) {
  SyntheticParams p;
  p.n_nodes = 2;
  p.n_days = 30;
  const auto panel = align(generate_synthetic(p), 3600);
  auto mask = FaultMask::all_normal(2, panel.n_samples());
  const auto wins = make_windows(panel, 24, 1, mask);
  EXPECT_EQ(wins.size(), 2u * 697u);
  for (const auto& w : wins) EXPECT_EQ(w.label, FaultClass::Normal);

  mask.rows[0][23] = FaultClass::Spike;
  const auto wins2 = make_windows(panel, 24, 1, mask);
  EXPECT_EQ(wins2[0].label, FaultClass::Spike);
  EXPECT_EQ(wins2[0].values.size(), 24u);
  EXPECT_THROW(make_windows(panel, 721, 1, mask), ConfigError);
}

TEST(Windows, LabelsMatchBruteForceScan) {
  Rng rng(99);
  const std::size_t n = 3, t = 200;
  AlignedPanel panel;
  for (std::size_t i = 0; i < n; ++i) {
    panel.node_ids.push_back(static_cast<int>(i + 1));
    panel.values.emplace_back(t, 0.0);
  }
  for (std::size_t k = 0; k < t; ++k) panel.grid.push_back(3600.0 * static_cast<double>(k));
  auto mask = FaultMask::all_normal(n, t);
  // one fault type per node, sparse random samples
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < t; ++k)
      if (rng.uniform() < 0.03) mask.rows[i][k] = class_from_index(1 + i);
  for (std::size_t w : {1u, 5u, 24u}) {
    for (const auto& win : make_windows(panel, w, 1, mask)) {
      FaultClass expect = FaultClass::Normal;
      for (std::size_t k = win.start_index; k < win.start_index + w; ++k)
        if (mask.rows[win.node_index][k] != FaultClass::Normal) expect = mask.rows[win.node_index][k];
      EXPECT_EQ(win.label, expect);
    }
  }
}

TEST(BlockSplit, DiscardsStraddlingWindows) {
  BlockSplit s{48, 4};
  EXPECT_EQ(s.block_split(0), Split::Train);
  EXPECT_EQ(s.block_split(3 * 48), Split::Test);
  EXPECT_EQ(s.window_split(0, 24), Split::Train);
  EXPECT_EQ(s.window_split(2 * 48 + 30, 24), Split::Discard);
  EXPECT_EQ(s.window_split(3 * 48, 24), Split::Test);
}

TEST(Normalizer, UsesTrainBlocksOnly) {
  AlignedPanel p;
  p.node_ids = {1};
  p.values = {std::vector<double>(8, 1.0)};
  for (int k = 0; k < 8; ++k) p.grid.push_back(k);
  p.values[0][6] = p.values[0][7] = 100.0;  // test block
  p.values[0][0] = 3.0;
  const auto n = Normalizer::fit(p, BlockSplit{2, 4});
  EXPECT_DOUBLE_EQ(n.mean[0], 1.0 + 2.0 / 6.0);
}
