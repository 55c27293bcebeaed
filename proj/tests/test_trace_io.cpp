#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "iogears/trace_io.hpp"

using namespace iogears;

namespace {

std::vector<TraceRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in);
}

IopsSeries totals(std::vector<std::uint64_t> t) {
  IopsSeries s;
  s.total = t;
  s.read = t;
  s.write.assign(t.size(), 0);
  return s;
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ParseTrace, MapsFields) {
  const auto r = parse("0,vol1,read,4096,4096\n");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0], (TraceRecord{0, "vol1", Op::read, 4096, 4096}));
}

TEST(ParseTrace, UnknownOpNamesLine) {
  EXPECT_EQ(parse_error("12,vol1,scan,0,512"), "unknown op 'scan' at line 1");
}

TEST(ParseTrace, EmptyInput) { EXPECT_TRUE(parse("").empty()); }

TEST(ParseTrace, SkipsCommentsAndBlankLines) {
  const auto r = parse("# header\n\n5,a,write,0,512\n# tail\n");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].op, Op::write);
}

TEST(ParseTrace, MalformedLinesReportLineNumber) {
  EXPECT_NE(parse_error("0,a,read,0,512\n1,a,read,0\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error("x,a,read,0,512").find("timestamp"), std::string::npos);
  EXPECT_NE(parse_error("0,a,read,0,big").find("size"), std::string::npos);
  EXPECT_NE(parse_error("0,a,read,0,0").find("line 1"), std::string::npos);
  try {
    parse("# c\n0,a,read,0,512\n0,a,nope,0,512\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseTrace, SortsStablyAndShiftsEpoch) {
  const auto r = parse("3500000,a,read,1,512\n3200000,b,read,2,512\n3200000,c,write,3,512\n");
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].volume_id, "b");
  EXPECT_EQ(r[1].volume_id, "c");
  EXPECT_EQ(r[0].timestamp_us, 200000);  // epoch is the whole second 3
  EXPECT_EQ(r[2].timestamp_us, 500000);
  EXPECT_TRUE(std::is_sorted(r.begin(), r.end(),
                             [](auto& a, auto& b) { return a.timestamp_us < b.timestamp_us; }));
}

TEST(ParseTrace, WriteRoundTrips) {
  const auto records = generate_synthetic(std::vector<SyntheticPhaseSpec>{{3, 50, 0.5, 8192}}, 9, "v");
  std::ostringstream out;
  write_trace(out, records);
  EXPECT_EQ(parse(out.str()), records);
}

TEST(BinIops, CountsPerSecond) {
  std::vector<TraceRecord> r;
  for (const std::int64_t t : {100000, 500000, 900000}) r.push_back({t, "v", Op::read, 0, 512});
  const auto s = bin_iops(r, 2);
  EXPECT_EQ(s.total, (std::vector<std::uint64_t>{3, 0}));
  EXPECT_EQ(s.read, (std::vector<std::uint64_t>{3, 0}));
  EXPECT_EQ(s.write, (std::vector<std::uint64_t>{0, 0}));
}

TEST(BinIops, EmptyRecords) {
  EXPECT_EQ(bin_iops({}, 5).total, std::vector<std::uint64_t>(5, 0));
}

TEST(BinIops, SyntheticSecondsCountExactly) {
  const std::vector<SyntheticPhaseSpec> phases{{1, 500}, {1, 1200}};
  const auto s = bin_iops(generate_synthetic(phases, 3), 2);
  EXPECT_EQ(s.total, (std::vector<std::uint64_t>{500, 1200}));
}

TEST(BinIops, RecordPastHorizonThrows) {
  const std::vector<TraceRecord> r{{2'000'000, "v", Op::read, 0, 512}};
  EXPECT_THROW(bin_iops(r, 2), std::out_of_range);
  EXPECT_EQ(trace_horizon(r), 3u);
  EXPECT_NO_THROW(bin_iops(r, 3));
}

TEST(BinIops, ByteSeries) {
  const std::vector<TraceRecord> r{{0, "v", Op::read, 0, 4096}, {10, "v", Op::write, 0, 512}};
  const auto a = bin_arrivals(r, 1);
  EXPECT_EQ(a.read_bytes[0], 4096.0);
  EXPECT_EQ(a.write_bytes[0], 512.0);
  EXPECT_EQ(a.iops.total[0], 2u);
}

TEST(BinIops, PropertyTotalsMatchRecordCount) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TraceRecord> r;
    const int n = static_cast<int>(rng() % 500);
    for (int i = 0; i < n; ++i) {
      r.push_back({static_cast<std::int64_t>(rng() % 20'000'000), "v",
                   rng() % 2 ? Op::read : Op::write, 0, 512});
    }
    const auto s = bin_iops(r, 20);
    EXPECT_EQ(std::accumulate(s.total.begin(), s.total.end(), std::uint64_t{0}),
              static_cast<std::uint64_t>(n));
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.total[i], s.read[i] + s.write[i]);
  }
}

TEST(Percentile, NearestRankOnPermutation) {
  std::vector<std::uint64_t> v(100);
  std::iota(v.begin(), v.end(), 1);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(5));
  EXPECT_EQ(percentile_iops(totals(v), 95), 95);
  EXPECT_EQ(percentile_iops(totals(v), 100), 100);
  EXPECT_EQ(percentile_iops(totals(v), 0.5), 1);
}

TEST(Percentile, SingleBin) {
  for (const double p : {0.1, 50.0, 99.9, 100.0}) EXPECT_EQ(percentile_iops(totals({42}), p), 42);
}

TEST(Percentile, Errors) {
  EXPECT_THROW(percentile_iops(IopsSeries{}, 50), std::invalid_argument);
  EXPECT_THROW(percentile_iops(totals({1}), 0), std::invalid_argument);
  EXPECT_THROW(percentile_iops(totals({1}), 100.5), std::invalid_argument);
}

TEST(Percentile, MonotoneInP) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint64_t> v(1 + rng() % 300);
    for (auto& x : v) x = rng() % 5000;
    double prev = -1;
    for (double p = 0.5; p <= 100; p += 0.5) {
      const double q = percentile_iops(totals(v), p);
      EXPECT_GE(q, prev);
      prev = q;
    }
  }
}

TEST(Statistics, AverageAndBurstShare) {
  const auto s = totals({0, 10, 30, 60});
  EXPECT_DOUBLE_EQ(average_iops(s), 25.0);
  EXPECT_DOUBLE_EQ(burst_share(s, 0.25), 0.6);
  EXPECT_DOUBLE_EQ(burst_share(s, 0.5), 0.9);
  EXPECT_DOUBLE_EQ(burst_share(s, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(burst_share(totals({0, 0}), 0.5), 0.0);
}

TEST(Synthetic, FivePhaseBins) {
  std::vector<SyntheticPhaseSpec> phases;
  std::vector<std::uint64_t> expected;
  for (const std::uint64_t iops : {500, 1000, 2000, 4000, 6000}) {
    phases.push_back({20, iops});
    expected.insert(expected.end(), 20, iops);
  }
  const auto records = generate_synthetic(phases, 1);
  EXPECT_EQ(bin_iops(records, 100).total, expected);
}

TEST(Synthetic, ZeroDurationIsEmpty) {
  EXPECT_TRUE(generate_synthetic(std::vector<SyntheticPhaseSpec>{{0, 1000}}, 1).empty());
}

TEST(Synthetic, RejectsNoPhases) {
  EXPECT_THROW(generate_synthetic({}, 1), std::invalid_argument);
}

TEST(Synthetic, DeterministicInSeed) {
  const std::vector<SyntheticPhaseSpec> phases{{5, 300, 0.7, 4096}, {5, 900, 0.2, 16384}};
  const auto a = generate_synthetic(phases, 42, "x");
  EXPECT_EQ(a, generate_synthetic(phases, 42, "x"));
  EXPECT_NE(a, generate_synthetic(phases, 43, "x"));
}

TEST(Synthetic, ReadFractionAndSizes) {
  const auto r = generate_synthetic(std::vector<SyntheticPhaseSpec>{{10, 1000, 0.3, 8192}}, 2);
  const auto reads = std::count_if(r.begin(), r.end(), [](auto& x) { return x.op == Op::read; });
  EXPECT_NEAR(static_cast<double>(reads) / 10000.0, 0.3, 0.02);
  EXPECT_TRUE(std::all_of(r.begin(), r.end(), [](auto& x) { return x.size == 8192; }));
  const auto all_reads = generate_synthetic(std::vector<SyntheticPhaseSpec>{{2, 100, 1.0}}, 2);
  EXPECT_TRUE(std::all_of(all_reads.begin(), all_reads.end(), [](auto& x) { return x.op == Op::read; }));
}

TEST(Multiplex, IdenticalSeriesDouble) {
  const auto s = totals({5, 1, 9, 3, 7});
  const std::vector<double> ps{50, 90, 100};
  const auto r = multiplex_stats({{"a", s}, {"b", s}}, ps);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(r.sum[i], 2 * percentile_iops(s, ps[i]));
    EXPECT_EQ(r.multiplex[i], 2 * percentile_iops(s, ps[i]));
  }
}

TEST(Multiplex, StaggeredPeaks) {
  const std::vector<double> ps{100};
  const auto r = multiplex_stats({{"s1", totals({10, 0})}, {"s2", totals({0, 10})}}, ps);
  EXPECT_EQ(r.sum[0], 20);
  EXPECT_EQ(r.multiplex[0], 10);
  EXPECT_EQ(r.volumes, (std::vector<std::string>{"s1", "s2"}));
  EXPECT_DOUBLE_EQ(r.sum_average, 10);
  EXPECT_DOUBLE_EQ(r.multiplex_average, 10);
}

TEST(Multiplex, MismatchedHorizonsThrow) {
  const std::vector<double> ps{90};
  EXPECT_THROW(multiplex_stats({{"a", totals({1, 2})}, {"b", totals({1})}}, ps),
               std::invalid_argument);
}

// The aggregate percentile is not bounded by the sum of per-volume
// percentiles in general: below the median, or with sparse isolated spikes,
// the ordering can flip.
TEST(Multiplex, SubadditivityCanFail) {
  const std::vector<double> median{50};
  const auto low = multiplex_stats({{"a", totals({0, 0, 10})}, {"b", totals({10, 0, 0})}}, median);
  EXPECT_GT(low.multiplex[0], low.sum[0]);

  std::vector<std::uint64_t> a(100, 0), b(100, 0);
  for (int i = 0; i < 6; ++i) {
    a[static_cast<std::size_t>(i)] = 100;
    b[static_cast<std::size_t>(50 + i)] = 100;
  }
  const std::vector<double> p95{95};
  const auto spikes = multiplex_stats({{"a", totals(a)}, {"b", totals(b)}}, p95);
  EXPECT_EQ(spikes.sum[0], 100 + 100);
  EXPECT_EQ(spikes.multiplex[0], 100);
  std::vector<std::uint64_t> c(100, 0), d(100, 0);
  for (int i = 0; i < 3; ++i) {
    c[static_cast<std::size_t>(i)] = 100;
    d[static_cast<std::size_t>(50 + i)] = 100;
  }
  const auto sparse = multiplex_stats({{"c", totals(c)}, {"d", totals(d)}}, p95);
  EXPECT_EQ(sparse.sum[0], 0);
  EXPECT_EQ(sparse.multiplex[0], 100);
}

TEST(Multiplex, HoldsForDenseNoise) {
  std::mt19937_64 rng(23);
  std::lognormal_distribution<double> noise(6.0, 0.6);
  const std::vector<double> ps{90, 95, 99, 99.9};
  for (int trial = 0; trial < 20; ++trial) {
    std::map<std::string, IopsSeries> set;
    for (int v = 0; v < 6; ++v) {
      std::vector<std::uint64_t> t(3600);
      for (auto& x : t) x = static_cast<std::uint64_t>(noise(rng));
      set["v" + std::to_string(v)] = totals(t);
    }
    const auto r = multiplex_stats(set, ps);
    for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_LE(r.multiplex[i], r.sum[i]);
  }
}
