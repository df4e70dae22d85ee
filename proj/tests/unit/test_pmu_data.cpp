#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fsstdef/pmu_data.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fsstdef;
using testutil::error_of;
using testutil::pi;

namespace {

std::vector<BranchMeasurement> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_measurements(in);
}

}  // namespace

TEST(ParseMeasurements, FourRowsOneBranch) {
  const auto b = parse(
      "time_s,branch_id,P,Q,Vmag_pu,Vang_rad\n"
      "0,L1,1,2,1.0,0.1\n"
      "0.0333333333,L1,1.1,2.1,1.01,0.11\n"
      "0.0666666667,L1,1.2,2.2,1.02,0.12\n"
      "0.1,L1,1.3,2.3,1.03,0.13\n");
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].branch_id, "L1");
  EXPECT_EQ(b[0].p.size(), 4u);
  EXPECT_NEAR(b[0].p.dt, 1.0 / 30.0, 1e-12);
  EXPECT_DOUBLE_EQ(b[0].q.values[3], 2.3);
  EXPECT_DOUBLE_EQ(b[0].vang.values[1], 0.11);
}

TEST(ParseMeasurements, InterleavedBranchesAreSplitAndSorted) {
  const auto b = parse(
      "time_s,branch_id,P,Q,Vmag_pu,Vang_rad\n"
      "0.1,A,2,0,1,0\n"
      "0.0,B,10,0,1,0\n"
      "0.0,A,1,0,1,0\n"
      "0.1,B,20,0,1,0\n");
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0].branch_id, "A");
  EXPECT_EQ(b[0].p.values, (std::vector<double>{1, 2}));
  EXPECT_EQ(b[1].branch_id, "B");
  EXPECT_EQ(b[1].p.values, (std::vector<double>{10, 20}));
}

TEST(ParseMeasurements, ExtraColumnsIgnored) {
  const auto b = parse(
      "freq_hz,time_s,branch_id,P,Q,Vmag_pu,Vang_rad\n"
      "60,0,A,1,0,1,0\n"
      "60,1,A,2,0,1,0\n");
  EXPECT_EQ(b[0].p.values, (std::vector<double>{1, 2}));
}

TEST(ParseMeasurements, GapIsFlaggedAgainstReferenceReader) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 30 + rng() % 50;
    const std::size_t gap_at = 5 + rng() % (n - 10);
    std::ostringstream os;
    os << "time_s,branch_id,P,Q,Vmag_pu,Vang_rad\n";
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= gap_at && i < gap_at + 2) continue;
      os << static_cast<double>(i) * 0.1 << ",X," << static_cast<double>(i) << ",0,1,0\n";
    }
    const auto ref = oracle::read_csv(os.str());
    const auto b = parse(os.str());
    ASSERT_EQ(b[0].p.size(), n);
    EXPECT_EQ(b[0].gap_indices, (std::vector<std::size_t>{gap_at, gap_at + 1}));
    std::size_t row = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == gap_at || i == gap_at + 1) {
        EXPECT_TRUE(std::isnan(b[0].p.values[i]));
        continue;
      }
      EXPECT_DOUBLE_EQ(b[0].p.values[i], std::stod(ref.rows[row++][2]));
    }
  }
}

TEST(ParseMeasurements, MalformedRowReportsLine) {
  try {
    parse("time_s,branch_id,P,Q,Vmag_pu,Vang_rad\n0,A,1,0,1,0\n0.1,A,abc,0,1,0\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.code(), ErrorCode::parse);
  }
}

TEST(ParseMeasurements, JitterAndShortBranchRejected) {
  EXPECT_EQ(error_of([] { parse("time_s,branch_id,P,Q,Vmag_pu,Vang_rad\n0,A,1,0,1,0\n0.1,A,1,0,1,0\n0.2,A,1,0,1,0\n0.33,A,1,0,1,0\n"); }),
            ErrorCode::format);
  EXPECT_EQ(error_of([] { parse("time_s,branch_id,P,Q,Vmag_pu,Vang_rad\n0,A,1,0,1,0\n"); }), ErrorCode::insufficient_data);
  EXPECT_EQ(error_of([] { parse("time_s,branch,P,Q,Vmag_pu,Vang_rad\n0,A,1,0,1,0\n"); }), ErrorCode::parse);
}

TEST(ParseMeasurements, SchemaRenamesColumns) {
  CsvSchema schema;
  schema.time = "t";
  schema.p = "MW";
  std::istringstream in("t,branch_id,MW,Q,Vmag_pu,Vang_rad\n0,A,5,0,1,0\n1,A,6,0,1,0\n");
  const auto b = parse_measurements(in, schema);
  EXPECT_EQ(b[0].p.values, (std::vector<double>{5, 6}));
}

TEST(UnwrapAngles, ConstantUnchanged) {
  AngleSeries a;
  a.dt = 0.1;
  a.values.assign(20, 1.234);
  EXPECT_EQ(unwrap_angles(a).values, a.values);
}

TEST(UnwrapAngles, RampRecovered) {
  AngleSeries a;
  a.dt = 0.01;
  std::vector<double> ramp;
  for (int i = 0; i <= 400; ++i) ramp.push_back(4.0 * pi * i / 400.0);
  for (double v : ramp) a.values.push_back(wrap_angle(v));
  const auto u = unwrap_angles(a);
  for (std::size_t i = 0; i < ramp.size(); ++i) EXPECT_NEAR(u.values[i], ramp[i], 1e-12);
}

TEST(UnwrapAngles, WrapRange) {
  for (double x : {-10.0, -pi, -3.0, 0.0, pi, 3.5, 100.0}) {
    const double w = wrap_angle(x);
    EXPECT_GT(w, -pi);
    EXPECT_LE(w, pi);
    EXPECT_NEAR(std::remainder(w - x, 2.0 * pi), 0.0, 1e-12);
  }
}

TEST(RepairGaps, MidpointInterpolation) {
  const auto r = repair_gaps(testutil::series({1.0, std::nan(""), 3.0}, 1.0));
  EXPECT_EQ(r.values, (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(RepairGaps, GapFreeIsIdentity) {
  const auto s = testutil::tone(0.3, 30.0, 300);
  EXPECT_EQ(repair_gaps(s).values, s.values);
}

TEST(RepairGaps, OutlierReplaced) {
  const auto clean = testutil::tone(0.25, 30.0, 600);
  auto dirty = clean;
  dirty.values[300] = 50.0;
  const auto r = repair_gaps(dirty, 5.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r.values[i] - clean.values[i]));
  EXPECT_LT(worst, 0.05);
}

TEST(RepairGaps, AllMissingIsUnrecoverable) {
  const double nan = std::nan("");
  EXPECT_EQ(error_of([&] { repair_gaps(testutil::series({nan, nan, nan}, 1.0)); }), ErrorCode::unrecoverable_data);
}

TEST(PreprocessBranch, RejectsNonPositiveVoltage) {
  BranchMeasurement b;
  b.branch_id = "A";
  b.p = b.q = testutil::series({0, 0, 0}, 1.0);
  b.vmag = testutil::series({1.0, 0.0, 1.0}, 1.0);
  b.vang = AngleSeries(testutil::series({0, 0, 0}, 1.0));
  EXPECT_EQ(error_of([&] { preprocess_branch(b); }), ErrorCode::data);
}
