#include <gtest/gtest.h>

#include <cmath>

#include "../support/series.hpp"
#include "thermocast/errors.hpp"
#include "thermocast/windows.hpp"

using namespace thermocast;
using thermocast::testing::gap_frame;

namespace {

features::FeatureFrame single_run(int hours, const std::string& id = "b0", int offset = 0) {
  features::FeatureFrame f;
  features::Segment s;
  s.building_id = id;
  const TimePoint t0 = parse_timestamp("2023-01-01T00:00:00Z");
  for (int h = 0; h < hours; ++h) {
    s.hours.push_back(t0 + std::chrono::hours{h + offset});
    features::DynamicRow r{};
    r.fill(static_cast<double>(h));
    s.dynamic.push_back(r);
    s.indoor_temp_c.push_back(20.0 + h);
  }
  f.segments.push_back(s);
  return f;
}

// N windows, one per hour, distinct anchors.
windows::WindowSet n_windows(std::size_t n) {
  return windows::make_windows(single_run(static_cast<int>(n + 35)));
}

}  // namespace

TEST(Windows, CountsPerSegmentLength) {
  EXPECT_EQ(windows::make_windows(single_run(36)).size(), 1u);
  EXPECT_EQ(windows::make_windows(single_run(100)).size(), 65u);
  EXPECT_EQ(windows::make_windows(single_run(35)).size(), 0u);
}

TEST(Windows, GapSplitsIntoTwoSegments) {
  auto f = single_run(40);
  auto g = single_run(35, "b0", 41);
  f.segments.push_back(g.segments[0]);
  windows::WindowReport rep;
  const auto ws = windows::make_windows(f, 12, 24, &rep);
  EXPECT_EQ(ws.size(), 5u);
  EXPECT_EQ(rep.skipped_segments, 1u);
}

TEST(Windows, ContentsOfFirstWindow) {
  const auto ws = windows::make_windows(single_run(36));
  ASSERT_EQ(ws.size(), 1u);
  EXPECT_EQ(ws.x_window(0).size(), 12u * features::kDynamicFeatures);
  EXPECT_DOUBLE_EQ(ws.x_window(0)[0], 0.0);
  EXPECT_DOUBLE_EQ(ws.last_step_row(0)[0], 11.0);
  EXPECT_DOUBLE_EQ(ws.t_last[0], 31.0);
  EXPECT_DOUBLE_EQ(ws.y_row(0)[0], 32.0);
  EXPECT_DOUBLE_EQ(ws.y_row(0)[23], 55.0);
  EXPECT_EQ(format_timestamp(ws.anchors[0]), "2023-01-01T11:00:00Z");
}

TEST(Windows, MatchesBruteForceOnGappySeries) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::string why;
    EXPECT_TRUE(thermocast::testing::windows_match_brute_force(gap_frame(seed, 3, 300, 0.02), &why))
        << "seed " << seed << ": " << why;
  }
}

TEST(Windows, AnchorsSortedAcrossBuildings) {
  const auto ws = windows::make_windows(gap_frame(3, 4, 200, 0.0));
  EXPECT_EQ(ws.size(), 4u * 165u);
  for (std::size_t i = 1; i < ws.size(); ++i) EXPECT_LE(ws.anchors[i - 1], ws.anchors[i]);
}

TEST(Split, SizesForHundredAndThousand) {
  auto s = windows::split_target(n_windows(100));
  EXPECT_EQ(s.unsup.size(), 81u);
  EXPECT_EQ(s.cal.size(), 9u);
  EXPECT_EQ(s.test.size(), 10u);
  s = windows::split_target(n_windows(1000));
  EXPECT_EQ(s.unsup.size(), 810u);
  EXPECT_EQ(s.cal.size(), 90u);
  EXPECT_EQ(s.test.size(), 100u);
}

TEST(Split, PartsStrictlyOrdered) {
  const auto s = windows::split_target(n_windows(200));
  EXPECT_LT(s.unsup.anchors.back(), s.cal.anchors.front());
  EXPECT_LT(s.cal.anchors.back(), s.test.anchors.front());
}

TEST(Split, TiedAnchorsStayTogether) {
  // Two buildings on identical hours: every anchor appears twice.
  const auto ws = windows::make_windows(gap_frame(5, 2, 85, 0.0));
  ASSERT_EQ(ws.size(), 100u);
  const auto s = windows::split_target(ws);
  EXPECT_EQ(s.unsup.size() + s.cal.size() + s.test.size(), 100u);
  EXPECT_LT(s.unsup.anchors.back(), s.cal.anchors.front());
  EXPECT_LT(s.cal.anchors.back(), s.test.anchors.front());
}

TEST(Split, TooFewWindowsRejected) {
  EXPECT_THROW(windows::split_target(n_windows(29)), ConfigError);
  EXPECT_NO_THROW(windows::split_target(n_windows(30)));
}

TEST(Split, PurgeRemovesLabelsReachingTest) {
  auto s = windows::split_target(n_windows(200));
  windows::purge_label_overlap(s);
  EXPECT_GT(s.purged, 0u);
  const TimePoint first_test = s.test.anchors.front();
  for (const auto* part : {&s.unsup, &s.cal}) {
    for (const auto a : part->anchors) EXPECT_LT(a + std::chrono::hours{24}, first_test);
  }
}

TEST(WindowAt, ReturnsRequestedAnchor) {
  const auto f = single_run(20);
  const TimePoint anchor = parse_timestamp("2023-01-01T15:00:00Z");
  const auto ws = windows::window_at(f, "b0", anchor);
  ASSERT_EQ(ws.size(), 1u);
  EXPECT_DOUBLE_EQ(ws.t_last[0], 35.0);
  EXPECT_DOUBLE_EQ(ws.y_row(0)[0], 36.0);
  EXPECT_TRUE(std::isnan(ws.y_row(0)[4]));
}

TEST(WindowAt, Errors) {
  const auto f = single_run(20);
  EXPECT_THROW(windows::window_at(f, "nope", parse_timestamp("2023-01-01T15:00:00Z")), UsageError);
  try {
    windows::window_at(f, "b0", parse_timestamp("2023-01-01T05:00:00Z"));
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos) << e.what();
  }
  EXPECT_THROW(windows::window_at(f, "b0", parse_timestamp("2023-02-01T05:00:00Z")), IngestionError);
}
