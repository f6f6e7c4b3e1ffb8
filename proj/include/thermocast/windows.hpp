#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "thermocast/features.hpp"

namespace thermocast::windows {

inline constexpr std::size_t kLookback = 12;
inline constexpr std::size_t kHorizon = 24;

// N sliding windows in flat row-major buffers:
//   x          [N x W x F]  absolute dynamic features for hours t-W+1 .. t
//   last_step  [N x F]      the row at hour t
//   context    [N x C]
//   t_last     [N]          indoor temperature at hour t (°C)
//   y          [N x H]      indoor temperature for hours t+1 .. t+H (°C)
// Windows are ordered by anchor hour t.
struct WindowSet {
  std::size_t window = kLookback;
  std::size_t horizon = kHorizon;
  std::size_t dynamic_features = features::kDynamicFeatures;
  std::size_t context_features = features::kContextFeatures;

  std::vector<double> x;
  std::vector<double> last_step;
  std::vector<double> context;
  std::vector<double> t_last;
  std::vector<double> y;
  std::vector<TimePoint> anchors;
  std::vector<std::string> building_ids;

  std::size_t size() const { return anchors.size(); }
  bool empty() const { return anchors.empty(); }

  std::span<const double> x_window(std::size_t i) const;
  std::span<const double> last_step_row(std::size_t i) const;
  std::span<const double> context_row(std::size_t i) const;
  std::span<const double> y_row(std::size_t i) const;

  // Same layout, selected windows in the given order.
  WindowSet select(std::span<const std::size_t> indices) const;
  WindowSet slice(std::size_t begin, std::size_t end) const;
  // Empty set with this set's dimensions.
  WindowSet empty_like() const;
  void append(const WindowSet& other, std::size_t i);
};

struct WindowReport {
  std::size_t windows = 0;
  std::size_t skipped_segments = 0;  // segments shorter than W + H
};

// Stride-1 windows from every contiguous segment, sorted chronologically by
// anchor (ties keep segment order).
WindowSet make_windows(const features::FeatureFrame& frame, std::size_t window = kLookback,
                       std::size_t horizon = kHorizon, WindowReport* report = nullptr);

// The single window anchored at `anchor` for one building, for forecasting.
// Needs the W hours ending at the anchor; label hours missing from the frame
// are NaN. Throws UsageError for an unknown building and IngestionError naming
// the first missing history hour.
WindowSet window_at(const features::FeatureFrame& frame, const std::string& building_id, TimePoint anchor,
                    std::size_t window = kLookback, std::size_t horizon = kHorizon);

struct DomainSplit {
  WindowSet unsup;  // first 90% of the adaptation part, labels unused
  WindowSet cal;    // last 10% of the adaptation part, labeled
  WindowSet test;   // final 10% of all windows
  std::size_t purged = 0;
};

// Chronological 90/10 then 90/10 split at floor(0.9 N) and floor(0.9 floor(0.9 N)).
// A boundary that falls inside a group of windows sharing one anchor hour is
// moved forward past the group so anchors stay strictly ordered across parts.
// Throws ConfigError for N < 30.
DomainSplit split_target(const WindowSet& windows);

// Drops unsup/cal windows whose label hours reach the first test anchor, so
// no training label overlaps the test period.
void purge_label_overlap(DomainSplit& split);

}  // namespace thermocast::windows
