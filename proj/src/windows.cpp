#include "thermocast/windows.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "thermocast/errors.hpp"

namespace thermocast::windows {

std::span<const double> WindowSet::x_window(std::size_t i) const {
  const std::size_t len = window * dynamic_features;
  return std::span<const double>(x).subspan(i * len, len);
}

std::span<const double> WindowSet::last_step_row(std::size_t i) const {
  return std::span<const double>(last_step).subspan(i * dynamic_features, dynamic_features);
}

std::span<const double> WindowSet::context_row(std::size_t i) const {
  return std::span<const double>(context).subspan(i * context_features, context_features);
}

std::span<const double> WindowSet::y_row(std::size_t i) const {
  return std::span<const double>(y).subspan(i * horizon, horizon);
}

WindowSet WindowSet::empty_like() const {
  WindowSet out;
  out.window = window;
  out.horizon = horizon;
  out.dynamic_features = dynamic_features;
  out.context_features = context_features;
  return out;
}

void WindowSet::append(const WindowSet& other, std::size_t i) {
  const auto xs = other.x_window(i);
  x.insert(x.end(), xs.begin(), xs.end());
  const auto ls = other.last_step_row(i);
  last_step.insert(last_step.end(), ls.begin(), ls.end());
  const auto cs = other.context_row(i);
  context.insert(context.end(), cs.begin(), cs.end());
  t_last.push_back(other.t_last[i]);
  const auto ys = other.y_row(i);
  y.insert(y.end(), ys.begin(), ys.end());
  anchors.push_back(other.anchors[i]);
  building_ids.push_back(other.building_ids[i]);
}

WindowSet WindowSet::select(std::span<const std::size_t> indices) const {
  WindowSet out = empty_like();
  for (std::size_t i : indices) {
    if (i >= size()) throw DimensionError("WindowSet::select: index out of range");
    out.append(*this, i);
  }
  return out;
}

WindowSet WindowSet::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw DimensionError("WindowSet::slice: range out of bounds");
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return select(idx);
}

WindowSet make_windows(const features::FeatureFrame& frame, std::size_t window, std::size_t horizon,
                       WindowReport* report) {
  if (window < 2 || horizon < 1) throw ConfigError("make_windows: window must be >= 2 and horizon >= 1");
  struct Ref {
    const features::Segment* seg;
    std::size_t anchor;  // row index of hour t
  };
  std::vector<Ref> refs;
  std::size_t skipped = 0;
  for (const auto& seg : frame.segments) {
    if (seg.size() < window + horizon) {
      ++skipped;
      continue;
    }
    for (std::size_t t = window - 1; t + horizon < seg.size(); ++t) refs.push_back({&seg, t});
  }
  std::stable_sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) {
    return a.seg->hours[a.anchor] < b.seg->hours[b.anchor];
  });

  WindowSet out;
  out.window = window;
  out.horizon = horizon;
  const std::size_t f = out.dynamic_features;
  out.x.reserve(refs.size() * window * f);
  out.y.reserve(refs.size() * horizon);
  for (const auto& r : refs) {
    const auto& seg = *r.seg;
    for (std::size_t k = r.anchor + 1 - window; k <= r.anchor; ++k)
      out.x.insert(out.x.end(), seg.dynamic[k].begin(), seg.dynamic[k].end());
    out.last_step.insert(out.last_step.end(), seg.dynamic[r.anchor].begin(), seg.dynamic[r.anchor].end());
    out.context.insert(out.context.end(), seg.context.begin(), seg.context.end());
    out.t_last.push_back(seg.indoor_temp_c[r.anchor]);
    for (std::size_t k = 1; k <= horizon; ++k) out.y.push_back(seg.indoor_temp_c[r.anchor + k]);
    out.anchors.push_back(seg.hours[r.anchor]);
    out.building_ids.push_back(seg.building_id);
  }
  if (report) {
    report->windows = out.size();
    report->skipped_segments = skipped;
  }
  return out;
}

WindowSet window_at(const features::FeatureFrame& frame, const std::string& building_id, TimePoint anchor,
                    std::size_t window, std::size_t horizon) {
  bool known = false;
  for (const auto& seg : frame.segments) {
    if (seg.building_id != building_id) continue;
    known = true;
    const auto it = std::lower_bound(seg.hours.begin(), seg.hours.end(), anchor);
    if (it == seg.hours.end() || *it != anchor) continue;
    const auto t = static_cast<std::size_t>(it - seg.hours.begin());
    if (t + 1 < window) {
      throw IngestionError("building '" + building_id + "' needs " + std::to_string(window) +
                           " contiguous hours ending at " + format_timestamp(anchor) + "; hour " +
                           format_timestamp(seg.hours.front() - std::chrono::hours{1}) + " is missing");
    }
    WindowSet out;
    out.window = window;
    out.horizon = horizon;
    for (std::size_t k = t + 1 - window; k <= t; ++k)
      out.x.insert(out.x.end(), seg.dynamic[k].begin(), seg.dynamic[k].end());
    out.last_step.assign(seg.dynamic[t].begin(), seg.dynamic[t].end());
    out.context.assign(seg.context.begin(), seg.context.end());
    out.t_last.push_back(seg.indoor_temp_c[t]);
    for (std::size_t k = 1; k <= horizon; ++k)
      out.y.push_back(t + k < seg.size() ? seg.indoor_temp_c[t + k] : std::numeric_limits<double>::quiet_NaN());
    out.anchors.push_back(anchor);
    out.building_ids.push_back(building_id);
    return out;
  }
  if (!known) throw UsageError("unknown building '" + building_id + "'");
  throw IngestionError("building '" + building_id + "' has no usable data at " + format_timestamp(anchor) +
                       " (missing sensor reading or weather)");
}

namespace {

std::size_t past_ties(const WindowSet& ws, std::size_t boundary, std::size_t limit) {
  while (boundary > 0 && boundary < limit && ws.anchors[boundary] == ws.anchors[boundary - 1]) ++boundary;
  return boundary;
}

}  // namespace

DomainSplit split_target(const WindowSet& ws) {
  const std::size_t n = ws.size();
  if (n < 30) {
    throw ConfigError("split_target: need at least 30 windows, got " + std::to_string(n));
  }
  if (!std::is_sorted(ws.anchors.begin(), ws.anchors.end())) {
    throw UsageError("split_target: windows are not sorted chronologically");
  }
  const std::size_t test_begin = past_ties(ws, n * 9 / 10, n);
  const std::size_t cal_begin = past_ties(ws, test_begin * 9 / 10, test_begin);
  DomainSplit split;
  split.unsup = ws.slice(0, cal_begin);
  split.cal = ws.slice(cal_begin, test_begin);
  split.test = ws.slice(test_begin, n);
  return split;
}

void purge_label_overlap(DomainSplit& split) {
  if (split.test.empty()) return;
  const TimePoint first_test = split.test.anchors.front();
  auto keep = [&](WindowSet& part) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < part.size(); ++i) {
      const TimePoint last_label = part.anchors[i] + std::chrono::hours{static_cast<long>(part.horizon)};
      if (last_label < first_test) idx.push_back(i);
    }
    split.purged += part.size() - idx.size();
    part = part.select(idx);
  };
  keep(split.unsup);
  keep(split.cal);
}

}  // namespace thermocast::windows
