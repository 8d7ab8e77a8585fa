#include "ladderopt/baselines.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "ladderopt/error.hpp"
#include "ladderopt/optimizer.hpp"
#include "ladderopt/region.hpp"

namespace ladderopt {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Pixels parse_height(std::string_view s, std::string_view whole) {
  Pixels v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v <= 0)
    throw ValidationError("baseline '" + std::string(whole) + "': bad resolution '" + std::string(s) + "'");
  return v;
}

BitsPerSecond labeled_bitrate(const RateQualityCurve& curve, std::string_view label) {
  const auto idx = curve.find_label(label);
  if (!idx)
    throw ValidationError("no sample labeled '" + std::string(label) + "' at " + std::to_string(curve.resolution()) +
                          "p");
  return curve.bitrates()[*idx];
}

}  // namespace

BaselineSpec BaselineSpec::parse(std::string_view text) {
  const auto parts = split(text, ':');
  BaselineSpec spec;
  if (parts[0] == "fixed" && parts.size() == 2 && !parts[1].empty()) {
    spec.kind = Kind::fixed_label;
    spec.label = std::string(parts[1]);
    return spec;
  }
  if (parts[0] == "hull" && parts.size() == 4 && !parts[3].empty()) {
    spec.kind = Kind::hull_maximizing;
    spec.low_anchor = parse_height(parts[1], text);
    spec.high_anchor = parse_height(parts[2], text);
    spec.label = std::string(parts[3]);
    if (spec.low_anchor >= spec.high_anchor)
      throw ValidationError("baseline '" + std::string(text) + "': low anchor must be below high anchor");
    return spec;
  }
  throw ValidationError("unknown baseline '" + std::string(text) + "' (expected fixed:<label> or hull:<lo>:<hi>:<label>)");
}

std::string BaselineSpec::to_string() const {
  if (kind == Kind::fixed_label) return "fixed:" + label;
  return "hull:" + std::to_string(low_anchor) + ":" + std::to_string(high_anchor) + ":" + label;
}

std::string BaselineSpec::name() const { return kind == Kind::fixed_label ? "fixed" : "hull"; }

Ladder fixed_label_ladder(const ChunkRqModel& model, std::string_view label) {
  std::vector<LadderEntry> entries;
  for (const auto& [res, curve] : model.curves()) entries.push_back({res, labeled_bitrate(curve, label)});
  return Ladder::sorted(std::move(entries));
}

Ladder hull_maximizing_ladder(const ChunkRqModel& model, std::pair<Pixels, Pixels> anchors,
                              std::string_view anchor_label) {
  const auto [low, high] = anchors;
  if (!model.has(low)) throw ValidationError("hull baseline: anchor " + std::to_string(low) + "p missing");
  if (!model.has(high)) throw ValidationError("hull baseline: anchor " + std::to_string(high) + "p missing");
  if (low >= high) throw ValidationError("hull baseline: low anchor must be below high anchor");

  std::map<Pixels, RateQualityCurve> curves;
  for (const auto& [res, curve] : model.curves())
    if (res >= low && res <= high) curves.emplace(res, curve);
  const auto hull = upper_hull(curves);

  std::vector<Pixels> res;
  std::vector<std::optional<double>> rate;
  for (const auto& iv : hull.intervals) {
    res.push_back(iv.resolution);
    if (iv.resolution == low || iv.resolution == high) {
      rate.emplace_back(labeled_bitrate(curves.at(iv.resolution), anchor_label));
    } else if (!iv.empty) {
      rate.emplace_back(std::sqrt(iv.lo * iv.hi));
    } else {
      rate.emplace_back();
    }
  }
  // Dominated resolutions: geometric mean of the nearest placed neighbours.
  const std::vector<std::optional<double>> placed = rate;
  for (std::size_t i = 0; i < res.size(); ++i) {
    if (rate[i]) continue;
    std::size_t l = i;
    while (!placed[l]) --l;
    std::size_t r = i;
    while (!placed[r]) ++r;
    const auto [lo, hi] = bitrate_range(curves.at(res[i]));
    rate[i] = std::clamp(std::sqrt(*placed[l] * *placed[r]), lo, hi);
  }

  std::vector<LadderEntry> entries;
  for (std::size_t i = 0; i < res.size(); ++i) {
    double r = *rate[i];
    if (i > 0 && r < entries.back().bitrate + kDefaultMinGap) {
      const auto [lo, hi] = bitrate_range(curves.at(res[i]));
      r = std::clamp(entries.back().bitrate + kDefaultMinGap, lo, hi);
    }
    entries.push_back({res[i], r});
  }
  return Ladder(std::move(entries));
}

Ladder make_baseline(const ChunkRqModel& model, const BaselineSpec& spec) {
  if (spec.kind == BaselineSpec::Kind::fixed_label) return fixed_label_ladder(model, spec.label);
  return hull_maximizing_ladder(model, {spec.low_anchor, spec.high_anchor}, spec.label);
}

}  // namespace ladderopt
