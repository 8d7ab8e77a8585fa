#pragma once

#include <map>
#include <span>
#include <vector>

#include "ladderopt/rq_model.hpp"

namespace ladderopt {

struct RqPoint {
  BitsPerSecond rate = 0.0;
  double quality = 0.0;
  friend bool operator==(const RqPoint&, const RqPoint&) = default;
};

// Convex hull of a set of operating points: every achievable
// (average bitrate, average quality) pair of a ladder lies inside it.
//
// Geometry runs on normalized coordinates (rate / rate_scale,
// quality / quality_scale), so tolerances are relative to the largest rate
// and the largest |quality| of the input.
struct AchievableRegion {
  std::vector<RqPoint> vertices;  // counterclockwise; 1 (point) or 2 (segment) when degenerate
  double rate_scale = 1.0;
  double quality_scale = 1.0;
};

AchievableRegion achievable_region(std::span<const RqPoint> points);

// True iff `p` lies inside the region or within `tol` (normalized units) of
// its boundary.
bool contains(const AchievableRegion& region, const RqPoint& p, double tol);

struct HullVertex {
  RqPoint point;
  Pixels resolution = 0;
};

// Bitrate interval over which one resolution's samples are upper-hull
// vertices. `empty` when the curve is dominated everywhere.
struct HullInterval {
  Pixels resolution = 0;
  BitsPerSecond lo = 0.0;
  BitsPerSecond hi = 0.0;
  bool empty = true;
};

struct UpperHull {
  std::vector<HullVertex> vertices;    // ascending rate, leftmost point to the max-quality point
  std::vector<HullInterval> intervals;  // one per curve, ascending resolution
};

// Upper convex hull (maximal quality per rate) of the union of all curve
// samples. Intervals never overlap: if a resolution's hull vertices are
// interleaved with another's, it keeps its widest contiguous run.
UpperHull upper_hull(const std::map<Pixels, RateQualityCurve>& curves);

}  // namespace ladderopt
