#include "ladderopt/region.hpp"

#include <algorithm>
#include <cmath>

#include "ladderopt/error.hpp"

namespace ladderopt {

namespace {

constexpr double kOrientEps = 1e-12;

struct P2 {
  double x;
  double y;
};

double cross(const P2& o, const P2& a, const P2& b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

double segment_distance(const P2& p, const P2& a, const P2& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

double max_abs(std::span<const RqPoint> points, bool rate) {
  double m = 0.0;
  for (const auto& p : points) m = std::max(m, std::abs(rate ? p.rate : p.quality));
  return m > 0.0 ? m : 1.0;
}

}  // namespace

AchievableRegion achievable_region(std::span<const RqPoint> points) {
  if (points.empty()) throw EmptyInputError("achievable_region: no points");
  for (const auto& p : points)
    if (!std::isfinite(p.rate) || !std::isfinite(p.quality)) throw ValidationError("achievable_region: non-finite point");

  AchievableRegion region;
  region.rate_scale = max_abs(points, true);
  region.quality_scale = max_abs(points, false);

  std::vector<RqPoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const RqPoint& a, const RqPoint& b) {
    return a.rate != b.rate ? a.rate < b.rate : a.quality < b.quality;
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() == 1) {
    region.vertices = pts;
    return region;
  }

  auto norm = [&](const RqPoint& p) { return P2{p.rate / region.rate_scale, p.quality / region.quality_scale}; };

  // Andrew's monotone chain; collinear points are dropped.
  std::vector<RqPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(norm(hull[k - 2]), norm(hull[k - 1]), norm(p)) <= kOrientEps) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(norm(hull[k - 2]), norm(hull[k - 1]), norm(pts[i])) <= kOrientEps) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() == 2 && hull[0] == hull[1]) hull.resize(1);
  region.vertices = std::move(hull);
  return region;
}

bool contains(const AchievableRegion& region, const RqPoint& p, double tol) {
  const auto& v = region.vertices;
  if (v.empty()) return false;
  auto norm = [&](const RqPoint& q) { return P2{q.rate / region.rate_scale, q.quality / region.quality_scale}; };
  const P2 q = norm(p);
  if (v.size() == 1) return std::hypot(q.x - norm(v[0]).x, q.y - norm(v[0]).y) <= tol;
  if (v.size() == 2) return segment_distance(q, norm(v[0]), norm(v[1])) <= tol;

  bool inside = true;
  for (std::size_t i = 0; i < v.size() && inside; ++i)
    if (cross(norm(v[i]), norm(v[(i + 1) % v.size()]), q) < 0.0) inside = false;
  if (inside) return true;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i)
    best = std::min(best, segment_distance(q, norm(v[i]), norm(v[(i + 1) % v.size()])));
  return best <= tol;
}

UpperHull upper_hull(const std::map<Pixels, RateQualityCurve>& curves) {
  UpperHull out;
  if (curves.empty()) return out;

  std::vector<HullVertex> pts;
  for (const auto& [res, curve] : curves)
    for (std::size_t i = 0; i < curve.size(); ++i) pts.push_back({{curve.bitrates()[i], curve.qualities()[i]}, res});

  double rate_scale = 0.0;
  double quality_scale = 0.0;
  for (const auto& p : pts) {
    rate_scale = std::max(rate_scale, std::abs(p.point.rate));
    quality_scale = std::max(quality_scale, std::abs(p.point.quality));
  }
  if (quality_scale == 0.0) quality_scale = 1.0;
  auto norm = [&](const HullVertex& h) { return P2{h.point.rate / rate_scale, h.point.quality / quality_scale}; };

  // Ascending rate; at equal rate only the best quality (then the higher
  // resolution) can be on the upper hull.
  std::sort(pts.begin(), pts.end(), [](const HullVertex& a, const HullVertex& b) {
    if (a.point.rate != b.point.rate) return a.point.rate < b.point.rate;
    if (a.point.quality != b.point.quality) return a.point.quality > b.point.quality;
    return a.resolution > b.resolution;
  });
  std::vector<HullVertex> unique;
  for (const auto& p : pts)
    if (unique.empty() || unique.back().point.rate != p.point.rate) unique.push_back(p);

  std::vector<HullVertex> hull;
  for (const auto& p : unique) {
    while (hull.size() >= 2 && cross(norm(hull[hull.size() - 2]), norm(hull.back()), norm(p)) >= -kOrientEps)
      hull.pop_back();
    hull.push_back(p);
  }
  // Keep the rising part only: beyond the best quality extra rate buys nothing.
  std::size_t top = 0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    if (hull[i].point.quality > hull[top].point.quality) top = i;
  hull.resize(top + 1);
  out.vertices = hull;

  for (const auto& [res, _] : curves) {
    HullInterval best{res, 0.0, 0.0, true};
    double best_width = -1.0;
    for (std::size_t i = 0; i < hull.size();) {
      if (hull[i].resolution != res) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j + 1 < hull.size() && hull[j + 1].resolution == res) ++j;
      const double width = std::log(hull[j].point.rate / hull[i].point.rate);
      if (width > best_width) {
        best_width = width;
        best = {res, hull[i].point.rate, hull[j].point.rate, false};
      }
      i = j + 1;
    }
    out.intervals.push_back(best);
  }
  return out;
}

}  // namespace ladderopt
