#pragma once

// Reference implementations used by the tests. They follow the player rules
// and textbook geometry literally and share no code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

struct Entry {
  int resolution;
  double bitrate;
};

struct Atom {
  double value;
  double prob;
};

// Rule 1: resolution <= viewport (else only the lowest-resolution entries
// qualify). Rule 2: largest bitrate strictly below the bandwidth; ties go to
// the later entry; nothing below the bandwidth means the cheapest eligible.
inline std::size_t select(const std::vector<Entry>& ladder, int viewport, double bandwidth) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < ladder.size(); ++i)
    if (ladder[i].resolution <= viewport) eligible.push_back(i);
  if (eligible.empty()) {
    // a single entry: lowest resolution, cheapest among those
    std::size_t pick = 0;
    for (std::size_t i = 1; i < ladder.size(); ++i)
      if (ladder[i].resolution < ladder[pick].resolution ||
          (ladder[i].resolution == ladder[pick].resolution && ladder[i].bitrate < ladder[pick].bitrate))
        pick = i;
    eligible.push_back(pick);
  }
  std::size_t best = ladder.size();
  for (std::size_t i : eligible)
    if (ladder[i].bitrate < bandwidth && (best == ladder.size() || ladder[i].bitrate >= ladder[best].bitrate))
      best = i;
  if (best != ladder.size()) return best;
  best = eligible[0];
  for (std::size_t i : eligible)
    if (ladder[i].bitrate < ladder[best].bitrate) best = i;
  return best;
}

// Weighted count of selections over every (viewport, bandwidth) atom pair.
inline std::vector<double> enumerate_lambda(const std::vector<Entry>& ladder, const std::vector<Atom>& viewports,
                                            const std::vector<Atom>& bandwidths) {
  std::vector<double> lam(ladder.size(), 0.0);
  for (const auto& v : viewports)
    for (const auto& b : bandwidths) lam[select(ladder, static_cast<int>(v.value), b.value)] += v.prob * b.prob;
  return lam;
}

// Two-term closed form with r_{n+1} = +inf:
//   P[V = v_i] P[B > r_i] + P[V > v_i] P[r_{i+1} >= B > r_i].
inline std::vector<double> closed_form_lambda(const std::vector<Entry>& ladder, const std::vector<Atom>& viewports,
                                              const std::vector<Atom>& bandwidths) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> lam(ladder.size(), 0.0);
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const double ri = ladder[i].bitrate;
    const double rn = i + 1 < ladder.size() ? ladder[i + 1].bitrate : inf;
    double pv_eq = 0, pv_gt = 0, pb_gt = 0, pb_in = 0;
    for (const auto& v : viewports) {
      if (v.value == ladder[i].resolution) pv_eq += v.prob;
      if (v.value > ladder[i].resolution) pv_gt += v.prob;
    }
    for (const auto& b : bandwidths) {
      if (b.value > ri) pb_gt += b.prob;
      if (b.value > ri && b.value <= rn) pb_in += b.prob;
    }
    lam[i] = pv_eq * pb_gt + pv_gt * pb_in;
  }
  return lam;
}

// Bandwidth atoms smoothed as in the piecewise-linear CDF: the first atom
// keeps its mass, every later atom's mass is spread uniformly over the gap
// to its predecessor. Selection is constant between ladder bitrates, so the
// integral splits exactly at them.
inline std::vector<double> smoothed_lambda(const std::vector<Entry>& ladder, const std::vector<Atom>& viewports,
                                           const std::vector<Atom>& bandwidths) {
  std::vector<double> lam(ladder.size(), 0.0);
  for (const auto& v : viewports) {
    const int vp = static_cast<int>(v.value);
    lam[select(ladder, vp, bandwidths[0].value)] += v.prob * bandwidths[0].prob;
    for (std::size_t k = 1; k < bandwidths.size(); ++k) {
      const double a = bandwidths[k - 1].value;
      const double b = bandwidths[k].value;
      std::vector<double> cuts{a, b};
      for (const auto& e : ladder)
        if (e.bitrate > a && e.bitrate < b) cuts.push_back(e.bitrate);
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t c = 1; c < cuts.size(); ++c) {
        const double w = (cuts[c] - cuts[c - 1]) / (b - a);
        lam[select(ladder, vp, 0.5 * (cuts[c - 1] + cuts[c]))] += v.prob * bandwidths[k].prob * w;
      }
    }
  }
  return lam;
}

// Piecewise-linear interpolation through (x, y) knots, clamped at the ends.
inline double interp(const std::vector<double>& x, const std::vector<double>& y, double t) {
  if (t <= x.front()) return y.front();
  if (t >= x.back()) return y.back();
  for (std::size_t k = 1; k < x.size(); ++k)
    if (t < x[k]) return y[k - 1] + (y[k] - y[k - 1]) * (t - x[k - 1]) / (x[k] - x[k - 1]);
  return y.back();
}

inline double cross(std::array<double, 2> o, std::array<double, 2> a, std::array<double, 2> b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Extreme points by brute force: p is a hull vertex iff some other point q
// makes every remaining point lie on or left of the line p -> q, and p is not
// strictly between two other points on that line. O(n^3).
inline std::set<std::pair<double, double>> brute_hull(const std::vector<std::array<double, 2>>& pts,
                                                      double eps = 1e-12) {
  std::set<std::pair<double, double>> uniq;
  for (const auto& p : pts) uniq.insert({p[0], p[1]});
  std::vector<std::array<double, 2>> u;
  for (const auto& [x, y] : uniq) u.push_back({x, y});
  if (u.size() <= 2) return uniq;
  std::set<std::pair<double, double>> out;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (i == j) continue;
      bool edge = true;
      for (std::size_t k = 0; k < u.size() && edge; ++k) {
        if (k == i || k == j) continue;
        const double c = cross(u[i], u[j], u[k]);
        if (c < -eps) edge = false;
        // Collinear points beyond the segment mean i -> j is not a full edge.
        if (std::abs(c) <= eps) {
          const double t = (u[k][0] - u[i][0]) * (u[j][0] - u[i][0]) + (u[k][1] - u[i][1]) * (u[j][1] - u[i][1]);
          const double len = (u[j][0] - u[i][0]) * (u[j][0] - u[i][0]) + (u[j][1] - u[i][1]) * (u[j][1] - u[i][1]);
          if (t < 0 || t > len) edge = false;
        }
      }
      if (edge) {
        out.insert({u[i][0], u[i][1]});
        out.insert({u[j][0], u[j][1]});
      }
    }
  return out;
}

// A small ladder problem spelled out as raw numbers.
struct SmallProblem {
  std::vector<int> resolutions;
  std::vector<std::vector<double>> knot_rate;
  std::vector<std::vector<double>> knot_quality;
  std::vector<Atom> viewports;
  std::vector<Atom> bandwidths;  // smoothed as in smoothed_lambda
  double q0 = 0;
  double gap = 0;
};

struct RQ {
  double rate;
  double quality;
};

inline RQ evaluate(const SmallProblem& p, const std::vector<double>& r) {
  std::vector<Entry> ladder;
  for (std::size_t i = 0; i < r.size(); ++i) ladder.push_back({p.resolutions[i], r[i]});
  const auto lam = smoothed_lambda(ladder, p.viewports, p.bandwidths);
  RQ out{0, 0};
  for (std::size_t i = 0; i < r.size(); ++i) {
    out.rate += lam[i] * r[i];
    out.quality += lam[i] * interp(p.knot_rate[i], p.knot_quality[i], r[i]);
  }
  return out;
}

struct GridResult {
  bool found = false;
  double rate = std::numeric_limits<double>::infinity();
  std::vector<double> point;
  std::vector<double> step;
};

// Exhaustive search over `levels` evenly spaced bitrates per entry, keeping
// ordered (gap-respecting) points with Q >= q0 - qtol.
inline GridResult grid_search(const SmallProblem& p, int levels, double qtol) {
  const std::size_t n = p.resolutions.size();
  GridResult g;
  for (std::size_t i = 0; i < n; ++i)
    g.step.push_back((p.knot_rate[i].back() - p.knot_rate[i].front()) / (levels - 1));
  std::vector<double> r(n);
  std::vector<int> idx(n, 0);
  while (true) {
    bool ordered = true;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = p.knot_rate[i].front() + idx[i] * g.step[i];
      if (i > 0 && r[i] < r[i - 1] + p.gap) ordered = false;
    }
    if (ordered) {
      const auto e = evaluate(p, r);
      if (e.quality >= p.q0 - qtol && e.rate < g.rate) {
        g.found = true;
        g.rate = e.rate;
        g.point = r;
      }
    }
    std::size_t k = 0;
    while (k < n && ++idx[k] == levels) idx[k++] = 0;
    if (k == n) break;
  }
  return g;
}

// Uniform point on the probability simplex.
inline std::vector<double> simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(n);
  double s = 0;
  for (auto& x : w) s += (x = e(rng));
  for (auto& x : w) x /= s;
  return w;
}

}  // namespace oracle
