#pragma once

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "ladderopt/player_model.hpp"
#include "ladderopt/rq_model.hpp"
#include "ladderopt/stats.hpp"
#include "oracles.hpp"

namespace fixtures {

using namespace ladderopt;

// Bandwidth atoms become a CDF; the atoms are rewritten with the masses the
// CDF actually carries so oracle and library see identical numbers.
inline BandwidthDistribution atoms_to_bd(std::vector<oracle::Atom>& atoms, CdfSmoothing mode) {
  std::vector<double> s, c;
  double acc = 0;
  for (const auto& a : atoms) {
    s.push_back(a.value);
    c.push_back(acc += a.prob);
  }
  c.back() = 1.0;
  double prev = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    atoms[i].prob = c[i] - prev;
    prev = c[i];
  }
  return BandwidthDistribution(s, c, mode);
}

inline ViewportDistribution atoms_to_vd(std::vector<oracle::Atom>& atoms) {
  std::map<Pixels, double> pmf;
  for (const auto& a : atoms) pmf[static_cast<Pixels>(a.value)] += a.prob;
  ViewportDistribution vd = ViewportDistribution::from_weights(pmf);
  atoms.clear();
  for (const auto& [v, p] : vd.pmf()) atoms.push_back({double(v), p});
  return vd;
}

inline std::vector<oracle::Entry> entries(const Ladder& l) {
  std::vector<oracle::Entry> out;
  for (const auto& e : l.entries()) out.push_back({e.resolution, e.bitrate});
  return out;
}

// Three entries (360, 720, 1080) on 5-knot concave curves spanning a factor
// of 4 each, 2-4 viewport atoms and 3-5 bandwidth atoms. q0 is the quality of
// the ladder at the log-centre of each range.
inline oracle::SmallProblem random_small_problem(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  oracle::SmallProblem p;
  p.resolutions = {360, 720, 1080};
  p.gap = 1000;
  const double base[3] = {30, 26, 22};
  const double slope[3] = {3, 4, 5};
  double lo = 1.5e5 + 1e5 * u(rng);
  for (int i = 0; i < 3; ++i) {
    if (i > 0) lo *= 2 + u(rng);
    std::vector<double> kr, kq;
    const double b = base[i] + 2 * u(rng), s = slope[i] * (0.9 + 0.2 * u(rng));
    for (int k = 0; k < 5; ++k) {
      const double r = lo * std::pow(4.0, k / 4.0);
      kr.push_back(r);
      kq.push_back(b + s * std::log(r / 1e5) - 0.3 * k * k * u(rng) * 0.1);
    }
    for (int k = 1; k < 5; ++k) kq[k] = std::max(kq[k], kq[k - 1]);
    p.knot_rate.push_back(kr);
    p.knot_quality.push_back(kq);
  }
  const std::array<int, 5> heights{360, 480, 720, 1080, 1440};
  std::set<int> vs;
  const int nv = 2 + int(u(rng) * 3);
  while (int(vs.size()) < nv) vs.insert(heights[std::size_t(u(rng) * 5)]);
  const auto vw = oracle::simplex(vs.size(), rng);
  std::size_t k = 0;
  for (int v : vs) p.viewports.push_back({double(v), vw[k++]});
  std::set<double> bs;
  const int nb = 3 + int(u(rng) * 3);
  while (int(bs.size()) < nb) bs.insert(std::round(1e5 * std::pow(200.0, u(rng))));
  const auto bw = oracle::simplex(bs.size(), rng);
  k = 0;
  for (double b : bs) p.bandwidths.push_back({b, bw[k++]});
  return p;
}

struct LibraryProblem {
  ChunkRqModel model;
  ViewportDistribution vd;
  BandwidthDistribution bd;
};

inline LibraryProblem to_library(oracle::SmallProblem& p, CdfSmoothing mode) {
  std::vector<RateQualityCurve> curves;
  for (std::size_t i = 0; i < p.resolutions.size(); ++i) {
    std::vector<RqSample> s;
    for (std::size_t k = 0; k < p.knot_rate[i].size(); ++k) s.push_back({p.knot_rate[i][k], p.knot_quality[i][k], {}});
    curves.emplace_back(p.resolutions[i], s);
  }
  auto vd = atoms_to_vd(p.viewports);
  auto bd = atoms_to_bd(p.bandwidths, mode);
  return {ChunkRqModel("small", 1080, curves), vd, bd};
}

inline std::vector<double> centre(const oracle::SmallProblem& p) {
  std::vector<double> r;
  for (const auto& kr : p.knot_rate) r.push_back(std::sqrt(kr.front() * kr.back()));
  return r;
}

}  // namespace fixtures
