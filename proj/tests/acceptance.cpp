// Acceptance checks AC1-AC8. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <chrono>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <unistd.h>

#include "fixtures.hpp"
#include "ladderopt/baselines.hpp"
#include "ladderopt/io.hpp"
#include "ladderopt/optimizer.hpp"
#include "ladderopt/pipeline.hpp"
#include "ladderopt/region.hpp"
#include "ladderopt/simulator.hpp"
#include "ladderopt/synth.hpp"
#include "oracles.hpp"

using namespace ladderopt;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Flat curves for every standard height; only the player rules matter.
ChunkRqModel flat_model() {
  std::vector<RateQualityCurve> curves;
  for (Pixels h : kStandardHeights)
    curves.emplace_back(h, std::vector<RqSample>{{1.0, 30.0, {}}, {1e9, 30.0, {}}});
  return ChunkRqModel("flat", 2160, curves);
}

struct AtomicInstance {
  Ladder ladder;
  std::vector<oracle::Atom> viewports;
  std::vector<oracle::Atom> bandwidths;
  ViewportDistribution vd;
  BandwidthDistribution bd;
};

// Ladders on a coarse bitrate grid shared with the bandwidth atoms, so ties
// between a bandwidth and a bitrate occur; resolutions may repeat.
AtomicInstance random_atomic(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> height(0, 7);
  std::uniform_int_distribution<int> grid(1, 25);
  while (true) {
    const int n = 1 + height(rng) % 7;
    std::vector<int> res(n), rate(n);
    for (auto& r : res) r = kStandardHeights[height(rng)];
    for (auto& r : rate) r = grid(rng);
    std::sort(res.begin(), res.end());
    std::sort(rate.begin(), rate.end());
    std::vector<LadderEntry> e;
    bool dup = false;
    for (int i = 0; i < n; ++i) {
      e.push_back({res[i], rate[i] * 2e5});
      dup |= i > 0 && e[i] == e[i - 1];
    }
    if (dup) continue;
    std::vector<oracle::Atom> va, ba;
    std::set<int> vs;
    const int nv = 1 + height(rng) % 5;
    while (int(vs.size()) < nv) vs.insert(kStandardHeights[height(rng)]);
    const auto vw = oracle::simplex(vs.size(), rng);
    std::size_t k = 0;
    for (int v : vs) va.push_back({double(v), vw[k++]});
    std::set<int> bs;
    const int nb = 1 + grid(rng) % 8;
    while (int(bs.size()) < nb) bs.insert(grid(rng));
    const auto bw = oracle::simplex(bs.size(), rng);
    k = 0;
    for (int b : bs) ba.push_back({b * 2e5 + (k % 3 == 0 ? 0.0 : 7e4), bw[k++]});
    std::sort(ba.begin(), ba.end(), [](auto a, auto b) { return a.value < b.value; });
    auto vd = fixtures::atoms_to_vd(va);
    auto bd = fixtures::atoms_to_bd(ba, CdfSmoothing::step);
    return {Ladder(e), va, ba, vd, bd};
  }
}

Outcome ac1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const auto model = flat_model();
  double worst_exact = 0, worst_mc = 0;
  for (int t = 0; t < 50; ++t) {
    const auto inst = random_atomic(rng);
    const auto lam = viewing_probabilities(inst.ladder, inst.vd, inst.bd);
    const auto ref = oracle::enumerate_lambda(fixtures::entries(inst.ladder), inst.viewports, inst.bandwidths);
    for (std::size_t i = 0; i < lam.size(); ++i) worst_exact = std::max(worst_exact, std::abs(lam[i] - ref[i]));
    SimConfig c;
    c.num_sessions = 1000000;
    c.segments_per_session = 1;
    c.seed = 1000 + static_cast<std::uint64_t>(t);
    c.jobs = jobs();
    const auto rep = simulate(inst.ladder, model, inst.vd, inst.bd, c);
    for (std::size_t i = 0; i < lam.size(); ++i)
      worst_mc = std::max(worst_mc, std::abs(rep.empirical_lambda[i] - lam[i]));
  }
  const double secs = seconds_since(t0);
  return {worst_exact <= 1e-12 && worst_mc < 0.005 && secs < 60,
          fmt("50 instances: max |lambda - enumeration| = %.2e, max |empirical - lambda| = %.4f (1e6 draws each), "
              "%.1f s",
              worst_exact, worst_mc, secs)};
}

Outcome ac2() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + int(u(rng) * 6);
    std::vector<Pixels> res(kStandardHeights.begin(), kStandardHeights.end());
    std::shuffle(res.begin(), res.end(), rng);
    res.resize(n);
    std::sort(res.begin(), res.end());
    std::vector<LadderEntry> e;
    double r = 1e5 * (1 + u(rng));
    for (int i = 0; i < n; ++i) e.push_back({res[i], r *= 1.2 + 1.5 * u(rng)});
    const Ladder l(e);
    std::vector<oracle::Atom> va, ba;
    for (Pixels v : kStandardHeights)
      if ((std::find(res.begin(), res.end(), v) != res.end() || v > res.back()) && u(rng) < 0.6)
        va.push_back({double(v), 0.05 + u(rng)});
    if (va.empty()) va.push_back({double(res.back()), 1.0});
    std::set<double> bs;
    while (bs.size() < 10) bs.insert(std::round(e[0].bitrate * (1.001 + 50 * u(rng))));
    for (double b : bs) ba.push_back({b, 0.05 + u(rng)});
    double tot = 0;
    for (auto& b : ba) tot += b.prob;
    for (auto& b : ba) b.prob /= tot;
    auto vd = fixtures::atoms_to_vd(va);
    auto bd = fixtures::atoms_to_bd(ba, CdfSmoothing::step);
    const auto lam = viewing_probabilities(l, vd, bd);
    const auto ref = oracle::closed_form_lambda(fixtures::entries(l), va, ba);
    for (std::size_t i = 0; i < lam.size(); ++i) worst = std::max(worst, std::abs(lam[i] - ref[i]));
  }
  return {worst <= 1e-12, fmt("20 instances: max |lambda - two-term formula| = %.2e", worst)};
}

BandwidthDistribution trace_bandwidth(std::size_t records, std::uint64_t seed, CdfSmoothing mode) {
  const auto recs = synth_traces(records, seed);
  return ingest_traces(recs, mode).bandwidth;
}

Outcome ac3() {
  const auto corpus = synth_corpus(10, 303);
  const auto vd = synth_viewport_distribution();
  const auto bd = trace_bandwidth(5000, 304, CdfSmoothing::piecewise_linear);
  std::mt19937_64 rng(305);
  std::uniform_real_distribution<double> u(0, 1);
  const std::vector<Pixels> res(kSynthResolutions.begin(), kSynthResolutions.end());
  int points = 0, rejected = 0;
  double worst = 0;
  for (const auto& chunk : corpus) {
    const PlayerModel pm(chunk, res, vd, bd);
    int here = 0;
    while (here < 10) {
      std::vector<double> r;
      double prev = 0;
      for (Pixels v : res) {
        const auto [lo, hi] = bitrate_range(chunk.curve(v));
        const double a = std::max(lo, prev * 1.02);
        if (a >= hi) break;
        r.push_back(a * std::pow(hi / a, 0.6 * u(rng)));
        prev = r.back();
      }
      if (r.size() != res.size()) continue;
      bool knot = false;
      for (std::size_t j = 0; j < r.size(); ++j) {
        const double h = 1e-6 * r[j];
        const auto s = bd.support();
        const auto it = std::lower_bound(s.begin(), s.end(), r[j] - 2 * h);
        knot |= it != s.end() && *it <= r[j] + 2 * h;
        for (double k : chunk.curve(res[j]).bitrates()) knot |= std::abs(k - r[j]) <= 2 * h;
      }
      if (knot) {
        ++rejected;
        continue;
      }
      const auto ev = pm.evaluate(r);
      for (std::size_t j = 0; j < r.size(); ++j) {
        const double h = 1e-6 * r[j];
        auto rp = r, rm = r;
        rp[j] += h;
        rm[j] -= h;
        const auto ep = pm.evaluate(rp, false), em = pm.evaluate(rm, false);
        const double dR = (ep.avg_bitrate - em.avg_bitrate) / (2 * h);
        const double dQ = (ep.avg_quality - em.avg_quality) / (2 * h);
        worst = std::max(worst, std::abs(ev.grad_bitrate[j] - dR) / std::max(std::abs(dR), 1e-300));
        worst = std::max(worst, std::abs(ev.grad_quality[j] - dQ) / std::max(std::abs(dQ), 1e-300));
      }
      ++here;
      ++points;
    }
  }
  return {points == 100 && worst <= 1e-4,
          fmt("%d points (%d near-knot draws redrawn): max relative gradient error %.2e", points, rejected, worst)};
}

Outcome ac4() {
  const auto corpus = synth_corpus(20, 404);
  const auto vd = synth_viewport_distribution();
  const auto bd = trace_bandwidth(20000, 405, CdfSmoothing::step);
  std::mt19937_64 rng(406);
  std::uniform_real_distribution<double> u(0, 1);
  std::size_t weights_in = 0, sims_in = 0;
  for (const auto& chunk : corpus) {
    std::vector<LadderEntry> e;
    double prev = 0;
    for (const auto& [res, c] : chunk.curves()) {
      const auto [lo, hi] = bitrate_range(c);
      const double a = std::max(lo, prev + 1000);
      e.push_back({res, a * std::pow(hi / a, 0.5 * u(rng))});
      prev = e.back().bitrate;
    }
    const Ladder l(e);
    std::vector<RqPoint> pts;
    for (const auto& x : e) pts.push_back({x.bitrate, eval_quality(chunk.curve(x.resolution), x.bitrate)});
    const auto region = achievable_region(pts);
    for (int k = 0; k < 1000; ++k) {
      const auto w = oracle::simplex(pts.size(), rng);
      RqPoint p{0, 0};
      for (std::size_t i = 0; i < pts.size(); ++i) {
        p.rate += w[i] * pts[i].rate;
        p.quality += w[i] * pts[i].quality;
      }
      weights_in += contains(region, p, 1e-9);
    }
    SimConfig c;
    c.num_sessions = 500;
    c.segments_per_session = 100;
    c.seed = 407;
    c.jobs = jobs();
    const auto rep = simulate(l, chunk, vd, bd, c);
    sims_in += contains(region, {rep.empirical_avg_bitrate, rep.empirical_avg_quality}, 1e-6);
  }
  return {weights_in == 20000 && sims_in == 20,
          fmt("20 ladders: %zu/20000 convex combinations inside at tol 1e-9, %zu/20 simulated points inside at tol "
              "1e-6",
              weights_in, sims_in)};
}

Outcome ac5() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(505);
  int ok = 0;
  double worst_excess = -1e300, worst_under = -1e300, worst_violation = 0;
  const std::vector<Pixels> res{360, 720, 1080};
  for (int t = 0; t < 10; ++t) {
    auto sp = fixtures::random_small_problem(rng);
    auto lib = fixtures::to_library(sp, CdfSmoothing::piecewise_linear);
    sp.q0 = oracle::evaluate(sp, fixtures::centre(sp)).quality;
    const double qtol = 1e-6 * std::abs(sp.q0);
    const OptimizationProblem p(lib.model, res, lib.vd, lib.bd, sp.q0, sp.gap);
    // many wide starts: the objective has a kink at every bandwidth atom
    const auto starts = default_starts(p, std::vector<Ladder>{Ladder::from(res, fixtures::centre(sp))}, 100,
                                       static_cast<std::uint64_t>(t) + 1, 1.0);
    const auto r = solve(p, starts);
    const auto rstar = r.ladder.bitrates();
    const auto at = oracle::evaluate(sp, rstar);
    const auto grid = oracle::grid_search(sp, 101, 0.0);
    if (!grid.found) continue;
    // Discretization error: how much R moves across one grid cell around r*.
    double eps = 0;
    for (std::size_t i = 0; i < rstar.size(); ++i)
      for (double dir : {-1.0, 1.0}) {
        auto q = rstar;
        q[i] += dir * grid.step[i];
        eps += 0.5 * std::abs(oracle::evaluate(sp, q).rate - at.rate);
      }
    const double excess = at.rate - grid.rate;     // solver worse than grid by this much
    const double under = grid.rate - at.rate;      // grid worse than solver by this much
    const double violation = std::max(0.0, sp.q0 - at.quality);
    worst_excess = std::max(worst_excess, excess / grid.rate);
    worst_under = std::max(worst_under, under / std::max(eps, 1e-300));
    worst_violation = std::max(worst_violation, violation / std::abs(sp.q0));
    const bool sandwich = excess <= 1e-6 * grid.rate && under <= eps;
    ok += sandwich && at.quality >= sp.q0 - qtol;
  }
  const double secs = seconds_since(t0);
  return {ok == 10 && secs < 300,
          fmt("%d/10 problems sandwiched: max (R* - R_grid)/R_grid = %.2e, max (R_grid - R*)/eps_grid = %.2f, max "
              "relative floor violation %.1e, %.1f s",
              ok, worst_excess, worst_under, worst_violation, secs)};
}

struct CorpusRun {
  fs::path root;
  pipeline::RunManifest manifest;
  pipeline::CorpusReport report;
  std::optional<io::Distributions> dist;
};

struct SimPair {
  std::string chunk;
  std::string baseline;
  double analytic = 0;     // relative change under the optimized (linear) model
  double simulated = 0;    // relative change in simulation, common random numbers
  double se = 0;           // rough standard error of `simulated`
  double share_shift = 0;  // top-resolution watch-time share change
};

std::vector<SimPair> simulate_corpus(const CorpusRun& run) {
  std::vector<SimPair> out;
  const auto bd = run.dist->bandwidth.with_smoothing(CdfSmoothing::step);
  SimConfig cfg = run.manifest.sim;
  cfg.jobs = jobs();
  for (const auto& row : run.report.rows) {
    const auto model = io::read_chunk(run.root / "chunks" / (row.chunk_id + ".json"));
    const auto name = BaselineSpec::parse(row.baseline).name();
    const auto dir = run.manifest.output_dir / "chunks" / row.chunk_id;
    const auto base = io::read_ladder(dir / ("baseline_" + name + ".json")).ladder;
    const auto opt = io::read_ladder(dir / ("optimized_" + name + ".json")).ladder;
    const auto rb = simulate(base, model, run.dist->viewport, bd, cfg);
    const auto ro = simulate(opt, model, run.dist->viewport, bd, cfg);
    const auto cmp = compare({{"baseline", rb}, {"optimized", ro}}, "baseline");
    SimPair s;
    s.chunk = row.chunk_id;
    s.baseline = name;
    s.analytic = row.relative_change;
    s.simulated = cmp.comparisons[0].relative_bitrate_change;
    s.se = std::sqrt(2.0) *
           std::max(rb.bitrate_std / rb.empirical_avg_bitrate, ro.bitrate_std / ro.empirical_avg_bitrate) /
           std::sqrt(double(cfg.num_sessions));
    const auto& shift = cmp.comparisons[0].watch_time_shift;
    const auto top = shift.find(model.resolutions().back());
    s.share_shift = top == shift.end() ? 0.0 : top->second;
    out.push_back(s);
  }
  return out;
}

Outcome ac6(const CorpusRun& run, const std::vector<SimPair>& sims) {
  std::string detail;
  bool pass = run.report.failures.empty() && run.report.rows.size() == 40;
  std::size_t strict = 0, floor_ok = 0;
  for (const auto& r : run.report.rows) {
    strict += r.relative_change < 0;
    floor_ok += r.quality_delta >= -1e-6 * std::abs(r.q0);
  }
  pass &= strict == run.report.rows.size() && floor_ok == run.report.rows.size();
  for (const auto& a : run.report.aggregates) {
    double sim_sum = 0;
    std::size_t agree = 0, negative = 0, n = 0;
    for (const auto& s : sims) {
      if (s.baseline != BaselineSpec::parse(a.baseline).name()) continue;
      ++n;
      sim_sum += s.simulated;
      negative += s.simulated < 0;
      agree += s.simulated < 0 || std::abs(s.simulated - s.analytic) <= 4 * s.se;
    }
    pass &= a.relative_change < 0 && sim_sum < 0 && agree == n;
    detail += fmt("%s: analytic %.2f%% (mean %.2f%%), simulated mean %.2f%% (%zu/%zu negative), sign confirmed %zu/%zu; ",
                  a.baseline.c_str(), 100 * a.relative_change, 100 * a.mean_relative_change,
                  100 * sim_sum / double(n), negative, n, agree, n);
  }
  detail += fmt("%zu/%zu rows strictly cheaper, %zu/%zu meet the quality floor", strict, run.report.rows.size(),
                floor_ok, run.report.rows.size());
  return {pass, detail};
}

Outcome ac7(const std::vector<SimPair>& sims) {
  std::size_t n = 0, up = 0;
  for (const auto& s : sims) {
    if (s.baseline != "fixed") continue;
    ++n;
    up += s.share_shift >= 0;
  }
  return {n > 0 && double(up) >= 0.8 * double(n),
          fmt("1080p watch-time share non-decreasing in %zu/%zu chunks (optimized vs fixed label)", up, n)};
}

Outcome ac8(const CorpusRun& run) {
  // bit-identical reruns, with a different thread count
  auto m = run.manifest;
  m.output_dir = run.root / "rerun";
  pipeline::cmd_optimize(m, 1);
  bool same = slurp(run.manifest.output_dir / "corpus_report.json") == slurp(m.output_dir / "corpus_report.json") &&
              slurp(run.manifest.output_dir / "corpus.csv") == slurp(m.output_dir / "corpus.csv");
  for (const auto& e : fs::recursive_directory_iterator(run.manifest.output_dir / "chunks")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), run.manifest.output_dir);
    same &= slurp(e.path()) == slurp(m.output_dir / rel);
  }
  const auto model = io::read_chunk(run.manifest.chunks[0]);
  const auto base = make_baseline(model, run.manifest.baselines[0]);
  SimConfig sc;
  sc.num_sessions = 300;
  sc.segments_per_session = 50;
  sc.seed = 9;
  const auto s1 = simulate(base, model, run.dist->viewport, run.dist->bandwidth, sc);
  sc.jobs = 3;
  const auto s2 = simulate(base, model, run.dist->viewport, run.dist->bandwidth, sc);
  same &= s1 == s2;

  // one chunk, both baselines, ten jittered starts each
  auto one = run.manifest;
  one.solver.starts = 10;
  const auto t0 = Clock::now();
  const auto outcome =
      pipeline::optimize_chunk(model, run.dist->viewport, run.dist->bandwidth, one, run.root / "timing");
  const double opt_secs = seconds_since(t0);
  const bool opt_ok = outcome.failures.empty() && outcome.rows.size() == 2;

  // ingest of a million records
  const auto trace = run.root / "million.csv";
  io::write_traces_csv(trace, synth_traces(1000000, 808));
  const auto t1 = Clock::now();
  const auto ing = pipeline::cmd_ingest(trace, run.root / "million_dist.json", CdfSmoothing::piecewise_linear);
  const double ingest_secs = seconds_since(t1);

  return {same && opt_ok && opt_secs < 1.0 && ing.stats.valid == 1000000 && ingest_secs < 10.0,
          fmt("reruns bit-identical: %s; one chunk (2 baselines x 10 jittered starts) %.3f s; ingest of %zu records "
              "%.2f s",
              same ? "yes" : "no", opt_secs, ing.stats.valid, ingest_secs)};
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / ("ladderopt_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  int failed = 0;
  auto report = [&](const char* id, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  };

  report("AC1", ac1);
  report("AC2", ac2);
  report("AC3", ac3);
  report("AC4", ac4);
  report("AC5", ac5);

  CorpusRun run;
  std::vector<SimPair> sims;
  std::string setup_error;
  try {
    run.root = root / "corpus";
    const auto manifest = pipeline::cmd_synth(run.root, {});
    run.manifest = pipeline::RunManifest::load(manifest);
    run.manifest.output_dir = root / "results";
    run.report = pipeline::cmd_optimize(run.manifest, jobs());
    run.dist = pipeline::load_distributions(run.manifest);
    sims = simulate_corpus(run);
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  if (setup_error.empty()) {
    report("AC6", [&] { return ac6(run, sims); });
    report("AC7", [&] { return ac7(sims); });
    report("AC8", [&] { return ac8(run); });
  } else {
    for (const char* id : {"AC6", "AC7", "AC8"}) {
      std::printf("%s FAIL  corpus run failed: %s\n", id, setup_error.c_str());
      ++failed;
    }
  }
  fs::remove_all(root);
  return failed == 0 ? 0 : 1;
}
