#include "ladderopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <tuple>

#include "ladderopt/ccsa.hpp"
#include "ladderopt/error.hpp"

namespace ladderopt {

namespace {

constexpr double kFeasTol = 1e-6;

// Maps t in [0,1]^n onto the ordered box. Each r_i moves log-linearly
// between its lowest admissible value a_i = max(lo_i, r_{i-1} + gap) and its
// ordered upper bound, so ordering holds for every t.
class BoxMap {
 public:
  explicit BoxMap(const OptimizationProblem& p)
      : lo_(p.lower()), up_(p.ordered_upper()), lo0_(p.ordered_lower()[0]), gap_(p.min_gap()) {}

  std::size_t size() const { return up_.size(); }

  void forward(std::span<const double> t, std::vector<double>& r) {
    const std::size_t n = size();
    r.resize(n);
    a_.resize(n);
    pass_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double a = lo0_;
      pass_[i] = false;
      if (i > 0) {
        const double chained = r[i - 1] + gap_;
        pass_[i] = chained >= lo_[i];
        a = std::max(lo_[i], chained);
      }
      a_[i] = a;
      if (t[i] <= 0.0) {
        r[i] = a;
      } else if (t[i] >= 1.0) {
        r[i] = up_[i];
      } else {
        r[i] = std::clamp(a * std::pow(up_[i] / a, t[i]), a, up_[i]);
      }
    }
  }

  // Chain rule through the last forward() call.
  void backward(std::span<const double> t, std::span<const double> r, std::span<const double> grad_r,
                std::span<double> grad_t) {
    const std::size_t n = size();
    gbar_.assign(grad_r.begin(), grad_r.end());
    for (std::size_t i = n; i-- > 0;) {
      const double span_log = std::log(up_[i] / a_[i]);
      grad_t[i] = gbar_[i] * r[i] * span_log;
      if (i > 0 && pass_[i]) gbar_[i - 1] += gbar_[i] * (1.0 - t[i]) * r[i] / a_[i];
    }
  }

  // Inverse of forward() for a point already inside the ordered box.
  std::vector<double> inverse(std::span<const double> r) const {
    const std::size_t n = size();
    std::vector<double> t(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = i == 0 ? lo0_ : std::max(lo_[i], r[i - 1] + gap_);
      const double span_log = std::log(up_[i] / a);
      t[i] = span_log > 0.0 ? std::clamp(std::log(r[i] / a) / span_log, 0.0, 1.0) : 0.0;
    }
    return t;
  }

 private:
  std::span<const double> lo_;
  std::span<const double> up_;
  double lo0_;
  double gap_;
  std::vector<double> a_;
  std::vector<bool> pass_;
  std::vector<double> gbar_;
};

// R and Q as functions of t with a one-point cache, since the solver asks
// for objective and constraint at the same point.
class ScaledModel {
 public:
  ScaledModel(const OptimizationProblem& p, double r_ref)
      : p_(p), map_(p), r_ref_(r_ref), q_scale_(std::max(std::abs(p.q0()), 1e-12)) {}

  double objective(std::span<const double> t, std::span<double> grad) {
    update(t);
    std::copy(df_.begin(), df_.end(), grad.begin());
    return eval_.avg_bitrate / r_ref_;
  }
  double deficit(std::span<const double> t, std::span<double> grad) {
    update(t);
    std::copy(dg_.begin(), dg_.end(), grad.begin());
    return (p_.q0() - eval_.avg_quality) / q_scale_;
  }
  std::vector<double> bitrates(std::span<const double> t) {
    std::vector<double> r;
    map_.forward(t, r);
    return r;
  }
  BoxMap& map() { return map_; }
  std::size_t evaluations() const { return evaluations_; }

 private:
  void update(std::span<const double> t) {
    if (valid_ && std::equal(t.begin(), t.end(), t_.begin(), t_.end())) return;
    t_.assign(t.begin(), t.end());
    map_.forward(t, r_);
    p_.player().evaluate(r_, eval_, true);
    ++evaluations_;
    const std::size_t n = r_.size();
    df_.resize(n);
    dg_.resize(n);
    scratch_.resize(n);
    for (std::size_t i = 0; i < n; ++i) scratch_[i] = eval_.grad_bitrate[i] / r_ref_;
    map_.backward(t, r_, scratch_, df_);
    for (std::size_t i = 0; i < n; ++i) scratch_[i] = -eval_.grad_quality[i] / q_scale_;
    map_.backward(t, r_, scratch_, dg_);
    valid_ = true;
  }

  const OptimizationProblem& p_;
  BoxMap map_;
  double r_ref_;
  double q_scale_;
  bool valid_ = false;
  std::vector<double> t_;
  std::vector<double> r_;
  std::vector<double> df_;
  std::vector<double> dg_;
  std::vector<double> scratch_;
  ModelEvaluation eval_;
  std::size_t evaluations_ = 0;
};

struct Candidate {
  std::vector<double> bitrates;
  ModelEvaluation eval;
  bool feasible = false;
  bool converged = false;
  std::size_t iterations = 0;
  double start_bitrate = 0.0;
  std::vector<double> history;
};

Candidate run_start(const OptimizationProblem& p, const Ladder& start, const SolverConfig& cfg, double r_ref,
                    std::size_t& evaluations) {
  const auto r0 = project_to_ordered_box(p, start.bitrates());
  Candidate best;
  best.bitrates = r0;
  best.eval = p.player().evaluate(r0);
  best.feasible = p.feasible(best.eval.avg_quality);
  best.start_bitrate = best.eval.avg_bitrate;

  ScaledModel sm(p, r_ref);
  const std::size_t n = p.size();
  ccsa::Problem cp;
  cp.lb.assign(n, 0.0);
  cp.ub.assign(n, 1.0);
  ccsa::Options opt;
  opt.max_iters = cfg.max_iters;
  opt.ftol_rel = cfg.ftol_rel;
  opt.stall_iters = cfg.stall_iters;

  std::vector<double> t = sm.map().inverse(r0);
  std::vector<double> scratch(n);
  std::size_t iterations = 0;
  if (sm.deficit(t, scratch) > 0.0) {
    cp.objective = [&](std::span<const double> x, std::span<double> g) { return sm.deficit(x, g); };
    ccsa::Options o1 = opt;
    o1.stop_value = 0.0;
    const auto r1 = ccsa::minimize(cp, t, o1);
    iterations += r1.iterations;
    t = r1.x;
    if (r1.f > 0.0) {
      // Walk toward the upper corner, where the floor is attainable.
      const std::vector<double> ones(n, 1.0);
      std::vector<double> mid(n);
      double lo = 0.0;
      double hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double s = 0.5 * (lo + hi);
        for (std::size_t i = 0; i < n; ++i) mid[i] = t[i] + s * (ones[i] - t[i]);
        (sm.deficit(mid, scratch) <= 0.0 ? hi : lo) = s;
      }
      for (std::size_t i = 0; i < n; ++i) t[i] = hi >= 1.0 ? 1.0 : t[i] + hi * (ones[i] - t[i]);
    }
  }

  cp.objective = [&](std::span<const double> x, std::span<double> g) { return sm.objective(x, g); };
  cp.constraint = [&](std::span<const double> x, std::span<double> g) { return sm.deficit(x, g); };
  opt.record_history = cfg.record_history;
  const auto res = ccsa::minimize(cp, t, opt);
  iterations += res.iterations;
  evaluations += sm.evaluations();

  const auto r = sm.bitrates(res.x);
  auto ev = p.player().evaluate(r);
  const bool feas = p.feasible(ev.avg_quality);
  if (feas && (!best.feasible || ev.avg_bitrate < best.eval.avg_bitrate)) {
    best.bitrates = r;
    best.eval = std::move(ev);
    best.feasible = true;
  } else if (!best.feasible && !feas && ev.avg_quality > best.eval.avg_quality) {
    best.bitrates = r;
    best.eval = std::move(ev);
  }
  best.converged = res.converged && res.feasible;
  best.iterations = iterations;
  for (double f : res.history) best.history.push_back(f * r_ref);
  return best;
}

bool same_resolutions(const OptimizationProblem& p, const Ladder& l) {
  const auto res = l.resolutions();
  return std::equal(res.begin(), res.end(), p.resolutions().begin(), p.resolutions().end());
}

}  // namespace

OptimizationProblem::OptimizationProblem(const ChunkRqModel& model, std::vector<Pixels> resolutions,
                                         ViewportDistribution vd, BandwidthDistribution bd, double q0,
                                         double min_gap)
    : model_(model),
      resolutions_(std::move(resolutions)),
      vd_(std::move(vd)),
      bd_(std::move(bd)),
      player_(model_, resolutions_, vd_, bd_),
      q0_(q0),
      min_gap_(min_gap) {
  if (!std::isfinite(q0)) throw ValidationError("optimization problem: quality floor must be finite");
  if (!std::isfinite(min_gap) || min_gap < 0.0) throw ValidationError("optimization problem: negative minimum gap");
  for (std::size_t i = 1; i < resolutions_.size(); ++i)
    if (resolutions_[i] == resolutions_[i - 1])
      throw ValidationError("optimization problem: duplicate resolution " + std::to_string(resolutions_[i]));
  const std::size_t n = resolutions_.size();
  lo_.resize(n);
  hi_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::tie(lo_[i], hi_[i]) = bitrate_range(model_.curve(resolutions_[i]));
    if (!(lo_[i] < hi_[i])) throw ValidationError("optimization problem: empty bitrate range");
  }
  lo_ordered_ = lo_;
  hi_ordered_ = hi_;
  for (std::size_t i = 1; i < n; ++i) lo_ordered_[i] = std::max(lo_[i], lo_ordered_[i - 1] + min_gap_);
  for (std::size_t i = n - 1; i-- > 0;) hi_ordered_[i] = std::min(hi_[i], hi_ordered_[i + 1] - min_gap_);
  for (std::size_t i = 0; i < n; ++i)
    if (lo_ordered_[i] > hi_ordered_[i])
      throw ValidationError("optimization problem: bitrate ranges cannot satisfy the ordering at " +
                            std::to_string(resolutions_[i]) + "p");
  const auto top = player_.evaluate(hi_ordered_, false);
  if (!feasible(top.avg_quality))
    throw InfeasibleError("quality floor " + std::to_string(q0_) + " exceeds the best attainable quality " +
                          std::to_string(top.avg_quality) + " in chunk " + model_.chunk_id());
}

bool OptimizationProblem::feasible(double quality) const noexcept {
  return quality >= q0_ - kFeasTol * std::abs(q0_);
}

double OptimizationProblem::constraint_violation(double quality) const noexcept {
  return std::max(0.0, q0_ - quality);
}

Ladder OptimizationProblem::ladder(std::span<const double> bitrates) const {
  return Ladder::from(resolutions_, bitrates);
}

std::vector<double> project_to_ordered_box(const OptimizationProblem& problem, std::span<const double> bitrates) {
  const std::size_t n = problem.size();
  if (bitrates.size() != n) throw MismatchError("start has the wrong number of entries");
  const auto lo = problem.ordered_lower();
  const auto hi = problem.ordered_upper();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double floor = i == 0 ? lo[0] : std::max(lo[i], r[i - 1] + problem.min_gap());
    const double x = std::isfinite(bitrates[i]) ? bitrates[i] : hi[i];
    r[i] = std::clamp(x, floor, hi[i]);
  }
  return r;
}

std::vector<Ladder> default_starts(const OptimizationProblem& problem, std::span<const Ladder> baselines,
                                   std::size_t jittered, std::uint64_t seed, double log_sigma) {
  std::vector<std::vector<double>> bases;
  for (const auto& b : baselines) {
    if (!same_resolutions(problem, b))
      throw MismatchError("baseline resolutions differ from the problem's");
    bases.push_back(project_to_ordered_box(problem, b.bitrates()));
  }
  std::vector<Ladder> out;
  for (const auto& b : bases) out.push_back(problem.ladder(b));
  if (bases.empty()) {
    std::vector<double> mid(problem.size());
    for (std::size_t i = 0; i < mid.size(); ++i)
      mid[i] = std::sqrt(problem.ordered_lower()[i] * problem.ordered_upper()[i]);
    bases.push_back(project_to_ordered_box(problem, mid));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, log_sigma);
  for (std::size_t k = 0; k < jittered; ++k) {
    std::vector<double> r = bases[k % bases.size()];
    for (double& x : r) x *= std::exp(z(rng));
    out.push_back(problem.ladder(project_to_ordered_box(problem, r)));
  }
  return out;
}

OptimizationResult solve(const OptimizationProblem& problem, std::span<const Ladder> starts,
                         const SolverConfig& config) {
  if (starts.empty()) throw InfeasibleError("no starting ladders");
  for (const auto& s : starts)
    if (!same_resolutions(problem, s))
      throw MismatchError("start ladder resolutions differ from the problem's");

  const double r_ref = problem.player().evaluate(problem.ordered_upper(), false).avg_bitrate;
  std::size_t evaluations = 0;
  std::size_t total_iterations = 0;
  std::optional<Candidate> best;
  std::size_t best_index = 0;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    auto c = run_start(problem, starts[k], config, r_ref, evaluations);
    total_iterations += c.iterations;
    if (!c.feasible) continue;
    if (!best || c.eval.avg_bitrate < best->eval.avg_bitrate) {
      best = std::move(c);
      best_index = k;
    }
  }
  if (!best)
    throw InfeasibleError("no start reached the quality floor in chunk " + problem.model().chunk_id());

  const Ladder ladder = problem.ladder(best->bitrates);
  OptimizationResult out{.ladder = ladder};
  out.evaluation = best->eval;
  const auto& model = problem.model();
  PlayerModel step(model, ladder.resolutions(), problem.viewport(),
                   problem.bandwidth().with_smoothing(CdfSmoothing::step));
  PlayerModel linear(model, ladder.resolutions(), problem.viewport(),
                     problem.bandwidth().with_smoothing(CdfSmoothing::piecewise_linear));
  out.evaluation_step = step.evaluate(best->bitrates);
  out.evaluation_linear = linear.evaluate(best->bitrates);
  out.q0 = problem.q0();
  out.converged = best->converged;
  out.iterations = best->iterations;
  out.total_iterations = total_iterations;
  out.evaluations = evaluations;
  out.starts_tried = starts.size();
  out.best_start = best_index;
  out.constraint_violation = problem.constraint_violation(best->eval.avg_quality);
  out.start_bitrate = best->start_bitrate;
  out.objective_history = std::move(best->history);
  return out;
}

}  // namespace ladderopt
