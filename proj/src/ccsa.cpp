#include "ladderopt/ccsa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ladderopt/error.hpp"

namespace ladderopt::ccsa {

namespace {

constexpr double kRhoMin = 1e-5;

struct Point {
  std::vector<double> x;
  double f = 0.0;
  double g = 0.0;
  std::vector<double> df;
  std::vector<double> dg;
};

struct Model {
  std::vector<double> x;
  double f = 0.0;  // approximation of f at x
  double g = 0.0;  // approximation of g at x
  double w = 0.0;  // 1/2 sum d^2 / (sigma^2 - d^2)
};

class Solver {
 public:
  Solver(const Problem& p, const Options& o) : p_(p), o_(o), n_(p.lb.size()) {}

  Result run(std::span<const double> x0);

 private:
  void eval(Point& pt) {
    pt.df.assign(n_, 0.0);
    pt.f = p_.objective(pt.x, pt.df);
    if (p_.constraint) {
      pt.dg.assign(n_, 0.0);
      pt.g = p_.constraint(pt.x, pt.dg);
    } else {
      pt.g = 0.0;
    }
    ++evaluations_;
    consider(pt);
  }

  void consider(const Point& pt) {
    const bool feas = pt.g <= 0.0;
    bool better;
    if (!have_best_) {
      better = true;
    } else if (feas != best_feasible_) {
      better = feas;
    } else {
      better = feas ? pt.f < best_.f : pt.g < best_.g;
    }
    if (better) {
      best_ = pt;
      best_feasible_ = feas;
      have_best_ = true;
    }
  }

  // Minimizer of the Lagrangian model for multiplier y, with model values.
  void step(const Point& c, double y, Model& m) const {
    m.x.resize(n_);
    m.f = c.f;
    m.g = c.g;
    m.w = 0.0;
    const bool has_g = static_cast<bool>(p_.constraint);
    for (std::size_t j = 0; j < n_; ++j) {
      const double s = sigma_[j];
      if (s <= 0.0) {
        m.x[j] = c.x[j];
        continue;
      }
      const double s2 = s * s;
      const double df = c.df[j];
      const double dg = has_g ? c.dg[j] : 0.0;
      const double a = df + y * dg;
      const double b = std::abs(df) + y * std::abs(dg);
      const double cc = rho_f_ + (has_g ? y * rho_g_ : 0.0);
      const double u = s2 * a;
      const double v = s * b + 0.5 * cc;
      double d = 0.0;
      if (u != 0.0) d = -u / (v + std::sqrt(std::max(0.0, v * v - (u / s) * (u / s))));
      const double lo = std::max(p_.lb[j], c.x[j] - 0.9 * s);
      const double hi = std::min(p_.ub[j], c.x[j] + 0.9 * s);
      m.x[j] = std::clamp(c.x[j] + d, lo, hi);
      d = m.x[j] - c.x[j];
      const double inv = 1.0 / (s2 - d * d);
      const double d2 = d * d;
      m.f += (s2 * df * d + (s * std::abs(df) + 0.5 * rho_f_) * d2) * inv;
      if (has_g) m.g += (s2 * dg * d + (s * std::abs(dg) + 0.5 * rho_g_) * d2) * inv;
      m.w += 0.5 * d2 * inv;
    }
  }

  void solve_subproblem(const Point& c, Model& m) const {
    step(c, 0.0, m);
    if (!p_.constraint || m.g <= 0.0) return;
    double lo = 0.0;
    double hi = 1.0;
    Model trial;
    step(c, hi, trial);
    while (trial.g > 0.0 && hi < 1e40) {
      lo = hi;
      hi *= 4.0;
      step(c, hi, trial);
    }
    if (trial.g > 0.0) {
      m = trial;
      return;
    }
    m = trial;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = (lo > 0.0 && hi > 8.0 * lo) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
      step(c, mid, trial);
      if (trial.g > 0.0) {
        lo = mid;
      } else {
        hi = mid;
        m = trial;
      }
    }
  }

  const Problem& p_;
  const Options& o_;
  std::size_t n_;
  std::vector<double> sigma_;
  double rho_f_ = 1.0;
  double rho_g_ = 1.0;
  std::size_t evaluations_ = 0;
  Point best_;
  bool best_feasible_ = false;
  bool have_best_ = false;
};

Result Solver::run(std::span<const double> x0) {
  if (x0.size() != n_ || p_.ub.size() != n_) throw ValidationError("ccsa: dimension mismatch");
  for (std::size_t j = 0; j < n_; ++j)
    if (!(p_.lb[j] <= p_.ub[j])) throw ValidationError("ccsa: lower bound above upper bound");

  Point cur;
  cur.x.resize(n_);
  for (std::size_t j = 0; j < n_; ++j) cur.x[j] = std::clamp(x0[j], p_.lb[j], p_.ub[j]);
  eval(cur);

  sigma_.resize(n_);
  for (std::size_t j = 0; j < n_; ++j) sigma_[j] = 0.5 * (p_.ub[j] - p_.lb[j]);

  Result r;
  if (o_.record_history) r.history.push_back(cur.f);
  auto reached_stop = [&](const Point& pt) {
    return o_.stop_value && pt.g <= 0.0 && pt.f <= *o_.stop_value;
  };

  std::vector<double> prev1;
  std::vector<double> prev2;
  std::size_t quiet = 0;
  bool converged = reached_stop(cur);
  std::size_t iter = 0;
  Model m;
  Point trial;
  while (!converged && iter < o_.max_iters) {
    ++iter;
    for (std::size_t inner = 0; inner < o_.max_inner; ++inner) {
      solve_subproblem(cur, m);
      trial.x = m.x;
      eval(trial);
      const bool ok_f = trial.f <= m.f;
      const bool ok_g = !p_.constraint || trial.g <= m.g;
      if ((ok_f && ok_g) || m.w <= 0.0) break;
      if (!ok_f) rho_f_ = std::min(10.0 * rho_f_, 1.1 * (rho_f_ + (trial.f - m.f) / m.w));
      if (!ok_g) rho_g_ = std::min(10.0 * rho_g_, 1.1 * (rho_g_ + (trial.g - m.g) / m.w));
    }

    double dx = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const double range = p_.ub[j] - p_.lb[j];
      if (range > 0.0) dx = std::max(dx, std::abs(trial.x[j] - cur.x[j]) / range);
    }
    const double df = std::abs(trial.f - cur.f);
    const bool feasible_now = trial.g <= 0.0;

    prev2 = std::move(prev1);
    prev1 = cur.x;
    cur = trial;
    if (o_.record_history) r.history.push_back(cur.f);

    if (reached_stop(cur)) {
      converged = true;
      break;
    }
    if (feasible_now && df <= o_.ftol_rel * std::abs(cur.f)) {
      if (++quiet >= o_.stall_iters) converged = true;
    } else {
      quiet = 0;
    }
    if (feasible_now && dx <= o_.xtol_rel) converged = true;

    if (!prev2.empty()) {
      for (std::size_t j = 0; j < n_; ++j) {
        const double range = p_.ub[j] - p_.lb[j];
        const double osc = (cur.x[j] - prev1[j]) * (prev1[j] - prev2[j]);
        sigma_[j] *= osc < 0.0 ? 0.7 : 1.2;
        sigma_[j] = std::clamp(sigma_[j], 1e-8 * range, 10.0 * range);
      }
    }
    rho_f_ = std::max(0.1 * rho_f_, kRhoMin);
    rho_g_ = std::max(0.1 * rho_g_, kRhoMin);
  }

  r.x = best_.x;
  r.f = best_.f;
  r.g = best_.g;
  r.feasible = best_feasible_;
  r.converged = converged;
  r.iterations = iter;
  r.evaluations = evaluations_;
  return r;
}

}  // namespace

Result minimize(const Problem& problem, std::span<const double> x0, const Options& options) {
  if (!problem.objective) throw ValidationError("ccsa: missing objective");
  if (problem.lb.size() != problem.ub.size()) throw ValidationError("ccsa: bound size mismatch");
  Solver solver(problem, options);
  return solver.run(x0);
}

}  // namespace ladderopt::ccsa
