#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ladderopt/player_model.hpp"
#include "ladderopt/rq_model.hpp"
#include "ladderopt/stats.hpp"

namespace ladderopt {

inline constexpr double kDefaultMinGap = 1000.0;

// minimize R(r) subject to Q(r) >= q0, lo_i <= r_i <= hi_i (each curve's
// sampled range) and r_{i+1} >= r_i + min_gap. The bandwidth distribution's
// smoothing mode is the one optimized against.
class OptimizationProblem {
 public:
  // Throws ValidationError when the ordered box is empty and InfeasibleError
  // when q0 is out of reach even at the upper bounds.
  OptimizationProblem(const ChunkRqModel& model, std::vector<Pixels> resolutions, ViewportDistribution vd,
                      BandwidthDistribution bd, double q0, double min_gap = kDefaultMinGap);

  const ChunkRqModel& model() const noexcept { return model_; }
  std::span<const Pixels> resolutions() const noexcept { return resolutions_; }
  const ViewportDistribution& viewport() const noexcept { return vd_; }
  const BandwidthDistribution& bandwidth() const noexcept { return bd_; }
  const PlayerModel& player() const noexcept { return player_; }
  double q0() const noexcept { return q0_; }
  double min_gap() const noexcept { return min_gap_; }
  std::size_t size() const noexcept { return resolutions_.size(); }

  // Sampled range of each entry's curve.
  std::span<const double> lower() const noexcept { return lo_; }
  std::span<const double> upper() const noexcept { return hi_; }
  // Tightest bounds compatible with the ordering constraint.
  std::span<const double> ordered_lower() const noexcept { return lo_ordered_; }
  std::span<const double> ordered_upper() const noexcept { return hi_ordered_; }

  // Q(r) >= q0 - 1e-6 |q0|.
  bool feasible(double quality) const noexcept;
  double constraint_violation(double quality) const noexcept;

  Ladder ladder(std::span<const double> bitrates) const;

 private:
  ChunkRqModel model_;
  std::vector<Pixels> resolutions_;
  ViewportDistribution vd_;
  BandwidthDistribution bd_;
  PlayerModel player_;
  double q0_;
  double min_gap_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<double> lo_ordered_;
  std::vector<double> hi_ordered_;
};

struct SolverConfig {
  std::size_t max_iters = 500;  // per start and phase
  double ftol_rel = 1e-6;
  std::size_t stall_iters = 5;
  bool record_history = false;
};

struct OptimizationResult {
  Ladder ladder;
  ModelEvaluation evaluation{};  // under the problem's smoothing
  ModelEvaluation evaluation_step{};    // same ladder, step CDF
  ModelEvaluation evaluation_linear{};  // same ladder, piecewise-linear CDF
  double q0 = 0.0;
  bool converged = false;
  std::size_t iterations = 0;        // best start
  std::size_t total_iterations = 0;  // all starts
  std::size_t evaluations = 0;
  std::size_t starts_tried = 0;
  std::size_t best_start = 0;
  double constraint_violation = 0.0;  // max(0, q0 - Q(r*))
  double start_bitrate = 0.0;         // R at the best start, after projection
  std::vector<double> objective_history{};
};

// Sequential clamp: r_0 into its ordered bounds, then each r_i into
// [max(lower_i, r_{i-1} + gap), ordered upper_i].
std::vector<double> project_to_ordered_box(const OptimizationProblem& problem, std::span<const double> bitrates);

// Baselines projected to the box, followed by `jittered` log-normal
// perturbations (cycling over the baselines) drawn from `seed`.
std::vector<Ladder> default_starts(const OptimizationProblem& problem, std::span<const Ladder> baselines,
                                   std::size_t jittered, std::uint64_t seed, double log_sigma = 0.35);

// Runs the solver from every start and keeps the feasible point with the
// lowest R (ties: earliest start). Throws InfeasibleError when no start
// reaches the quality floor, MismatchError when a start's resolutions differ
// from the problem's.
OptimizationResult solve(const OptimizationProblem& problem, std::span<const Ladder> starts,
                         const SolverConfig& config = {});

}  // namespace ladderopt
