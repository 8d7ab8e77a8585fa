#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ladderopt/rq_model.hpp"

namespace ladderopt {

// Standard viewport heights supported by players.
inline constexpr std::array<Pixels, 8> kStandardHeights{144, 240, 360, 480, 720, 1080, 1440, 2160};

// Largest standard height <= `height`; heights below 144 snap up to 144.
Pixels snap_viewport(double height);

struct TraceRecord {
  BitsPerSecond estimated_bandwidth = 0.0;
  double viewport_height = 0.0;  // raw device height, snapped on ingest
  std::optional<std::string> session_id;
  std::optional<std::int64_t> timestamp_ms;
  double weight = 1.0;
};

class ViewportDistribution {
 public:
  // Probabilities must be non-negative and sum to 1 within 1e-12.
  explicit ViewportDistribution(std::map<Pixels, double> pmf);
  // Normalizes non-negative weights.
  static ViewportDistribution from_weights(const std::map<Pixels, double>& weights);

  const std::map<Pixels, double>& pmf() const noexcept { return pmf_; }

 private:
  std::map<Pixels, double> pmf_;
};

double prob_viewport_eq(const ViewportDistribution& d, Pixels v);
double prob_viewport_gt(const ViewportDistribution& d, Pixels v);
double prob_viewport_lt(const ViewportDistribution& d, Pixels v);

enum class CdfSmoothing { step, piecewise_linear };

const char* to_string(CdfSmoothing s);
CdfSmoothing parse_smoothing(std::string_view text);  // "step" | "linear" | "piecewise_linear"

// Empirical bandwidth distribution over a strictly ascending support.
//
// `step` is the right-continuous empirical CDF. `piecewise_linear` keeps
// CDF(s_k) and interpolates linearly between consecutive support points,
// with CDF = 0 below the first point and 1 above the last. The support and
// CDF arrays are shared between copies; only the smoothing mode differs.
class BandwidthDistribution {
 public:
  BandwidthDistribution(std::vector<double> support, std::vector<double> cdf_at_support,
                        CdfSmoothing smoothing = CdfSmoothing::piecewise_linear);

  // Merges identical values (accumulating weight) into one support point.
  // `weights` may be empty (equal weights).
  static BandwidthDistribution from_samples(std::span<const double> values, std::span<const double> weights = {},
                                            CdfSmoothing smoothing = CdfSmoothing::piecewise_linear);

  BandwidthDistribution with_smoothing(CdfSmoothing smoothing) const;

  CdfSmoothing smoothing() const noexcept { return smoothing_; }
  std::span<const double> support() const noexcept { return data_->support; }
  std::span<const double> cdf_at_support() const noexcept { return data_->cdf; }

  // P[R <= x] under the configured smoothing.
  double cdf(double x) const;
  // Inverse CDF for sampling: maps u in [0, 1) to a bandwidth distributed
  // according to the configured smoothing.
  double quantile(double u) const;

 private:
  struct Data {
    std::vector<double> support;
    std::vector<double> cdf;
  };
  std::shared_ptr<const Data> data_;
  CdfSmoothing smoothing_;
};

inline constexpr double kInfiniteBandwidth = std::numeric_limits<double>::infinity();

double prob_bw_gt(const BandwidthDistribution& d, BitsPerSecond x);
// P[lo < R <= hi]; `hi` may be kInfiniteBandwidth. Throws PreconditionError if lo > hi.
double prob_bw_interval(const BandwidthDistribution& d, BitsPerSecond lo, BitsPerSecond hi);
// Right-hand slope of the piecewise-linear CDF; 0 outside the support.
// Throws PreconditionError in step mode.
double bw_density(const BandwidthDistribution& d, BitsPerSecond x);

// Streaming accumulator behind ingest_traces; records are counted, snapped
// and folded in one at a time so trace files need not be held in memory.
class TraceAccumulator {
 public:
  // Returns false (and counts a skip) for malformed records.
  bool add(const TraceRecord& record);
  void count_skip() { ++skipped_; }

  std::size_t valid() const noexcept { return valid_; }
  std::size_t skipped() const noexcept { return skipped_; }

  // Throws EmptyInputError when no valid record carried positive weight.
  std::pair<ViewportDistribution, BandwidthDistribution> finish(
      CdfSmoothing smoothing = CdfSmoothing::piecewise_linear) const;

 private:
  std::map<Pixels, double> viewport_weight_;
  std::vector<double> bandwidth_;
  std::vector<double> weight_;
  bool all_unit_weight_ = true;
  std::size_t valid_ = 0;
  std::size_t skipped_ = 0;
};

struct IngestResult {
  ViewportDistribution viewport;
  BandwidthDistribution bandwidth;
  std::size_t valid = 0;
  std::size_t skipped = 0;
};

IngestResult ingest_traces(std::span<const TraceRecord> records,
                           CdfSmoothing smoothing = CdfSmoothing::piecewise_linear);

}  // namespace ladderopt
