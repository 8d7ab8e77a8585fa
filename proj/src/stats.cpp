#include "ladderopt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ladderopt/error.hpp"

namespace ladderopt {

Pixels snap_viewport(double height) {
  Pixels snapped = kStandardHeights.front();
  for (Pixels h : kStandardHeights)
    if (static_cast<double>(h) <= height) snapped = h;
  return snapped;
}

ViewportDistribution::ViewportDistribution(std::map<Pixels, double> pmf) : pmf_(std::move(pmf)) {
  if (pmf_.empty()) throw ValidationError("viewport distribution: empty pmf");
  double total = 0.0;
  for (const auto& [v, p] : pmf_) {
    if (v <= 0) throw ValidationError("viewport distribution: non-positive height");
    if (!std::isfinite(p) || p < 0.0) throw ValidationError("viewport distribution: invalid probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("viewport distribution: probabilities do not sum to 1");
}

ViewportDistribution ViewportDistribution::from_weights(const std::map<Pixels, double>& weights) {
  double total = 0.0;
  for (const auto& [v, w] : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("viewport distribution: invalid weight");
    total += w;
  }
  if (!(total > 0.0)) throw EmptyInputError("viewport distribution: zero total weight");
  std::map<Pixels, double> pmf;
  for (const auto& [v, w] : weights)
    if (w > 0.0) pmf.emplace(v, w / total);
  return ViewportDistribution(std::move(pmf));
}

double prob_viewport_eq(const ViewportDistribution& d, Pixels v) {
  auto it = d.pmf().find(v);
  return it == d.pmf().end() ? 0.0 : it->second;
}

double prob_viewport_gt(const ViewportDistribution& d, Pixels v) {
  double sum = 0.0;
  for (auto it = d.pmf().upper_bound(v); it != d.pmf().end(); ++it) sum += it->second;
  return sum;
}

double prob_viewport_lt(const ViewportDistribution& d, Pixels v) {
  double sum = 0.0;
  for (auto it = d.pmf().begin(); it != d.pmf().end() && it->first < v; ++it) sum += it->second;
  return sum;
}

const char* to_string(CdfSmoothing s) {
  return s == CdfSmoothing::step ? "step" : "linear";
}

CdfSmoothing parse_smoothing(std::string_view text) {
  if (text == "step") return CdfSmoothing::step;
  if (text == "linear" || text == "piecewise_linear") return CdfSmoothing::piecewise_linear;
  throw ValidationError("unknown CDF smoothing '" + std::string(text) + "' (expected step|linear)");
}

BandwidthDistribution::BandwidthDistribution(std::vector<double> support, std::vector<double> cdf_at_support,
                                             CdfSmoothing smoothing)
    : smoothing_(smoothing) {
  if (support.empty()) throw ValidationError("bandwidth distribution: empty support");
  if (support.size() != cdf_at_support.size())
    throw ValidationError("bandwidth distribution: support and cdf sizes differ");
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!std::isfinite(support[i]) || support[i] < 0.0)
      throw ValidationError("bandwidth distribution: support values must be finite and non-negative");
    if (!std::isfinite(cdf_at_support[i]) || cdf_at_support[i] < 0.0 || cdf_at_support[i] > 1.0)
      throw ValidationError("bandwidth distribution: cdf values must lie in [0, 1]");
    if (i > 0 && !(support[i] > support[i - 1]))
      throw ValidationError("bandwidth distribution: support must be strictly ascending");
    if (i > 0 && cdf_at_support[i] < cdf_at_support[i - 1])
      throw ValidationError("bandwidth distribution: cdf must be non-decreasing");
  }
  if (cdf_at_support.back() != 1.0) throw ValidationError("bandwidth distribution: final cdf value must be 1");
  data_ = std::make_shared<const Data>(Data{std::move(support), std::move(cdf_at_support)});
}

BandwidthDistribution BandwidthDistribution::from_samples(std::span<const double> values,
                                                          std::span<const double> weights,
                                                          CdfSmoothing smoothing) {
  if (values.empty()) throw EmptyInputError("bandwidth distribution: no samples");
  if (!weights.empty() && weights.size() != values.size())
    throw ValidationError("bandwidth distribution: weight count differs from sample count");

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> support;
  std::vector<double> mass;
  for (std::size_t idx : order) {
    const double w = weights.empty() ? 1.0 : weights[idx];
    if (!support.empty() && support.back() == values[idx]) {
      mass.back() += w;
    } else {
      support.push_back(values[idx]);
      mass.push_back(w);
    }
  }
  // Zero-weight points carry no probability; drop them so every support
  // point is an atom of the empirical measure.
  std::vector<double> kept_support;
  std::vector<double> kept_mass;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (mass[i] > 0.0) {
      kept_support.push_back(support[i]);
      kept_mass.push_back(mass[i]);
    }
  }
  if (kept_support.empty()) throw EmptyInputError("bandwidth distribution: zero total weight");

  std::vector<double> cdf(kept_mass.size());
  std::partial_sum(kept_mass.begin(), kept_mass.end(), cdf.begin());
  const double total = cdf.back();
  for (double& c : cdf) c /= total;
  cdf.back() = 1.0;
  return BandwidthDistribution(std::move(kept_support), std::move(cdf), smoothing);
}

BandwidthDistribution BandwidthDistribution::with_smoothing(CdfSmoothing smoothing) const {
  BandwidthDistribution copy = *this;
  copy.smoothing_ = smoothing;
  return copy;
}

double BandwidthDistribution::cdf(double x) const {
  const auto& s = data_->support;
  const auto& c = data_->cdf;
  if (x < s.front()) return 0.0;
  if (x >= s.back()) return 1.0;
  const auto k = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), x) - s.begin());
  if (smoothing_ == CdfSmoothing::step) return c[k - 1];
  return c[k - 1] + (x - s[k - 1]) / (s[k] - s[k - 1]) * (c[k] - c[k - 1]);
}

double BandwidthDistribution::quantile(double u) const {
  const auto& s = data_->support;
  const auto& c = data_->cdf;
  if (u < c.front()) return s.front();
  const auto k = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), u) - c.begin());
  if (k >= s.size()) return s.back();
  if (smoothing_ == CdfSmoothing::step) return s[k];
  return s[k - 1] + (u - c[k - 1]) / (c[k] - c[k - 1]) * (s[k] - s[k - 1]);
}

double prob_bw_gt(const BandwidthDistribution& d, BitsPerSecond x) { return 1.0 - d.cdf(x); }

double prob_bw_interval(const BandwidthDistribution& d, BitsPerSecond lo, BitsPerSecond hi) {
  if (lo > hi) throw PreconditionError("prob_bw_interval: lo > hi");
  const double upper = hi == kInfiniteBandwidth ? 1.0 : d.cdf(hi);
  return upper - d.cdf(lo);
}

double bw_density(const BandwidthDistribution& d, BitsPerSecond x) {
  if (d.smoothing() != CdfSmoothing::piecewise_linear)
    throw PreconditionError("bw_density: density is undefined for step smoothing");
  const auto s = d.support();
  const auto c = d.cdf_at_support();
  if (x < s.front() || x >= s.back()) return 0.0;
  const auto k = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), x) - s.begin());
  return (c[k] - c[k - 1]) / (s[k] - s[k - 1]);
}

bool TraceAccumulator::add(const TraceRecord& record) {
  const bool ok = std::isfinite(record.estimated_bandwidth) && record.estimated_bandwidth > 0.0 &&
                  std::isfinite(record.viewport_height) && record.viewport_height > 0.0 &&
                  std::isfinite(record.weight) && record.weight >= 0.0;
  if (!ok) {
    ++skipped_;
    return false;
  }
  ++valid_;
  viewport_weight_[snap_viewport(record.viewport_height)] += record.weight;
  bandwidth_.push_back(record.estimated_bandwidth);
  weight_.push_back(record.weight);
  if (record.weight != 1.0) all_unit_weight_ = false;
  return true;
}

std::pair<ViewportDistribution, BandwidthDistribution> TraceAccumulator::finish(CdfSmoothing smoothing) const {
  if (valid_ == 0) throw EmptyInputError("no valid trace records");
  auto viewport = ViewportDistribution::from_weights(viewport_weight_);
  auto bandwidth = all_unit_weight_ ? BandwidthDistribution::from_samples(bandwidth_, {}, smoothing)
                                    : BandwidthDistribution::from_samples(bandwidth_, weight_, smoothing);
  return {std::move(viewport), std::move(bandwidth)};
}

IngestResult ingest_traces(std::span<const TraceRecord> records, CdfSmoothing smoothing) {
  TraceAccumulator acc;
  for (const auto& r : records) acc.add(r);
  auto [vd, bd] = acc.finish(smoothing);
  return IngestResult{std::move(vd), std::move(bd), acc.valid(), acc.skipped()};
}

}  // namespace ladderopt
