#include "ladderopt/player_model.hpp"

#include <algorithm>
#include <cmath>

#include "ladderopt/error.hpp"

namespace ladderopt {

namespace {

void validate_ladder(std::span<const LadderEntry> entries) {
  if (entries.empty()) throw ValidationError("ladder: no entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.resolution <= 0) throw ValidationError("ladder: non-positive resolution");
    if (!std::isfinite(e.bitrate) || e.bitrate <= 0.0) throw ValidationError("ladder: bitrate must be positive");
    if (i == 0) continue;
    const auto& p = entries[i - 1];
    if (e.bitrate < p.bitrate) throw ValidationError("ladder: bitrates must be ascending");
    if (e.resolution < p.resolution)
      throw ValidationError("ladder: resolution must not decrease as bitrate increases");
    if (e.resolution == p.resolution && e.bitrate == p.bitrate)
      throw ValidationError("ladder: duplicate entry at " + std::to_string(e.resolution) + "p");
  }
}

// reach[j] = P[entry j is eligible] given the ladder's (non-decreasing)
// resolutions. Eligible entries always form a prefix; a viewport below every
// resolution keeps only entry 0.
std::vector<double> eligibility_reach(std::span<const Pixels> resolutions, const ViewportDistribution& vd) {
  const std::size_t n = resolutions.size();
  std::vector<double> mass(n + 1, 0.0);  // mass[m] = P[prefix length == m]
  for (const auto& [v, p] : vd.pmf()) {
    const auto m = static_cast<std::size_t>(
        std::upper_bound(resolutions.begin(), resolutions.end(), v) - resolutions.begin());
    mass[std::max<std::size_t>(m, 1)] += p;
  }
  std::vector<double> reach(n + 1, 0.0);
  for (std::size_t j = n; j-- > 0;) reach[j] = reach[j + 1] + mass[j + 1];
  reach[0] = 1.0;
  return reach;
}

// lambda from the prefix structure: entry k plays when it is the top of the
// eligible prefix and R > r_k, or when entry k+1 is eligible too and
// r_k < R <= r_{k+1}. Entry 0 also absorbs R <= r_0.
void fill_lambda(std::span<const double> cdf_at_bitrate, std::span<const double> reach, std::vector<double>& lambda) {
  const std::size_t n = cdf_at_bitrate.size();
  lambda.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double fk = cdf_at_bitrate[k];
    const double next = k + 1 < n ? cdf_at_bitrate[k + 1] : 1.0;
    lambda[k] = reach[k + 1] * (next - fk) + (reach[k] - reach[k + 1]) * (1.0 - fk);
  }
  lambda[0] += cdf_at_bitrate[0];
}

}  // namespace

Ladder::Ladder(std::vector<LadderEntry> entries) : entries_(std::move(entries)) { validate_ladder(entries_); }

Ladder Ladder::sorted(std::vector<LadderEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const LadderEntry& a, const LadderEntry& b) {
    return a.bitrate != b.bitrate ? a.bitrate < b.bitrate : a.resolution < b.resolution;
  });
  return Ladder(std::move(entries));
}

Ladder Ladder::from(std::span<const Pixels> resolutions, std::span<const double> bitrates) {
  if (resolutions.size() != bitrates.size()) throw ValidationError("ladder: resolution/bitrate count mismatch");
  std::vector<LadderEntry> entries;
  entries.reserve(resolutions.size());
  for (std::size_t i = 0; i < resolutions.size(); ++i) entries.push_back({resolutions[i], bitrates[i]});
  return Ladder(std::move(entries));
}

std::vector<double> Ladder::bitrates() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.bitrate);
  return out;
}

std::vector<Pixels> Ladder::resolutions() const {
  std::vector<Pixels> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.resolution);
  return out;
}

void check_ladder_resolutions(const Ladder& ladder, const ChunkRqModel& model) {
  for (const auto& e : ladder.entries())
    if (!model.has(e.resolution))
      throw ValidationError("ladder resolution " + std::to_string(e.resolution) + "p not present in chunk " +
                            model.chunk_id());
}

Selection select_representation_detail(const Ladder& ladder, Pixels viewport, BitsPerSecond bandwidth) {
  bool any_eligible = false;
  for (const auto& e : ladder.entries()) any_eligible = any_eligible || e.resolution <= viewport;

  std::size_t cheapest = ladder.size();
  std::size_t best = ladder.size();
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const auto& e = ladder[i];
    const bool eligible = any_eligible ? e.resolution <= viewport : i == 0;
    if (!eligible) continue;
    if (cheapest == ladder.size() || e.bitrate < ladder[cheapest].bitrate) cheapest = i;
    if (e.bitrate < bandwidth) {
      if (best == ladder.size() || e.bitrate > ladder[best].bitrate ||
          (e.bitrate == ladder[best].bitrate && e.resolution >= ladder[best].resolution))
        best = i;
    }
  }
  if (best == ladder.size()) return {cheapest, true};
  return {best, false};
}

std::size_t select_representation(const Ladder& ladder, Pixels viewport, BitsPerSecond bandwidth) {
  return select_representation_detail(ladder, viewport, bandwidth).index;
}

std::vector<double> viewing_probabilities(const Ladder& ladder, const ViewportDistribution& vd,
                                          const BandwidthDistribution& bd) {
  const auto resolutions = ladder.resolutions();
  const auto reach = eligibility_reach(resolutions, vd);
  std::vector<double> cdf(ladder.size());
  for (std::size_t i = 0; i < ladder.size(); ++i) cdf[i] = bd.cdf(ladder[i].bitrate);
  std::vector<double> lambda;
  fill_lambda(cdf, reach, lambda);
  return lambda;
}

ModelEvaluation evaluate(const Ladder& ladder, const ChunkRqModel& model, const ViewportDistribution& vd,
                         const BandwidthDistribution& bd, const EvaluateOptions& options) {
  check_ladder_resolutions(ladder, model);
  if (!options.clamp_to_range) {
    for (const auto& e : ladder.entries()) {
      const auto [lo, hi] = bitrate_range(model.curve(e.resolution));
      if (e.bitrate < lo || e.bitrate > hi)
        throw ValidationError("ladder bitrate " + std::to_string(e.bitrate) + " outside the sampled range of " +
                              std::to_string(e.resolution) + "p");
    }
  }
  PlayerModel pm(model, ladder.resolutions(), vd, bd);
  return pm.evaluate(ladder.bitrates());
}

PlayerModel::PlayerModel(const ChunkRqModel& model, std::vector<Pixels> resolutions, const ViewportDistribution& vd,
                         const BandwidthDistribution& bd)
    : resolutions_(std::move(resolutions)), bd_(bd) {
  if (resolutions_.empty()) throw ValidationError("player model: no representations");
  if (!std::is_sorted(resolutions_.begin(), resolutions_.end()))
    throw ValidationError("player model: resolutions must be non-decreasing");
  curves_.reserve(resolutions_.size());
  for (Pixels v : resolutions_) curves_.push_back(model.curve(v));
  reach_ = eligibility_reach(resolutions_, vd);
}

void PlayerModel::evaluate(std::span<const double> bitrates, ModelEvaluation& out, bool with_gradient) const {
  const std::size_t n = curves_.size();
  if (bitrates.size() != n) throw ValidationError("player model: bitrate vector has wrong size");

  thread_local std::vector<double> cdf;
  cdf.resize(n);
  for (std::size_t i = 0; i < n; ++i) cdf[i] = bd_.cdf(bitrates[i]);
  fill_lambda(cdf, reach_, out.viewing_prob);
  out.fallback_prob = cdf[0];

  out.qualities.resize(n);
  double rate = 0.0;
  double quality = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.qualities[i] = eval_quality(curves_[i], bitrates[i]);
    rate += out.viewing_prob[i] * bitrates[i];
    quality += out.viewing_prob[i] * out.qualities[i];
  }
  out.avg_bitrate = rate;
  out.avg_quality = quality;

  if (!with_gradient) {
    out.grad_bitrate.clear();
    out.grad_quality.clear();
    return;
  }
  out.grad_bitrate.resize(n);
  out.grad_quality.resize(n);
  const bool smooth = bd_.smoothing() == CdfSmoothing::piecewise_linear;
  for (std::size_t j = 0; j < n; ++j) {
    const double lam = out.viewing_prob[j];
    double dr = lam;
    double dq = lam * eval_quality_slope(curves_[j], bitrates[j]);
    // Raising r_j moves density f(r_j) of the viewers that can reach entry j
    // from entry j down to entry j-1. The move from entry 0 to its own
    // fallback bucket cancels, so j = 0 has no shift term.
    if (smooth && j > 0) {
      const double shift = bw_density(bd_, bitrates[j]) * reach_[j];
      dr += shift * (bitrates[j - 1] - bitrates[j]);
      dq += shift * (out.qualities[j - 1] - out.qualities[j]);
    }
    out.grad_bitrate[j] = dr;
    out.grad_quality[j] = dq;
  }
}

ModelEvaluation PlayerModel::evaluate(std::span<const double> bitrates, bool with_gradient) const {
  ModelEvaluation out;
  evaluate(bitrates, out, with_gradient);
  return out;
}

}  // namespace ladderopt
