#include "ladderopt/rq_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ladderopt/error.hpp"

namespace ladderopt {

namespace {

std::string curve_context(Pixels resolution) {
  return "curve " + std::to_string(resolution) + "p: ";
}

}  // namespace

RateQualityCurve::RateQualityCurve(Pixels resolution, std::vector<RqSample> samples)
    : resolution_(resolution) {
  const auto ctx = curve_context(resolution);
  if (resolution <= 0) throw ValidationError(ctx + "resolution must be positive");
  if (samples.size() < 2) throw ValidationError(ctx + "at least 2 samples required");
  bitrates_.reserve(samples.size());
  qualities_.reserve(samples.size());
  labels_.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!std::isfinite(s.bitrate) || s.bitrate <= 0.0)
      throw ValidationError(ctx + "bitrate must be positive and finite");
    if (!std::isfinite(s.quality)) throw ValidationError(ctx + "quality must be finite");
    if (i > 0) {
      if (!(s.bitrate > samples[i - 1].bitrate))
        throw ValidationError(ctx + "bitrates must be strictly ascending");
      if (s.quality < samples[i - 1].quality)
        throw ValidationError(ctx + "quality must be non-decreasing in bitrate");
    }
    bitrates_.push_back(s.bitrate);
    qualities_.push_back(s.quality);
    labels_.push_back(std::move(samples[i].label));
  }
}

RateQualityCurve RateQualityCurve::from_raw(Pixels resolution, std::vector<RqSample> samples,
                                            std::vector<std::string>* warnings) {
  std::stable_sort(samples.begin(), samples.end(),
                   [](const RqSample& x, const RqSample& y) { return x.bitrate < y.bitrate; });
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].bitrate == samples[i - 1].bitrate) {
      std::ostringstream msg;
      msg << curve_context(resolution) << "duplicate bitrate " << samples[i].bitrate;
      throw ValidationError(msg.str());
    }
    if (std::isfinite(samples[i].quality) && samples[i].quality < samples[i - 1].quality) {
      if (warnings) {
        std::ostringstream msg;
        msg << curve_context(resolution) << "quality " << samples[i].quality << " at bitrate "
            << samples[i].bitrate << " raised to running maximum " << samples[i - 1].quality;
        warnings->push_back(msg.str());
      }
      samples[i].quality = samples[i - 1].quality;
    }
  }
  return RateQualityCurve(resolution, std::move(samples));
}

RqSample RateQualityCurve::sample(std::size_t i) const {
  return RqSample{bitrates_.at(i), qualities_.at(i), labels_.at(i)};
}

std::optional<std::size_t> RateQualityCurve::find_label(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] && *labels_[i] == label) return i;
  return std::nullopt;
}

double eval_quality(const RateQualityCurve& curve, BitsPerSecond bitrate) {
  const auto r = curve.bitrates();
  const auto q = curve.qualities();
  if (bitrate <= r.front()) return q.front();
  if (bitrate >= r.back()) return q.back();
  const auto k = static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), bitrate) - r.begin());
  return q[k - 1] + (bitrate - r[k - 1]) * (q[k] - q[k - 1]) / (r[k] - r[k - 1]);
}

double eval_quality_slope(const RateQualityCurve& curve, BitsPerSecond bitrate) {
  const auto r = curve.bitrates();
  const auto q = curve.qualities();
  if (bitrate < r.front() || bitrate >= r.back()) return 0.0;
  const auto k = static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), bitrate) - r.begin());
  return (q[k] - q[k - 1]) / (r[k] - r[k - 1]);
}

std::pair<BitsPerSecond, BitsPerSecond> bitrate_range(const RateQualityCurve& curve) {
  return {curve.bitrates().front(), curve.bitrates().back()};
}

ChunkRqModel::ChunkRqModel(std::string chunk_id, Pixels source_resolution,
                           std::vector<RateQualityCurve> curves)
    : chunk_id_(std::move(chunk_id)), source_resolution_(source_resolution) {
  if (source_resolution_ <= 0) throw ValidationError("chunk " + chunk_id_ + ": source resolution must be positive");
  if (curves.empty()) throw ValidationError("chunk " + chunk_id_ + ": no rate-quality curves");
  for (auto& c : curves) {
    const Pixels res = c.resolution();
    if (res > source_resolution_)
      throw ValidationError("chunk " + chunk_id_ + ": curve resolution " + std::to_string(res) +
                            " exceeds source resolution " + std::to_string(source_resolution_));
    if (!curves_.emplace(res, std::move(c)).second)
      throw ValidationError("chunk " + chunk_id_ + ": duplicate curve resolution " + std::to_string(res));
  }
}

std::vector<Pixels> ChunkRqModel::resolutions() const {
  std::vector<Pixels> out;
  out.reserve(curves_.size());
  for (const auto& [res, _] : curves_) out.push_back(res);
  return out;
}

const RateQualityCurve& ChunkRqModel::curve(Pixels resolution) const {
  auto it = curves_.find(resolution);
  if (it == curves_.end())
    throw ValidationError("chunk " + chunk_id_ + " has no curve for " + std::to_string(resolution) + "p");
  return it->second;
}

BitsPerSecond synth_crf_bitrate(BitsPerSecond min_bitrate, BitsPerSecond max_bitrate, double crf) {
  const double pos = (55.0 - crf) / 50.0;
  return min_bitrate * std::pow(max_bitrate / min_bitrate, pos);
}

RateQualityCurve synth_curve(Pixels resolution, const SynthCurveParams& params,
                             std::span<const int> extra_crfs) {
  if (!(params.a > 0.0) || !(params.b > 0.0) || !(params.knee > 0.0))
    throw ValidationError("synth_curve: a, b and knee must be positive");
  const double lo = params.min_bitrate > 0.0 ? params.min_bitrate : params.knee * 1e-3;
  const double hi = params.max_bitrate > 0.0 ? params.max_bitrate : params.knee * 1e2;
  if (!(hi > lo)) throw ValidationError("synth_curve: max_bitrate must exceed min_bitrate");

  std::vector<int> crfs;
  for (int crf = 55; crf >= 5; crf -= 5) crfs.push_back(crf);
  for (int crf : extra_crfs) {
    if (crf < 5 || crf > 55) throw ValidationError("synth_curve: extra CRF outside [5, 55]");
    if (std::find(crfs.begin(), crfs.end(), crf) == crfs.end()) crfs.push_back(crf);
  }
  std::sort(crfs.begin(), crfs.end(), std::greater<>());

  std::vector<RqSample> samples;
  samples.reserve(crfs.size());
  for (int crf : crfs) {
    const double r = synth_crf_bitrate(lo, hi, crf);
    samples.push_back({r, params.a + params.b * std::log1p(r / params.knee), "crf" + std::to_string(crf)});
  }
  return RateQualityCurve(resolution, std::move(samples));
}

}  // namespace ladderopt
