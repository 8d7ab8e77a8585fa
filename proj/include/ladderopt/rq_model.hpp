#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ladderopt {

using BitsPerSecond = double;
using Pixels = int;

struct RqSample {
  BitsPerSecond bitrate = 0.0;
  double quality = 0.0;
  std::optional<std::string> label;
};

// Piecewise-linear rate-quality characteristic of one output resolution.
//
// Samples are strictly ascending in bitrate with non-decreasing quality and
// there are at least two of them. The curve is immutable once built.
class RateQualityCurve {
 public:
  // Strict constructor: throws ValidationError unless `samples` already
  // satisfies every invariant.
  RateQualityCurve(Pixels resolution, std::vector<RqSample> samples);

  // Ingest path: sorts by bitrate and repairs non-monotone quality with a
  // running maximum. Each repaired sample appends a message to `warnings`.
  // Duplicate bitrates, non-positive bitrates and non-finite values are
  // still rejected.
  static RateQualityCurve from_raw(Pixels resolution, std::vector<RqSample> samples,
                                   std::vector<std::string>* warnings = nullptr);

  Pixels resolution() const noexcept { return resolution_; }
  std::size_t size() const noexcept { return bitrates_.size(); }
  std::span<const double> bitrates() const noexcept { return bitrates_; }
  std::span<const double> qualities() const noexcept { return qualities_; }
  const std::vector<std::optional<std::string>>& labels() const noexcept { return labels_; }
  RqSample sample(std::size_t i) const;

  // Index of the sample carrying `label`, if any.
  std::optional<std::size_t> find_label(std::string_view label) const;

 private:
  Pixels resolution_;
  std::vector<double> bitrates_;
  std::vector<double> qualities_;
  std::vector<std::optional<std::string>> labels_;
};

// Linear interpolation between bracketing samples; clamps to the boundary
// sample outside the sampled range.
double eval_quality(const RateQualityCurve& curve, BitsPerSecond bitrate);

// Slope of the active segment. Right-hand slope at knots, 0 outside the
// sampled range (including at the last sample).
double eval_quality_slope(const RateQualityCurve& curve, BitsPerSecond bitrate);

std::pair<BitsPerSecond, BitsPerSecond> bitrate_range(const RateQualityCurve& curve);

// Rate-quality models of every output resolution of one chunk.
class ChunkRqModel {
 public:
  ChunkRqModel(std::string chunk_id, Pixels source_resolution, std::vector<RateQualityCurve> curves);

  const std::string& chunk_id() const noexcept { return chunk_id_; }
  Pixels source_resolution() const noexcept { return source_resolution_; }
  const std::map<Pixels, RateQualityCurve>& curves() const noexcept { return curves_; }
  std::vector<Pixels> resolutions() const;
  bool has(Pixels resolution) const { return curves_.contains(resolution); }
  // Throws ValidationError for an unknown resolution.
  const RateQualityCurve& curve(Pixels resolution) const;

 private:
  std::string chunk_id_;
  Pixels source_resolution_;
  std::map<Pixels, RateQualityCurve> curves_;
};

// q(r) = a + b * log(1 + r / knee), the concave shape of a typical
// rate-quality curve.
struct SynthCurveParams {
  double a = 0.0;
  double b = 0.0;
  BitsPerSecond knee = 0.0;
  // Sampled span; 0 selects [knee / 1000, 100 * knee].
  BitsPerSecond min_bitrate = 0.0;
  BitsPerSecond max_bitrate = 0.0;
};

// Bitrate a CRF value maps to on the synthetic sweep: CRF 55 sits at
// min_bitrate, CRF 5 at max_bitrate, log-linear in between.
BitsPerSecond synth_crf_bitrate(BitsPerSecond min_bitrate, BitsPerSecond max_bitrate, double crf);

// Emits the 11-point CRF sweep (labels "crf55" ... "crf5") plus one sample
// per entry of `extra_crfs` (e.g. 23), all on the analytic curve.
RateQualityCurve synth_curve(Pixels resolution, const SynthCurveParams& params,
                             std::span<const int> extra_crfs = {});

}  // namespace ladderopt
