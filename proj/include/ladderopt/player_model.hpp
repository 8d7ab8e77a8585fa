#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ladderopt/rq_model.hpp"
#include "ladderopt/stats.hpp"

namespace ladderopt {

struct LadderEntry {
  Pixels resolution = 0;
  BitsPerSecond bitrate = 0.0;
  friend bool operator==(const LadderEntry&, const LadderEntry&) = default;
};

// Representations ordered ascending by bitrate (ties ascending by
// resolution) with non-decreasing resolution along the order. Two entries
// may share a resolution but not a (resolution, bitrate) pair.
class Ladder {
 public:
  explicit Ladder(std::vector<LadderEntry> entries);
  // Sorts into ladder order first, then validates.
  static Ladder sorted(std::vector<LadderEntry> entries);
  static Ladder from(std::span<const Pixels> resolutions, std::span<const double> bitrates);

  std::span<const LadderEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const LadderEntry& operator[](std::size_t i) const { return entries_[i]; }
  std::vector<double> bitrates() const;
  std::vector<Pixels> resolutions() const;

  friend bool operator==(const Ladder&, const Ladder&) = default;

 private:
  std::vector<LadderEntry> entries_;
};

// Throws ValidationError if a ladder resolution has no curve in `model`.
void check_ladder_resolutions(const Ladder& ladder, const ChunkRqModel& model);

struct Selection {
  std::size_t index = 0;
  bool fallback = false;  // no eligible entry had bitrate below the bandwidth
};

// Player rules: only entries with resolution <= viewport are eligible (the
// lowest entry when none is); among them the largest bitrate strictly below
// the bandwidth wins, ties going to the later (higher resolution) entry;
// when no bitrate is below the bandwidth the cheapest eligible entry plays.
Selection select_representation_detail(const Ladder& ladder, Pixels viewport, BitsPerSecond bandwidth);
std::size_t select_representation(const Ladder& ladder, Pixels viewport, BitsPerSecond bandwidth);

std::vector<double> viewing_probabilities(const Ladder& ladder, const ViewportDistribution& vd,
                                          const BandwidthDistribution& bd);

struct ModelEvaluation {
  std::vector<double> viewing_prob;   // lambda_i, fallback mass included
  double fallback_prob = 0.0;         // mass served through the fallback rule
  double avg_bitrate = 0.0;           // R(r)
  double avg_quality = 0.0;           // Q(r)
  std::vector<double> qualities;      // q_i = q_{v_i}(r_i)
  std::vector<double> grad_bitrate;   // dR/dr_i
  std::vector<double> grad_quality;   // dQ/dr_i
};

struct EvaluateOptions {
  // Outside a curve's sampled range quality is clamped; with this off an
  // out-of-range bitrate is an error instead.
  bool clamp_to_range = true;
};

// Expected bitrate and quality with analytic (right-hand) gradients. Under
// step smoothing the probability-shift terms vanish almost everywhere and
// are omitted.
ModelEvaluation evaluate(const Ladder& ladder, const ChunkRqModel& model, const ViewportDistribution& vd,
                         const BandwidthDistribution& bd, const EvaluateOptions& options = {});

// Precomputed form of the model for a fixed resolution list; the optimizer
// evaluates it for many bitrate vectors. Bitrates must be non-decreasing.
class PlayerModel {
 public:
  PlayerModel(const ChunkRqModel& model, std::vector<Pixels> resolutions, const ViewportDistribution& vd,
              const BandwidthDistribution& bd);

  std::size_t size() const noexcept { return curves_.size(); }
  std::span<const Pixels> resolutions() const noexcept { return resolutions_; }
  const BandwidthDistribution& bandwidth() const noexcept { return bd_; }

  void evaluate(std::span<const double> bitrates, ModelEvaluation& out, bool with_gradient = true) const;
  ModelEvaluation evaluate(std::span<const double> bitrates, bool with_gradient = true) const;

 private:
  std::vector<Pixels> resolutions_;
  std::vector<RateQualityCurve> curves_;
  // reach_[j] = P[entry j is eligible].
  std::vector<double> reach_;
  BandwidthDistribution bd_;
};

}  // namespace ladderopt
