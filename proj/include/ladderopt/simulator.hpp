#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ladderopt/player_model.hpp"
#include "ladderopt/rq_model.hpp"
#include "ladderopt/stats.hpp"

namespace ladderopt {

struct SimConfig {
  std::size_t num_sessions = 2000;
  std::size_t segments_per_session = 500;
  double segment_duration = 5.0;  // seconds
  std::uint64_t seed = 1;
  bool resample_bandwidth_per_segment = true;
  unsigned jobs = 1;  // worker threads; results do not depend on it
};

struct SimReport {
  std::string chunk_id;
  std::vector<LadderEntry> ladder;
  std::size_t segments = 0;
  std::vector<std::size_t> counts;        // segment downloads per ladder entry
  std::vector<double> empirical_lambda;   // counts / segments
  double empirical_avg_bitrate = 0.0;     // sum lambda_i r_i
  double empirical_avg_quality = 0.0;     // sum lambda_i q_i
  double bitrate_std = 0.0;               // across segments
  std::map<Pixels, double> watch_time_by_resolution;
  std::size_t switches = 0;
  double switch_rate = 0.0;  // switches per session-hour
  std::size_t fallback_segments = 0;
  double fallback_fraction = 0.0;

  friend bool operator==(const SimReport&, const SimReport&) = default;
};

// Sessions draw one viewport each and a bandwidth per segment (or per
// session), then pick representations with select_representation. Bandwidth
// draws follow `bd`'s smoothing mode. Each session has its own generator
// derived from (seed, session index).
SimReport simulate(const Ladder& ladder, const ChunkRqModel& model, const ViewportDistribution& vd,
                   const BandwidthDistribution& bd, const SimConfig& config);

struct EntryChange {
  Pixels resolution = 0;
  std::size_t rank = 0;  // position among entries of the same resolution
  BitsPerSecond baseline_bitrate = 0.0;
  BitsPerSecond bitrate = 0.0;
  double relative_change = 0.0;  // r / r_baseline - 1
};

struct LadderComparison {
  std::string name;
  double relative_bitrate_change = 0.0;  // R / R_baseline - 1
  double quality_delta = 0.0;            // Q - Q_baseline
  std::map<Pixels, double> watch_time_shift;
  std::vector<EntryChange> entries;  // entries without a counterpart are left out
};

struct ComparisonReport {
  std::string chunk_id;
  std::string baseline;
  std::vector<LadderComparison> comparisons;  // every other report, by name
};

// Throws ValidationError with fewer than two reports or an unknown
// baseline, MismatchError when the reports come from different chunks.
ComparisonReport compare(const std::map<std::string, SimReport>& reports, const std::string& baseline);

}  // namespace ladderopt
