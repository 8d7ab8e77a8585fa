#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ladderopt/baselines.hpp"
#include "ladderopt/io.hpp"
#include "ladderopt/optimizer.hpp"
#include "ladderopt/simulator.hpp"

namespace ladderopt::pipeline {

namespace fs = std::filesystem;

struct SolverOptions {
  std::optional<double> q0;  // empty: the quality of the baseline being compared against
  std::size_t starts = 10;   // jittered starts on top of the baselines
  std::uint64_t seed = 1;
  double min_gap = kDefaultMinGap;
  CdfSmoothing smoothing = CdfSmoothing::piecewise_linear;
  SolverConfig config;
};

struct RunManifest {
  std::vector<fs::path> chunks;
  std::optional<fs::path> traces;
  std::optional<fs::path> distributions;
  std::vector<BaselineSpec> baselines;
  SolverOptions solver;
  SimConfig sim;
  fs::path output_dir = "results";

  static RunManifest defaults();
  // Relative paths resolve against the manifest's directory. Throws when a
  // referenced input does not exist.
  static RunManifest load(const fs::path& path);
  static RunManifest from_json(const io::json& j, const fs::path& base_dir);
  // Paths are written relative to `base_dir` when possible.
  io::json to_json(const fs::path& base_dir) const;
  void check_inputs() const;
};

struct IngestSummary {
  io::TraceFileStats stats;
  std::size_t support_points = 0;
};

IngestSummary cmd_ingest(const fs::path& traces, const fs::path& output, CdfSmoothing smoothing);

struct ChunkRow {
  std::string chunk_id;
  std::string baseline;  // BaselineSpec::to_string()
  double q0 = 0.0;
  double baseline_bitrate = 0.0;
  double baseline_quality = 0.0;
  double optimized_bitrate = 0.0;
  double optimized_quality = 0.0;
  double optimized_bitrate_step = 0.0;
  double optimized_quality_step = 0.0;
  double relative_change = 0.0;  // optimized / baseline - 1
  double quality_delta = 0.0;    // optimized - baseline
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<std::pair<Pixels, double>> entry_changes;  // r*/r0 - 1 per entry
};

struct Quartiles {
  Pixels resolution = 0;
  std::size_t n = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

struct BaselineAggregate {
  std::string baseline;
  std::size_t chunks = 0;
  double total_baseline_bitrate = 0.0;
  double total_optimized_bitrate = 0.0;
  double relative_change = 0.0;  // total optimized / total baseline - 1
  double mean_relative_change = 0.0;
  double mean_quality_delta = 0.0;
  double min_quality_delta = 0.0;
  std::vector<Quartiles> quartiles;  // r*/r0 - 1 by resolution
};

struct Failure {
  std::string chunk_id;
  std::string baseline;
  std::string message;
};

struct CorpusReport {
  std::vector<ChunkRow> rows;
  std::vector<BaselineAggregate> aggregates;
  std::vector<Failure> failures;
  bool all_converged() const;
};

// Type-7 (linear interpolation) sample quantile of unsorted data.
double quantile7(std::vector<double> values, double p);

// Aggregates are always recomputed from the rows.
CorpusReport build_report(std::vector<ChunkRow> rows, std::vector<Failure> failures);
io::json report_to_json(const CorpusReport& report);

struct ChunkOutcome {
  std::vector<ChunkRow> rows;
  std::vector<Failure> failures;
};

// One optimization per baseline: Q0 is the baseline's own quality unless
// fixed, and every baseline with the same resolutions serves as a start.
// Writes results, baseline and optimized ladders under `out_dir`.
ChunkOutcome optimize_chunk(const ChunkRqModel& model, const ViewportDistribution& vd,
                            const BandwidthDistribution& bd, const RunManifest& manifest, const fs::path& out_dir);

io::Distributions load_distributions(const RunManifest& manifest);

CorpusReport cmd_optimize(const RunManifest& manifest, unsigned jobs);

struct SimulateOutcome {
  std::vector<SimReport> reports;
  std::vector<ComparisonReport> comparisons;
};

// Each ladder file names its chunk; reports go to <output>/simulation/<chunk>/.
// With two or more ladders for a chunk the first one is the comparison
// baseline.
SimulateOutcome cmd_simulate(const RunManifest& manifest, const std::vector<fs::path>& ladders, unsigned jobs);

struct RegionVerdict {
  RqPoint point;
  bool inside = false;
};

struct RegionOutcome {
  AchievableRegion region;
  std::vector<RegionVerdict> verdicts;
};

// region.json (hull vertices and verdicts) and region.csv (series,rate,quality)
// for the ladder's operating points.
RegionOutcome cmd_region(const fs::path& chunk, const fs::path& ladder, const std::vector<RqPoint>& points,
                         double tol, const fs::path& output_dir);

struct SynthOptions {
  std::size_t chunks = 20;
  std::size_t records = 100000;
  std::uint64_t seed = 1;
  bool gzip = false;
};

// Writes chunks/*.json, a trace file and manifest.json under `output_dir`.
fs::path cmd_synth(const fs::path& output_dir, const SynthOptions& options);

}  // namespace ladderopt::pipeline
