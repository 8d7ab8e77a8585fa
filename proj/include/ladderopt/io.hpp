#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ladderopt/optimizer.hpp"
#include "ladderopt/player_model.hpp"
#include "ladderopt/region.hpp"
#include "ladderopt/rq_model.hpp"
#include "ladderopt/simulator.hpp"
#include "ladderopt/stats.hpp"

namespace ladderopt::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

// Throws ParseError on malformed content.
json read_json(const fs::path& path);
// Writes to a temporary file next to `path`, then renames it into place.
void write_text_atomic(const fs::path& path, const std::string& text);
void write_json(const fs::path& path, const json& value);

// Chunk model: {chunk_id, source_resolution, curves: [{resolution, samples: [{bitrate, quality, label?}]}]}.
// Curves go through RateQualityCurve::from_raw, so repairs land in `warnings`.
ChunkRqModel chunk_from_json(const json& j, std::vector<std::string>* warnings = nullptr);
json chunk_to_json(const ChunkRqModel& model);
ChunkRqModel read_chunk(const fs::path& path, std::vector<std::string>* warnings = nullptr);

struct LadderFile {
  std::string chunk_id;
  Ladder ladder;
};
// {chunk_id, entries: [{resolution, bitrate}]}; entries are sorted on read.
LadderFile ladder_from_json(const json& j);
json ladder_to_json(const std::string& chunk_id, const Ladder& ladder);
LadderFile read_ladder(const fs::path& path);

struct Distributions {
  ViewportDistribution viewport;
  BandwidthDistribution bandwidth;
};
json distributions_to_json(const ViewportDistribution& vd, const BandwidthDistribution& bd);
Distributions distributions_from_json(const json& j);
Distributions read_distributions(const fs::path& path);

struct TraceFileStats {
  std::size_t lines = 0;  // data lines seen, blank lines excluded
  std::size_t valid = 0;
  std::size_t skipped = 0;
};

// Streams a trace file into `acc`. CSV (header row naming
// estimated_bandwidth_bps and viewport_height, optionally session_id,
// timestamp_ms, weight) or JSON lines with the same keys, picked by
// extension (.jsonl / .ndjson, otherwise CSV); a trailing .gz means gzip.
// Unparsable rows are counted as skipped. Missing columns or an unreadable
// file raise ParseError / Error.
TraceFileStats read_traces(const fs::path& path, TraceAccumulator& acc);
void write_traces_csv(const fs::path& path, const std::vector<TraceRecord>& records);

json evaluation_to_json(const ModelEvaluation& e);
json result_to_json(const std::string& chunk_id, const OptimizationResult& r);
json sim_report_to_json(const SimReport& r);
json comparison_to_json(const ComparisonReport& c);
json region_to_json(const AchievableRegion& region);

}  // namespace ladderopt::io
