#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ladderopt/rq_model.hpp"
#include "ladderopt/stats.hpp"

namespace ladderopt {

// Resolutions of every synthetic chunk, lowest to highest.
inline constexpr std::array<Pixels, 6> kSynthResolutions{144, 240, 360, 480, 720, 1080};

// One chunk of curves that are nearly straight in log-rate, higher
// resolutions steeper, with consecutive crossovers inside the sampled ranges
// so every resolution owns a stretch of the upper hull. `complexity` scales
// all rates (harder content needs more bits for the same quality). Each
// curve carries the 11-point CRF sweep plus a "crf23" sample.
ChunkRqModel synth_chunk(std::string chunk_id, double complexity, std::uint64_t seed);

// `chunks` chunks with log-uniform complexity in [0.5, 2].
std::vector<ChunkRqModel> synth_corpus(std::size_t chunks, std::uint64_t seed);

// Viewport shares loosely following a mobile-heavy audience.
ViewportDistribution synth_viewport_distribution();

// Playback records: log-normal bandwidth (median 3 Mbps, sigma 0.8, whole
// bits/s) and raw device heights drawn inside the snap bin of a height taken
// from synth_viewport_distribution().
std::vector<TraceRecord> synth_traces(std::size_t records, std::uint64_t seed);

}  // namespace ladderopt
