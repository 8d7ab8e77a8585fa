#include "ladderopt/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace ladderopt {

namespace {

struct Line {
  Pixels resolution;
  double slope;      // quality per unit of ln(rate)
  double range_lo;   // lowest sampled rate at complexity 1
  double cross;      // rate where this line meets the next lower resolution's
};

// Highest resolution first; its anchor is 45 at 15 Mbps.
constexpr std::array<Line, 6> kLines{{
    {1080, 4.4, 500e3, 2.5e6},
    {720, 3.6, 200e3, 1.1e6},
    {480, 3.0, 100e3, 700e3},
    {360, 2.5, 70e3, 400e3},
    {240, 2.0, 40e3, 200e3},
    {144, 1.6, 20e3, 0.0},
}};

}  // namespace

ChunkRqModel synth_chunk(std::string chunk_id, double complexity, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.03);

  // Each line passes through (r0, q0); the next lower line starts from the
  // crossover point of this one.
  double r0 = 15e6;
  double q0 = 45.0;
  std::vector<RateQualityCurve> curves;
  const int extra[] = {23};
  for (const auto& line : kLines) {
    const double b = line.slope * std::exp(jitter(rng));
    const double lo = line.range_lo * complexity;
    const double knee = 0.05 * lo;
    SynthCurveParams p;
    p.b = b;
    p.knee = knee;
    p.a = q0 - b * std::log1p(r0 * complexity / knee);
    p.min_bitrate = lo;
    p.max_bitrate = 30.0 * lo;
    curves.push_back(synth_curve(line.resolution, p, extra));
    if (line.cross > 0.0) {
      q0 = p.a + b * std::log1p(line.cross * complexity / knee);
      r0 = line.cross;
    }
  }
  return ChunkRqModel(std::move(chunk_id), 1080, std::move(curves));
}

std::vector<ChunkRqModel> synth_corpus(std::size_t chunks, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_c(std::log(0.5), std::log(2.0));
  std::vector<ChunkRqModel> out;
  out.reserve(chunks);
  for (std::size_t i = 0; i < chunks; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "chunk_%03zu", i);
    const double c = std::exp(log_c(rng));
    out.push_back(synth_chunk(id, c, rng()));
  }
  return out;
}

ViewportDistribution synth_viewport_distribution() {
  return ViewportDistribution({{144, 0.02},
                               {240, 0.05},
                               {360, 0.18},
                               {480, 0.15},
                               {720, 0.28},
                               {1080, 0.22},
                               {1440, 0.06},
                               {2160, 0.04}});
}

std::vector<TraceRecord> synth_traces(std::size_t records, std::uint64_t seed) {
  const auto vd = synth_viewport_distribution();
  std::vector<Pixels> heights;
  std::vector<double> weights;
  for (const auto& [v, p] : vd.pmf()) {
    heights.push_back(v);
    weights.push_back(p);
  }
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::lognormal_distribution<double> bw(std::log(3e6), 0.8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<TraceRecord> out;
  out.reserve(records);
  for (std::size_t i = 0; i < records; ++i) {
    const std::size_t k = pick(rng);
    const double width = k + 1 < heights.size() ? heights[k + 1] - heights[k] : 240.0;
    TraceRecord r;
    r.viewport_height = std::floor(heights[k] + unit(rng) * width);
    r.estimated_bandwidth = std::max(1.0, std::round(bw(rng)));
    r.session_id = "s" + std::to_string(i / 50);
    r.timestamp_ms = static_cast<std::int64_t>(i % 50) * 5000;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ladderopt
