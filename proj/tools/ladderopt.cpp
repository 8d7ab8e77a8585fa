// ladderopt: encoding ladder optimization from rate-quality samples and
// playback statistics.

#include <charconv>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ladderopt/error.hpp"
#include "ladderopt/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ladderopt;

namespace {

struct Globals {
  std::optional<std::string> output_dir;
  unsigned jobs = 0;
  std::optional<std::uint64_t> seed;

  unsigned job_count() const {
    if (jobs > 0) return jobs;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

RqPoint parse_point(const std::string& text) {
  const auto comma = text.find(',');
  double r = 0.0;
  double q = 0.0;
  const char* end = text.data() + text.size();
  if (comma == std::string::npos ||
      std::from_chars(text.data(), text.data() + comma, r).ptr != text.data() + comma ||
      std::from_chars(text.data() + comma + 1, end, q).ptr != end)
    throw ValidationError("bad point '" + text + "' (expected RATE,QUALITY)");
  return {r, q};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-chunk encoding ladder optimization"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--output-dir", g.output_dir, "Directory for outputs");
  app.add_option("--jobs", g.jobs, "Worker threads (default: all cores)");
  app.add_option("--seed", g.seed, "Seed for jittered starts, simulation and synthesis");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build viewport and bandwidth distributions from a trace file");
  std::string trace_path;
  std::string ingest_out;
  std::string ingest_smoothing = "linear";
  ingest->add_option("traces", trace_path, "Trace file (.csv, .jsonl, optionally .gz)")->required();
  ingest->add_option("-o,--output", ingest_out, "Distributions JSON (default: <output-dir>/distributions.json)");
  ingest->add_option("--cdf-smoothing", ingest_smoothing, "step|linear");

  // shared manifest overrides
  std::string manifest_path;
  std::string q0_text;
  std::optional<std::size_t> starts;
  std::optional<std::size_t> max_iters;
  std::optional<double> min_gap;
  std::optional<std::string> smoothing;
  std::vector<std::string> baselines;
  std::optional<std::size_t> sessions;
  std::optional<std::size_t> segments;
  std::optional<bool> resample;

  auto* optimize = app.add_subcommand("optimize", "Optimize every chunk of a manifest against its baselines");
  optimize->add_option("--manifest", manifest_path, "Run manifest JSON")->required();
  optimize->add_option("--q0", q0_text, "Quality floor: a number or 'auto' (baseline quality)");
  optimize->add_option("--starts", starts, "Jittered starts added to the baselines");
  optimize->add_option("--max-iters", max_iters, "Iteration budget per start");
  optimize->add_option("--min-gap-bps", min_gap, "Minimum bitrate gap between consecutive entries");
  optimize->add_option("--cdf-smoothing", smoothing, "step|linear CDF used while optimizing");
  optimize->add_option("--baseline", baselines, "fixed:<label> or hull:<lo>:<hi>:<label> (repeatable)");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo playback of ladder files");
  std::vector<std::string> ladder_files;
  sim->add_option("--manifest", manifest_path, "Run manifest JSON")->required();
  sim->add_option("ladders", ladder_files, "Ladder JSON files; the first per chunk is the comparison baseline")
      ->required();
  sim->add_option("--sessions", sessions, "Sessions per ladder");
  sim->add_option("--segments", segments, "Segments per session");
  sim->add_option("--resample-per-segment", resample, "Draw a new bandwidth for every segment (true|false)");

  auto* region = app.add_subcommand("region", "Achievable rate-quality region of a ladder");
  std::string chunk_path;
  std::string ladder_path;
  std::vector<std::string> point_texts;
  double tol = 1e-6;
  region->add_option("--chunk", chunk_path, "Chunk model JSON")->required();
  region->add_option("--ladder", ladder_path, "Ladder JSON")->required();
  region->add_option("--point", point_texts, "RATE,QUALITY to test for membership (repeatable)");
  region->add_option("--tol", tol, "Membership tolerance in normalized units");

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus, trace file and manifest");
  pipeline::SynthOptions synth_opts;
  synth->add_option("--chunks", synth_opts.chunks, "Number of chunks");
  synth->add_option("--records", synth_opts.records, "Number of trace records");
  synth->add_flag("--gzip", synth_opts.gzip, "Gzip the trace file");

  CLI11_PARSE(app, argc, argv);

  try {
    auto apply_manifest_overrides = [&](pipeline::RunManifest& m) {
      if (g.output_dir) m.output_dir = *g.output_dir;
      if (g.seed) {
        m.solver.seed = *g.seed;
        m.sim.seed = *g.seed;
      }
      if (!q0_text.empty()) {
        if (q0_text == "auto") {
          m.solver.q0.reset();
        } else {
          double q = 0.0;
          const char* end = q0_text.data() + q0_text.size();
          if (std::from_chars(q0_text.data(), end, q).ptr != end)
            throw ValidationError("--q0 must be a number or 'auto'");
          m.solver.q0 = q;
        }
      }
      if (starts) m.solver.starts = *starts;
      if (max_iters) m.solver.config.max_iters = *max_iters;
      if (min_gap) m.solver.min_gap = *min_gap;
      if (smoothing) m.solver.smoothing = parse_smoothing(*smoothing);
      if (!baselines.empty()) {
        m.baselines.clear();
        for (const auto& b : baselines) m.baselines.push_back(BaselineSpec::parse(b));
      }
      if (sessions) m.sim.num_sessions = *sessions;
      if (segments) m.sim.segments_per_session = *segments;
      if (resample) m.sim.resample_bandwidth_per_segment = *resample;
    };

    if (*ingest) {
      const fs::path out = !ingest_out.empty() ? fs::path(ingest_out)
                                               : fs::path(g.output_dir.value_or(".")) / "distributions.json";
      const auto s = pipeline::cmd_ingest(trace_path, out, parse_smoothing(ingest_smoothing));
      std::printf("records: %zu valid, %zu skipped; %zu bandwidth support points -> %s\n", s.stats.valid,
                  s.stats.skipped, s.support_points, out.string().c_str());
      return 0;
    }
    if (*optimize) {
      auto m = pipeline::RunManifest::load(manifest_path);
      apply_manifest_overrides(m);
      const auto rep = pipeline::cmd_optimize(m, g.job_count());
      for (const auto& a : rep.aggregates)
        std::printf("%s: %zu chunks, relative bitrate change %.4f%% (mean %.4f%%), mean quality delta %.3g\n",
                    a.baseline.c_str(), a.chunks, 100.0 * a.relative_change, 100.0 * a.mean_relative_change,
                    a.mean_quality_delta);
      std::size_t unconverged = 0;
      for (const auto& r : rep.rows) unconverged += r.converged ? 0 : 1;
      for (const auto& f : rep.failures)
        std::fprintf(stderr, "failed: %s %s: %s\n", f.chunk_id.c_str(), f.baseline.c_str(), f.message.c_str());
      if (unconverged > 0) std::fprintf(stderr, "%zu optimizations hit the iteration budget\n", unconverged);
      std::printf("report: %s\n", (m.output_dir / "corpus_report.json").string().c_str());
      return rep.all_converged() ? 0 : 2;
    }
    if (*sim) {
      auto m = pipeline::RunManifest::load(manifest_path);
      apply_manifest_overrides(m);
      std::vector<fs::path> paths(ladder_files.begin(), ladder_files.end());
      const auto out = pipeline::cmd_simulate(m, paths, g.job_count());
      for (const auto& r : out.reports)
        std::printf("%s: R=%.1f Q=%.4f switches/h=%.2f fallback=%.4f\n", r.chunk_id.c_str(), r.empirical_avg_bitrate,
                    r.empirical_avg_quality, r.switch_rate, r.fallback_fraction);
      for (const auto& c : out.comparisons)
        for (const auto& lc : c.comparisons)
          std::printf("%s: %s vs %s: bitrate %+.3f%%, quality %+.4f\n", c.chunk_id.c_str(), lc.name.c_str(),
                      c.baseline.c_str(), 100.0 * lc.relative_bitrate_change, lc.quality_delta);
      return 0;
    }
    if (*region) {
      std::vector<RqPoint> points;
      for (const auto& t : point_texts) points.push_back(parse_point(t));
      const fs::path out = g.output_dir.value_or(".");
      const auto res = pipeline::cmd_region(chunk_path, ladder_path, points, tol, out);
      std::printf("%zu hull vertices\n", res.region.vertices.size());
      for (const auto& v : res.verdicts)
        std::printf("(%g, %g): %s\n", v.point.rate, v.point.quality, v.inside ? "inside" : "outside");
      return 0;
    }
    if (*synth) {
      if (g.seed) synth_opts.seed = *g.seed;
      const auto manifest = pipeline::cmd_synth(g.output_dir.value_or("synthetic"), synth_opts);
      std::printf("manifest: %s\n", manifest.string().c_str());
      return 0;
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
