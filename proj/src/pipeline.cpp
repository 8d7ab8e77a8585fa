#include "ladderopt/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "ladderopt/error.hpp"
#include "ladderopt/region.hpp"
#include "ladderopt/synth.hpp"

namespace ladderopt::pipeline {

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
// thrown by any task is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> workers;
  for (unsigned j = 0; j < jobs; ++j) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

std::string num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

fs::path relative_to(const fs::path& p, const fs::path& base) {
  std::error_code ec;
  auto rel = fs::relative(p, base, ec);
  return ec || rel.empty() ? p : rel;
}

std::vector<std::string> unique_names(const std::vector<BaselineSpec>& specs) {
  std::map<std::string, int> seen;
  for (const auto& s : specs) ++seen[s.name()];
  std::map<std::string, int> used;
  std::vector<std::string> out;
  for (const auto& s : specs) {
    const auto base = s.name();
    out.push_back(seen[base] > 1 ? base + "_" + std::to_string(used[base]++) : base);
  }
  return out;
}

}  // namespace

RunManifest RunManifest::defaults() {
  RunManifest m;
  m.baselines = {BaselineSpec::parse("fixed:crf23"), BaselineSpec::parse("hull:144:1080:crf23")};
  return m;
}

RunManifest RunManifest::from_json(const io::json& j, const fs::path& base_dir) {
  RunManifest m = defaults();
  try {
    if (j.contains("chunks"))
      for (const auto& c : j.at("chunks")) m.chunks.push_back(resolve(base_dir, c.get<std::string>()));
    if (j.contains("traces") && !j["traces"].is_null()) m.traces = resolve(base_dir, j["traces"].get<std::string>());
    if (j.contains("distributions") && !j["distributions"].is_null())
      m.distributions = resolve(base_dir, j["distributions"].get<std::string>());
    if (j.contains("baselines")) {
      m.baselines.clear();
      for (const auto& b : j.at("baselines")) m.baselines.push_back(BaselineSpec::parse(b.get<std::string>()));
    }
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      if (s.contains("q0")) {
        if (s["q0"].is_number()) {
          m.solver.q0 = s["q0"].get<double>();
        } else if (!(s["q0"].is_string() && s["q0"].get<std::string>() == "auto") && !s["q0"].is_null()) {
          throw ParseError("manifest: solver.q0 must be a number or \"auto\"");
        }
      }
      if (s.contains("starts")) m.solver.starts = s["starts"].get<std::size_t>();
      if (s.contains("seed")) m.solver.seed = s["seed"].get<std::uint64_t>();
      if (s.contains("max_iters")) m.solver.config.max_iters = s["max_iters"].get<std::size_t>();
      if (s.contains("min_gap_bps")) m.solver.min_gap = s["min_gap_bps"].get<double>();
      if (s.contains("cdf_smoothing")) m.solver.smoothing = parse_smoothing(s["cdf_smoothing"].get<std::string>());
    }
    if (j.contains("simulation")) {
      const auto& s = j["simulation"];
      if (s.contains("sessions")) m.sim.num_sessions = s["sessions"].get<std::size_t>();
      if (s.contains("segments")) m.sim.segments_per_session = s["segments"].get<std::size_t>();
      if (s.contains("segment_duration")) m.sim.segment_duration = s["segment_duration"].get<double>();
      if (s.contains("seed")) m.sim.seed = s["seed"].get<std::uint64_t>();
      if (s.contains("resample_per_segment")) m.sim.resample_bandwidth_per_segment = s["resample_per_segment"].get<bool>();
    }
    if (j.contains("output_dir")) m.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    else m.output_dir = base_dir / "results";
  } catch (const io::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return m;
}

RunManifest RunManifest::load(const fs::path& path) {
  auto m = from_json(io::read_json(path), path.parent_path().empty() ? fs::path(".") : path.parent_path());
  m.check_inputs();
  return m;
}

void RunManifest::check_inputs() const {
  std::vector<fs::path> all = chunks;
  if (traces) all.push_back(*traces);
  if (distributions) all.push_back(*distributions);
  for (const auto& p : all)
    if (!fs::exists(p)) throw Error("manifest input does not exist: " + p.string());
}

io::json RunManifest::to_json(const fs::path& base_dir) const {
  io::json chunk_list = io::json::array();
  for (const auto& c : chunks) chunk_list.push_back(relative_to(c, base_dir).generic_string());
  io::json baseline_list = io::json::array();
  for (const auto& b : baselines) baseline_list.push_back(b.to_string());
  io::json j{{"schema_version", io::kSchemaVersion},
             {"chunks", std::move(chunk_list)},
             {"baselines", std::move(baseline_list)},
             {"solver",
              {{"q0", solver.q0 ? io::json(*solver.q0) : io::json("auto")},
               {"starts", solver.starts},
               {"seed", solver.seed},
               {"max_iters", solver.config.max_iters},
               {"min_gap_bps", solver.min_gap},
               {"cdf_smoothing", to_string(solver.smoothing)}}},
             {"simulation",
              {{"sessions", sim.num_sessions},
               {"segments", sim.segments_per_session},
               {"segment_duration", sim.segment_duration},
               {"seed", sim.seed},
               {"resample_per_segment", sim.resample_bandwidth_per_segment}}},
             {"output_dir", relative_to(output_dir, base_dir).generic_string()}};
  if (traces) j["traces"] = relative_to(*traces, base_dir).generic_string();
  if (distributions) j["distributions"] = relative_to(*distributions, base_dir).generic_string();
  return j;
}

IngestSummary cmd_ingest(const fs::path& traces, const fs::path& output, CdfSmoothing smoothing) {
  TraceAccumulator acc;
  IngestSummary s;
  s.stats = io::read_traces(traces, acc);
  auto [vd, bd] = acc.finish(smoothing);
  s.support_points = bd.support().size();
  auto j = io::distributions_to_json(vd, bd);
  j["records"] = {{"valid", s.stats.valid}, {"skipped", s.stats.skipped}};
  io::write_json(output, j);
  return s;
}

bool CorpusReport::all_converged() const {
  return failures.empty() && std::all_of(rows.begin(), rows.end(), [](const ChunkRow& r) { return r.converged; });
}

double quantile7(std::vector<double> values, double p) {
  if (values.empty()) throw EmptyInputError("quantile of no values");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

CorpusReport build_report(std::vector<ChunkRow> rows, std::vector<Failure> failures) {
  CorpusReport rep;
  rep.rows = std::move(rows);
  rep.failures = std::move(failures);
  std::vector<std::string> order;
  for (const auto& r : rep.rows)
    if (std::find(order.begin(), order.end(), r.baseline) == order.end()) order.push_back(r.baseline);
  for (const auto& name : order) {
    BaselineAggregate agg;
    agg.baseline = name;
    double sum_rel = 0.0;
    double sum_dq = 0.0;
    agg.min_quality_delta = std::numeric_limits<double>::infinity();
    std::map<Pixels, std::vector<double>> changes;
    for (const auto& r : rep.rows) {
      if (r.baseline != name) continue;
      ++agg.chunks;
      agg.total_baseline_bitrate += r.baseline_bitrate;
      agg.total_optimized_bitrate += r.optimized_bitrate;
      sum_rel += r.relative_change;
      sum_dq += r.quality_delta;
      agg.min_quality_delta = std::min(agg.min_quality_delta, r.quality_delta);
      for (const auto& [v, c] : r.entry_changes) changes[v].push_back(c);
    }
    agg.relative_change = agg.total_optimized_bitrate / agg.total_baseline_bitrate - 1.0;
    agg.mean_relative_change = sum_rel / static_cast<double>(agg.chunks);
    agg.mean_quality_delta = sum_dq / static_cast<double>(agg.chunks);
    for (const auto& [v, c] : changes) {
      agg.quartiles.push_back({v, c.size(), *std::min_element(c.begin(), c.end()), quantile7(c, 0.25),
                               quantile7(c, 0.5), quantile7(c, 0.75), *std::max_element(c.begin(), c.end())});
    }
    rep.aggregates.push_back(std::move(agg));
  }
  return rep;
}

io::json report_to_json(const CorpusReport& report) {
  io::json rows = io::json::array();
  for (const auto& r : report.rows) {
    io::json changes = io::json::array();
    for (const auto& [v, c] : r.entry_changes) changes.push_back({{"resolution", v}, {"relative_change", c}});
    rows.push_back({{"chunk_id", r.chunk_id},
                    {"baseline", r.baseline},
                    {"q0", r.q0},
                    {"baseline_bitrate", r.baseline_bitrate},
                    {"baseline_quality", r.baseline_quality},
                    {"optimized_bitrate", r.optimized_bitrate},
                    {"optimized_quality", r.optimized_quality},
                    {"optimized_bitrate_step", r.optimized_bitrate_step},
                    {"optimized_quality_step", r.optimized_quality_step},
                    {"relative_change", r.relative_change},
                    {"quality_delta", r.quality_delta},
                    {"converged", r.converged},
                    {"iterations", r.iterations},
                    {"entry_changes", std::move(changes)}});
  }
  io::json aggs = io::json::array();
  for (const auto& a : report.aggregates) {
    io::json q = io::json::array();
    for (const auto& x : a.quartiles)
      q.push_back({{"resolution", x.resolution},
                   {"n", x.n},
                   {"min", x.min},
                   {"q1", x.q1},
                   {"median", x.median},
                   {"q3", x.q3},
                   {"max", x.max}});
    aggs.push_back({{"baseline", a.baseline},
                    {"chunks", a.chunks},
                    {"total_baseline_bitrate", a.total_baseline_bitrate},
                    {"total_optimized_bitrate", a.total_optimized_bitrate},
                    {"relative_change", a.relative_change},
                    {"mean_relative_change", a.mean_relative_change},
                    {"mean_quality_delta", a.mean_quality_delta},
                    {"min_quality_delta", a.min_quality_delta},
                    {"quartiles", std::move(q)}});
  }
  io::json fails = io::json::array();
  for (const auto& f : report.failures)
    fails.push_back({{"chunk_id", f.chunk_id}, {"baseline", f.baseline}, {"message", f.message}});
  return {{"schema_version", io::kSchemaVersion},
          {"rows", std::move(rows)},
          {"aggregates", std::move(aggs)},
          {"failures", std::move(fails)},
          {"all_converged", report.all_converged()}};
}

ChunkOutcome optimize_chunk(const ChunkRqModel& model, const ViewportDistribution& vd,
                            const BandwidthDistribution& bd, const RunManifest& manifest, const fs::path& out_dir) {
  ChunkOutcome out;
  const auto bd_opt = bd.with_smoothing(manifest.solver.smoothing);
  const auto names = unique_names(manifest.baselines);

  std::vector<std::optional<Ladder>> ladders;
  for (std::size_t b = 0; b < manifest.baselines.size(); ++b) {
    try {
      ladders.emplace_back(make_baseline(model, manifest.baselines[b]));
      io::write_json(out_dir / ("baseline_" + names[b] + ".json"), io::ladder_to_json(model.chunk_id(), *ladders.back()));
    } catch (const Error& e) {
      ladders.emplace_back();
      out.failures.push_back({model.chunk_id(), manifest.baselines[b].to_string(), e.what()});
    }
  }

  for (std::size_t b = 0; b < ladders.size(); ++b) {
    if (!ladders[b]) continue;
    const Ladder& base = *ladders[b];
    const auto spec = manifest.baselines[b].to_string();
    try {
      const auto resolutions = base.resolutions();
      const PlayerModel pm(model, resolutions, vd, bd_opt);
      const auto base_eval = pm.evaluate(base.bitrates(), false);
      const double q0 = manifest.solver.q0.value_or(base_eval.avg_quality);
      const OptimizationProblem problem(model, resolutions, vd, bd_opt, q0, manifest.solver.min_gap);

      std::vector<Ladder> seeds{base};
      for (std::size_t o = 0; o < ladders.size(); ++o)
        if (o != b && ladders[o] && ladders[o]->resolutions() == resolutions) seeds.push_back(*ladders[o]);
      const auto starts = default_starts(problem, seeds, manifest.solver.starts, manifest.solver.seed);
      const auto res = solve(problem, starts, manifest.solver.config);

      auto rj = io::result_to_json(model.chunk_id(), res);
      rj["baseline"] = spec;
      rj["baseline_evaluation"] = io::evaluation_to_json(base_eval);
      io::write_json(out_dir / ("result_" + names[b] + ".json"), rj);
      io::write_json(out_dir / ("optimized_" + names[b] + ".json"), io::ladder_to_json(model.chunk_id(), res.ladder));

      ChunkRow row;
      row.chunk_id = model.chunk_id();
      row.baseline = spec;
      row.q0 = q0;
      row.baseline_bitrate = base_eval.avg_bitrate;
      row.baseline_quality = base_eval.avg_quality;
      row.optimized_bitrate = res.evaluation.avg_bitrate;
      row.optimized_quality = res.evaluation.avg_quality;
      row.optimized_bitrate_step = res.evaluation_step.avg_bitrate;
      row.optimized_quality_step = res.evaluation_step.avg_quality;
      row.relative_change = row.optimized_bitrate / row.baseline_bitrate - 1.0;
      row.quality_delta = row.optimized_quality - row.baseline_quality;
      row.converged = res.converged;
      row.iterations = res.iterations;
      for (std::size_t i = 0; i < base.size(); ++i)
        row.entry_changes.emplace_back(base[i].resolution, res.ladder[i].bitrate / base[i].bitrate - 1.0);
      out.rows.push_back(std::move(row));
    } catch (const Error& e) {
      out.failures.push_back({model.chunk_id(), spec, e.what()});
    }
  }
  return out;
}

io::Distributions load_distributions(const RunManifest& manifest) {
  if (manifest.distributions) return io::read_distributions(*manifest.distributions);
  if (!manifest.traces) throw Error("manifest names neither traces nor distributions");
  TraceAccumulator acc;
  io::read_traces(*manifest.traces, acc);
  auto [vd, bd] = acc.finish(manifest.solver.smoothing);
  return {std::move(vd), std::move(bd)};
}

CorpusReport cmd_optimize(const RunManifest& manifest, unsigned jobs) {
  manifest.check_inputs();
  const auto dist = load_distributions(manifest);
  std::vector<ChunkOutcome> outcomes(manifest.chunks.size());
  parallel_for(manifest.chunks.size(), jobs, [&](std::size_t i) {
    const auto& path = manifest.chunks[i];
    try {
      const auto model = io::read_chunk(path);
      outcomes[i] = optimize_chunk(model, dist.viewport, dist.bandwidth, manifest,
                                   manifest.output_dir / "chunks" / model.chunk_id());
    } catch (const Error& e) {
      outcomes[i].failures.push_back({path.stem().string(), "", e.what()});
    }
  });

  std::vector<ChunkRow> rows;
  std::vector<Failure> failures;
  for (auto& o : outcomes) {
    for (auto& r : o.rows) rows.push_back(std::move(r));
    for (auto& f : o.failures) failures.push_back(std::move(f));
  }
  auto report = build_report(std::move(rows), std::move(failures));

  std::string csv =
      "chunk_id,baseline,q0,baseline_bitrate,baseline_quality,optimized_bitrate,optimized_quality,"
      "optimized_bitrate_step,optimized_quality_step,relative_change,quality_delta,converged,iterations\n";
  for (const auto& r : report.rows) {
    csv += r.chunk_id + "," + r.baseline + "," + num(r.q0) + "," + num(r.baseline_bitrate) + "," +
           num(r.baseline_quality) + "," + num(r.optimized_bitrate) + "," + num(r.optimized_quality) + "," +
           num(r.optimized_bitrate_step) + "," + num(r.optimized_quality_step) + "," + num(r.relative_change) + "," +
           num(r.quality_delta) + "," + (r.converged ? "true" : "false") + "," + std::to_string(r.iterations) + "\n";
  }
  io::write_text_atomic(manifest.output_dir / "corpus.csv", csv);

  std::string qcsv = "baseline,resolution,n,min,q1,median,q3,max\n";
  for (const auto& a : report.aggregates)
    for (const auto& q : a.quartiles)
      qcsv += a.baseline + "," + std::to_string(q.resolution) + "," + std::to_string(q.n) + "," + num(q.min) + "," +
              num(q.q1) + "," + num(q.median) + "," + num(q.q3) + "," + num(q.max) + "\n";
  io::write_text_atomic(manifest.output_dir / "quartiles.csv", qcsv);
  io::write_json(manifest.output_dir / "corpus_report.json", report_to_json(report));
  return report;
}

SimulateOutcome cmd_simulate(const RunManifest& manifest, const std::vector<fs::path>& ladders, unsigned jobs) {
  manifest.check_inputs();
  if (ladders.empty()) throw ValidationError("simulate: no ladder files given");
  const auto dist = load_distributions(manifest);
  const auto bd_step = dist.bandwidth.with_smoothing(CdfSmoothing::step);

  std::map<std::string, ChunkRqModel> models;
  for (const auto& p : manifest.chunks) {
    auto m = io::read_chunk(p);
    models.emplace(m.chunk_id(), std::move(m));
  }

  struct Job {
    std::string name;
    io::LadderFile file;
  };
  std::vector<Job> work;
  std::map<std::string, std::set<std::string>> names;
  for (const auto& p : ladders) {
    auto lf = io::read_ladder(p);
    const auto it = models.find(lf.chunk_id);
    if (it == models.end()) throw MismatchError(p.string() + ": chunk " + lf.chunk_id + " is not in the manifest");
    try {
      check_ladder_resolutions(lf.ladder, it->second);
    } catch (const ValidationError& e) {
      throw MismatchError(p.string() + ": " + e.what());
    }
    std::string name = p.stem().string();
    for (int k = 1; names[lf.chunk_id].contains(name); ++k) name = p.stem().string() + "_" + std::to_string(k);
    names[lf.chunk_id].insert(name);
    work.push_back({name, std::move(lf)});
  }

  SimConfig cfg = manifest.sim;
  cfg.jobs = std::max(1u, jobs);
  SimulateOutcome out;
  std::map<std::string, std::vector<std::pair<std::string, SimReport>>> by_chunk;
  for (const auto& job : work) {
    const auto& model = models.at(job.file.chunk_id);
    auto rep = simulate(job.file.ladder, model, dist.viewport, bd_step, cfg);
    const auto analytic = viewing_probabilities(job.file.ladder, dist.viewport, bd_step);
    auto j = io::sim_report_to_json(rep);
    j["name"] = job.name;
    io::json table = io::json::array();
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double diff = rep.empirical_lambda[i] - analytic[i];
      worst = std::max(worst, std::abs(diff));
      table.push_back({{"resolution", job.file.ladder[i].resolution},
                       {"bitrate", job.file.ladder[i].bitrate},
                       {"analytic", analytic[i]},
                       {"empirical", rep.empirical_lambda[i]},
                       {"difference", diff}});
    }
    j["lambda_check"] = {{"entries", std::move(table)}, {"max_abs_difference", worst}};
    io::write_json(manifest.output_dir / "simulation" / job.file.chunk_id / (job.name + ".json"), j);
    by_chunk[job.file.chunk_id].emplace_back(job.name, rep);
    out.reports.push_back(std::move(rep));
  }
  for (const auto& [chunk, reps] : by_chunk) {
    if (reps.size() < 2) continue;
    std::map<std::string, SimReport> m(reps.begin(), reps.end());
    auto cmp = compare(m, reps.front().first);
    io::write_json(manifest.output_dir / "simulation" / chunk / "comparison.json", io::comparison_to_json(cmp));
    out.comparisons.push_back(std::move(cmp));
  }
  return out;
}

RegionOutcome cmd_region(const fs::path& chunk, const fs::path& ladder, const std::vector<RqPoint>& points,
                         double tol, const fs::path& output_dir) {
  const auto model = io::read_chunk(chunk);
  const auto lf = io::read_ladder(ladder);
  if (lf.chunk_id != model.chunk_id())
    throw MismatchError("ladder is for chunk " + lf.chunk_id + " but the model is " + model.chunk_id());
  check_ladder_resolutions(lf.ladder, model);

  std::vector<RqPoint> ops;
  for (const auto& e : lf.ladder.entries())
    ops.push_back({e.bitrate, eval_quality(model.curve(e.resolution), e.bitrate)});
  RegionOutcome out{achievable_region(ops), {}};
  for (const auto& p : points) out.verdicts.push_back({p, contains(out.region, p, tol)});

  auto j = io::region_to_json(out.region);
  j["schema_version"] = io::kSchemaVersion;
  j["chunk_id"] = model.chunk_id();
  j["tolerance"] = tol;
  io::json op = io::json::array();
  for (const auto& p : ops) op.push_back({{"rate", p.rate}, {"quality", p.quality}});
  j["operating_points"] = std::move(op);
  io::json verdicts = io::json::array();
  for (const auto& v : out.verdicts)
    verdicts.push_back({{"rate", v.point.rate}, {"quality", v.point.quality}, {"inside", v.inside}});
  j["verdicts"] = std::move(verdicts);
  io::write_json(output_dir / "region.json", j);

  std::string csv = "series,rate,quality\n";
  auto row = [&](const std::string& series, double r, double q) { csv += series + "," + num(r) + "," + num(q) + "\n"; };
  for (const auto& [res, curve] : model.curves())
    for (std::size_t i = 0; i < curve.size(); ++i) row("curve_" + std::to_string(res), curve.bitrates()[i], curve.qualities()[i]);
  for (const auto& v : upper_hull(model.curves()).vertices) row("upper_hull", v.point.rate, v.point.quality);
  for (const auto& p : ops) row("ladder", p.rate, p.quality);
  for (const auto& v : out.region.vertices) row("region", v.rate, v.quality);
  if (!out.region.vertices.empty()) row("region", out.region.vertices.front().rate, out.region.vertices.front().quality);
  for (const auto& v : out.verdicts) row(v.inside ? "query_inside" : "query_outside", v.point.rate, v.point.quality);
  io::write_text_atomic(output_dir / "region.csv", csv);
  return out;
}

fs::path cmd_synth(const fs::path& output_dir, const SynthOptions& options) {
  fs::create_directories(output_dir / "chunks");
  RunManifest m = RunManifest::defaults();
  for (const auto& model : synth_corpus(options.chunks, options.seed)) {
    const auto path = output_dir / "chunks" / (model.chunk_id() + ".json");
    io::write_json(path, io::chunk_to_json(model));
    m.chunks.push_back(path);
  }
  const auto traces = output_dir / (options.gzip ? "traces.csv.gz" : "traces.csv");
  io::write_traces_csv(traces, synth_traces(options.records, options.seed + 1));
  m.traces = traces;
  m.output_dir = output_dir / "results";
  const auto manifest = output_dir / "manifest.json";
  io::write_json(manifest, m.to_json(output_dir));
  return manifest;
}

}  // namespace ladderopt::pipeline
