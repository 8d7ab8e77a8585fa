#include "ladderopt/io.hpp"

#include <zlib.h>

#include <atomic>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <unistd.h>

#include "ladderopt/error.hpp"

namespace ladderopt::io {

namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

class LineReader {
 public:
  explicit LineReader(const fs::path& path) {
    if (lower_ext(path) == ".gz") {
      gz_ = gzopen(path.c_str(), "rb");
      if (!gz_) throw Error("cannot open " + path.string());
      gzbuffer(gz_, 1 << 17);
    } else {
      in_.open(path, std::ios::binary);
      if (!in_) throw Error("cannot open " + path.string());
    }
  }
  ~LineReader() {
    if (gz_) gzclose(gz_);
  }
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  bool next(std::string& line) {
    if (!gz_) {
      if (!std::getline(in_, line)) return false;
      strip_cr(line);
      return true;
    }
    line.clear();
    char buf[8192];
    while (true) {
      if (!gzgets(gz_, buf, sizeof buf)) {
        int err = 0;
        const char* msg = gzerror(gz_, &err);
        if (err != Z_OK && err != Z_STREAM_END) throw Error(std::string("gzip read error: ") + msg);
        if (line.empty()) return false;
        break;
      }
      line += buf;
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        break;
      }
    }
    strip_cr(line);
    return true;
  }

 private:
  static void strip_cr(std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  }
  std::ifstream in_;
  gzFile gz_ = nullptr;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

template <typename T>
T get(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string(what) + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string(what) + ": field '" + key + "' has the wrong type");
  }
}

struct CsvColumns {
  int bandwidth = -1;
  int viewport = -1;
  int session = -1;
  int timestamp = -1;
  int weight = -1;
  std::size_t count = 0;
};

CsvColumns parse_header(std::string_view header) {
  CsvColumns c;
  int idx = 0;
  std::size_t start = 0;
  if (header.starts_with("\xEF\xBB\xBF")) start = 3;
  while (true) {
    const auto pos = header.find(',', start);
    const auto name = trim(header.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (name == "estimated_bandwidth_bps") c.bandwidth = idx;
    else if (name == "viewport_height") c.viewport = idx;
    else if (name == "session_id") c.session = idx;
    else if (name == "timestamp_ms") c.timestamp = idx;
    else if (name == "weight") c.weight = idx;
    ++idx;
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  c.count = static_cast<std::size_t>(idx);
  if (c.bandwidth < 0) throw ParseError("trace header lacks estimated_bandwidth_bps", 1);
  if (c.viewport < 0) throw ParseError("trace header lacks viewport_height", 1);
  return c;
}

std::optional<TraceRecord> parse_csv_row(std::string_view line, const CsvColumns& c,
                                         std::vector<std::string_view>& fields) {
  fields.clear();
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (fields.size() != c.count) return std::nullopt;
  TraceRecord r;
  const auto bw = parse_number<double>(fields[static_cast<std::size_t>(c.bandwidth)]);
  const auto vh = parse_number<double>(fields[static_cast<std::size_t>(c.viewport)]);
  if (!bw || !vh) return std::nullopt;
  r.estimated_bandwidth = *bw;
  r.viewport_height = *vh;
  if (c.session >= 0) {
    const auto s = trim(fields[static_cast<std::size_t>(c.session)]);
    if (!s.empty()) r.session_id = std::string(s);
  }
  if (c.timestamp >= 0) {
    const auto f = trim(fields[static_cast<std::size_t>(c.timestamp)]);
    if (!f.empty()) {
      const auto ts = parse_number<std::int64_t>(f);
      if (!ts) return std::nullopt;
      r.timestamp_ms = *ts;
    }
  }
  if (c.weight >= 0) {
    const auto f = trim(fields[static_cast<std::size_t>(c.weight)]);
    if (!f.empty()) {
      const auto w = parse_number<double>(f);
      if (!w) return std::nullopt;
      r.weight = *w;
    }
  }
  return r;
}

std::optional<TraceRecord> parse_json_row(std::string_view line) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  const auto bw = j.find("estimated_bandwidth_bps");
  const auto vh = j.find("viewport_height");
  if (bw == j.end() || vh == j.end() || !bw->is_number() || !vh->is_number()) return std::nullopt;
  TraceRecord r;
  r.estimated_bandwidth = bw->get<double>();
  r.viewport_height = vh->get<double>();
  if (const auto s = j.find("session_id"); s != j.end() && !s->is_null()) {
    if (s->is_string()) r.session_id = s->get<std::string>();
    else if (s->is_number()) r.session_id = s->dump();
    else return std::nullopt;
  }
  if (const auto t = j.find("timestamp_ms"); t != j.end() && !t->is_null()) {
    if (!t->is_number_integer()) return std::nullopt;
    r.timestamp_ms = t->get<std::int64_t>();
  }
  if (const auto w = j.find("weight"); w != j.end() && !w->is_null()) {
    if (!w->is_number()) return std::nullopt;
    r.weight = w->get<double>();
  }
  return r;
}

}  // namespace

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  static std::atomic<unsigned long> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void write_json(const fs::path& path, const json& value) { write_text_atomic(path, value.dump(2) + "\n"); }

ChunkRqModel chunk_from_json(const json& j, std::vector<std::string>* warnings) {
  const auto id = get<std::string>(j, "chunk_id", "chunk model");
  const auto source = get<int>(j, "source_resolution", "chunk model");
  if (!j.contains("curves") || !j["curves"].is_array()) throw ParseError("chunk model: 'curves' must be an array");
  std::vector<RateQualityCurve> curves;
  for (const auto& c : j["curves"]) {
    const auto res = get<int>(c, "resolution", "curve");
    if (!c.contains("samples") || !c["samples"].is_array()) throw ParseError("curve: 'samples' must be an array");
    std::vector<RqSample> samples;
    for (const auto& s : c["samples"]) {
      RqSample rs;
      rs.bitrate = get<double>(s, "bitrate", "sample");
      rs.quality = get<double>(s, "quality", "sample");
      if (s.contains("label") && !s["label"].is_null()) rs.label = get<std::string>(s, "label", "sample");
      samples.push_back(std::move(rs));
    }
    curves.push_back(RateQualityCurve::from_raw(res, std::move(samples), warnings));
  }
  return ChunkRqModel(id, source, std::move(curves));
}

json chunk_to_json(const ChunkRqModel& model) {
  json curves = json::array();
  for (const auto& [res, curve] : model.curves()) {
    json samples = json::array();
    for (std::size_t i = 0; i < curve.size(); ++i) {
      json s{{"bitrate", curve.bitrates()[i]}, {"quality", curve.qualities()[i]}};
      if (curve.labels()[i]) s["label"] = *curve.labels()[i];
      samples.push_back(std::move(s));
    }
    curves.push_back({{"resolution", res}, {"samples", std::move(samples)}});
  }
  return {{"schema_version", kSchemaVersion},
          {"chunk_id", model.chunk_id()},
          {"source_resolution", model.source_resolution()},
          {"curves", std::move(curves)}};
}

ChunkRqModel read_chunk(const fs::path& path, std::vector<std::string>* warnings) {
  try {
    return chunk_from_json(read_json(path), warnings);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

LadderFile ladder_from_json(const json& j) {
  const auto id = get<std::string>(j, "chunk_id", "ladder");
  if (!j.contains("entries") || !j["entries"].is_array()) throw ParseError("ladder: 'entries' must be an array");
  std::vector<LadderEntry> entries;
  for (const auto& e : j["entries"])
    entries.push_back({get<int>(e, "resolution", "ladder entry"), get<double>(e, "bitrate", "ladder entry")});
  return {id, Ladder::sorted(std::move(entries))};
}

json ladder_to_json(const std::string& chunk_id, const Ladder& ladder) {
  json entries = json::array();
  for (const auto& e : ladder.entries()) entries.push_back({{"resolution", e.resolution}, {"bitrate", e.bitrate}});
  return {{"schema_version", kSchemaVersion}, {"chunk_id", chunk_id}, {"entries", std::move(entries)}};
}

LadderFile read_ladder(const fs::path& path) {
  try {
    return ladder_from_json(read_json(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

json distributions_to_json(const ViewportDistribution& vd, const BandwidthDistribution& bd) {
  json pmf = json::array();
  for (const auto& [v, p] : vd.pmf()) pmf.push_back({{"height", v}, {"probability", p}});
  const auto support = bd.support();
  const auto cdf = bd.cdf_at_support();
  return {{"schema_version", kSchemaVersion},
          {"viewport", {{"pmf", std::move(pmf)}}},
          {"bandwidth",
           {{"smoothing", to_string(bd.smoothing())},
            {"support", std::vector<double>(support.begin(), support.end())},
            {"cdf", std::vector<double>(cdf.begin(), cdf.end())}}}};
}

Distributions distributions_from_json(const json& j) {
  if (!j.contains("viewport") || !j["viewport"].contains("pmf") || !j["viewport"]["pmf"].is_array())
    throw ParseError("distributions: missing viewport.pmf");
  std::map<Pixels, double> pmf;
  for (const auto& e : j["viewport"]["pmf"])
    pmf[get<int>(e, "height", "viewport pmf")] = get<double>(e, "probability", "viewport pmf");
  if (!j.contains("bandwidth")) throw ParseError("distributions: missing bandwidth");
  const auto& b = j["bandwidth"];
  auto support = get<std::vector<double>>(b, "support", "bandwidth");
  auto cdf = get<std::vector<double>>(b, "cdf", "bandwidth");
  const auto smoothing = b.contains("smoothing") ? parse_smoothing(get<std::string>(b, "smoothing", "bandwidth"))
                                                 : CdfSmoothing::piecewise_linear;
  return {ViewportDistribution(std::move(pmf)), BandwidthDistribution(std::move(support), std::move(cdf), smoothing)};
}

Distributions read_distributions(const fs::path& path) {
  try {
    return distributions_from_json(read_json(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

TraceFileStats read_traces(const fs::path& path, TraceAccumulator& acc) {
  fs::path inner = path;
  if (lower_ext(inner) == ".gz") inner = inner.stem();
  const auto ext = lower_ext(inner);
  const bool jsonl = ext == ".jsonl" || ext == ".ndjson";

  LineReader reader(path);
  TraceFileStats stats;
  std::string line;
  std::optional<CsvColumns> columns;
  std::vector<std::string_view> fields;
  std::size_t lineno = 0;
  while (reader.next(line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (!jsonl && !columns) {
      try {
        columns = parse_header(line);
      } catch (const ParseError&) {
        throw ParseError(path.string() + ": trace header lacks a required column", lineno);
      }
      continue;
    }
    ++stats.lines;
    const auto rec = jsonl ? parse_json_row(line) : parse_csv_row(line, *columns, fields);
    if (rec && acc.add(*rec)) {
      ++stats.valid;
    } else {
      if (!rec) acc.count_skip();
      ++stats.skipped;
    }
  }
  if (!jsonl && !columns) throw ParseError(path.string() + ": empty trace file (no header)", 1);
  return stats;
}

void write_traces_csv(const fs::path& path, const std::vector<TraceRecord>& records) {
  std::string out = "estimated_bandwidth_bps,viewport_height,session_id,timestamp_ms\n";
  out.reserve(records.size() * 40);
  char buf[64];
  for (const auto& r : records) {
    out.append(buf, std::to_chars(buf, buf + sizeof buf, r.estimated_bandwidth).ptr);
    out += ',';
    out.append(buf, std::to_chars(buf, buf + sizeof buf, r.viewport_height).ptr);
    out += ',';
    if (r.session_id) out += *r.session_id;
    out += ',';
    if (r.timestamp_ms) out += std::to_string(*r.timestamp_ms);
    out += '\n';
  }
  if (lower_ext(path) == ".gz") {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    gzFile gz = gzopen(tmp.c_str(), "wb6");
    if (!gz) throw Error("cannot write " + tmp.string());
    const bool ok = gzwrite(gz, out.data(), static_cast<unsigned>(out.size())) == static_cast<int>(out.size());
    gzclose(gz);
    if (!ok) throw Error("gzip write failed for " + tmp.string());
    fs::rename(tmp, path);
    return;
  }
  write_text_atomic(path, out);
}

json evaluation_to_json(const ModelEvaluation& e) {
  return {{"viewing_prob", e.viewing_prob},   {"fallback_prob", e.fallback_prob},
          {"avg_bitrate", e.avg_bitrate},     {"avg_quality", e.avg_quality},
          {"qualities", e.qualities},         {"grad_bitrate", e.grad_bitrate},
          {"grad_quality", e.grad_quality}};
}

json result_to_json(const std::string& chunk_id, const OptimizationResult& r) {
  json j{{"schema_version", kSchemaVersion},
         {"chunk_id", chunk_id},
         {"ladder", ladder_to_json(chunk_id, r.ladder)["entries"]},
         {"q0", r.q0},
         {"converged", r.converged},
         {"iterations", r.iterations},
         {"total_iterations", r.total_iterations},
         {"evaluations", r.evaluations},
         {"starts_tried", r.starts_tried},
         {"best_start", r.best_start},
         {"constraint_violation", r.constraint_violation},
         {"start_bitrate", r.start_bitrate},
         {"evaluation", evaluation_to_json(r.evaluation)},
         {"evaluation_step", evaluation_to_json(r.evaluation_step)},
         {"evaluation_linear", evaluation_to_json(r.evaluation_linear)}};
  if (!r.objective_history.empty()) j["objective_history"] = r.objective_history;
  return j;
}

json sim_report_to_json(const SimReport& r) {
  json ladder = json::array();
  for (const auto& e : r.ladder) ladder.push_back({{"resolution", e.resolution}, {"bitrate", e.bitrate}});
  json watch = json::array();
  for (const auto& [v, w] : r.watch_time_by_resolution) watch.push_back({{"resolution", v}, {"fraction", w}});
  return {{"schema_version", kSchemaVersion},
          {"chunk_id", r.chunk_id},
          {"ladder", std::move(ladder)},
          {"segments", r.segments},
          {"counts", r.counts},
          {"empirical_lambda", r.empirical_lambda},
          {"empirical_avg_bitrate", r.empirical_avg_bitrate},
          {"empirical_avg_quality", r.empirical_avg_quality},
          {"bitrate_std", r.bitrate_std},
          {"watch_time_by_resolution", std::move(watch)},
          {"switches", r.switches},
          {"switch_rate", r.switch_rate},
          {"fallback_segments", r.fallback_segments},
          {"fallback_fraction", r.fallback_fraction}};
}

json comparison_to_json(const ComparisonReport& c) {
  json comps = json::array();
  for (const auto& lc : c.comparisons) {
    json shift = json::array();
    for (const auto& [v, d] : lc.watch_time_shift) shift.push_back({{"resolution", v}, {"shift", d}});
    json entries = json::array();
    for (const auto& e : lc.entries)
      entries.push_back({{"resolution", e.resolution},
                         {"rank", e.rank},
                         {"baseline_bitrate", e.baseline_bitrate},
                         {"bitrate", e.bitrate},
                         {"relative_change", e.relative_change}});
    comps.push_back({{"name", lc.name},
                     {"relative_bitrate_change", lc.relative_bitrate_change},
                     {"quality_delta", lc.quality_delta},
                     {"watch_time_shift", std::move(shift)},
                     {"entries", std::move(entries)}});
  }
  return {{"schema_version", kSchemaVersion},
          {"chunk_id", c.chunk_id},
          {"baseline", c.baseline},
          {"comparisons", std::move(comps)}};
}

json region_to_json(const AchievableRegion& region) {
  json verts = json::array();
  for (const auto& v : region.vertices) verts.push_back({{"rate", v.rate}, {"quality", v.quality}});
  return {{"hull_vertices", std::move(verts)},
          {"rate_scale", region.rate_scale},
          {"quality_scale", region.quality_scale}};
}

}  // namespace ladderopt::io
