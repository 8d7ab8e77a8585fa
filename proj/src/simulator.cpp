#include "ladderopt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "ladderopt/error.hpp"

namespace ladderopt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-session stream; cheap to seed, which matters with one segment per session.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64(state_);
  }

 private:
  std::uint64_t state_;
};

struct Tally {
  std::vector<std::size_t> counts;
  std::size_t switches = 0;
  std::size_t fallbacks = 0;
};

class SessionRunner {
 public:
  SessionRunner(const Ladder& ladder, const ViewportDistribution& vd, const BandwidthDistribution& bd,
                const SimConfig& config)
      : ladder_(ladder), bd_(bd), config_(config) {
    double acc = 0.0;
    for (const auto& [v, p] : vd.pmf()) {
      acc += p;
      heights_.push_back(v);
      cumulative_.push_back(acc);
    }
  }

  void run(std::size_t first, std::size_t last, Tally& t) const {
    t.counts.assign(ladder_.size(), 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t s = first; s < last; ++s) {
      SplitMix64 rng(splitmix64(config_.seed ^ splitmix64(s)));
      const double uv = unit(rng) * cumulative_.back();
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), uv);
      if (it == cumulative_.end()) --it;
      const Pixels viewport = heights_[static_cast<std::size_t>(it - cumulative_.begin())];
      double bandwidth = bd_.quantile(unit(rng));
      std::size_t prev = ladder_.size();
      for (std::size_t k = 0; k < config_.segments_per_session; ++k) {
        if (k > 0 && config_.resample_bandwidth_per_segment) bandwidth = bd_.quantile(unit(rng));
        const auto sel = select_representation_detail(ladder_, viewport, bandwidth);
        ++t.counts[sel.index];
        if (sel.fallback) ++t.fallbacks;
        if (prev != ladder_.size() && prev != sel.index) ++t.switches;
        prev = sel.index;
      }
    }
  }

 private:
  const Ladder& ladder_;
  const BandwidthDistribution& bd_;
  const SimConfig& config_;
  std::vector<Pixels> heights_;
  std::vector<double> cumulative_;
};

}  // namespace

SimReport simulate(const Ladder& ladder, const ChunkRqModel& model, const ViewportDistribution& vd,
                   const BandwidthDistribution& bd, const SimConfig& config) {
  if (config.num_sessions == 0) throw ValidationError("simulation: num_sessions must be >= 1");
  if (config.segments_per_session == 0) throw ValidationError("simulation: segments_per_session must be >= 1");
  if (!(config.segment_duration > 0.0)) throw ValidationError("simulation: segment duration must be positive");
  check_ladder_resolutions(ladder, model);

  SessionRunner runner(ladder, vd, bd, config);
  const unsigned jobs =
      static_cast<unsigned>(std::clamp<std::size_t>(config.jobs == 0 ? 1 : config.jobs, 1, config.num_sessions));
  std::vector<Tally> tallies(jobs);
  if (jobs == 1) {
    runner.run(0, config.num_sessions, tallies[0]);
  } else {
    std::vector<std::thread> workers;
    for (unsigned j = 0; j < jobs; ++j) {
      const std::size_t first = config.num_sessions * j / jobs;
      const std::size_t last = config.num_sessions * (j + 1) / jobs;
      workers.emplace_back([&, first, last, j] { runner.run(first, last, tallies[j]); });
    }
    for (auto& w : workers) w.join();
  }

  SimReport rep;
  rep.chunk_id = model.chunk_id();
  rep.ladder.assign(ladder.entries().begin(), ladder.entries().end());
  rep.counts.assign(ladder.size(), 0);
  for (const auto& t : tallies) {
    for (std::size_t i = 0; i < ladder.size(); ++i) rep.counts[i] += t.counts[i];
    rep.switches += t.switches;
    rep.fallback_segments += t.fallbacks;
  }
  rep.segments = config.num_sessions * config.segments_per_session;
  const double total = static_cast<double>(rep.segments);

  double rate = 0.0;
  double rate2 = 0.0;
  double quality = 0.0;
  rep.empirical_lambda.resize(ladder.size());
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const double lam = static_cast<double>(rep.counts[i]) / total;
    const double r = ladder[i].bitrate;
    rep.empirical_lambda[i] = lam;
    rate += lam * r;
    rate2 += lam * r * r;
    quality += lam * eval_quality(model.curve(ladder[i].resolution), r);
    rep.watch_time_by_resolution[ladder[i].resolution] += lam;
  }
  rep.empirical_avg_bitrate = rate;
  rep.empirical_avg_quality = quality;
  rep.bitrate_std = std::sqrt(std::max(0.0, rate2 - rate * rate));
  const double hours = total * config.segment_duration / 3600.0;
  rep.switch_rate = static_cast<double>(rep.switches) / hours;
  rep.fallback_fraction = static_cast<double>(rep.fallback_segments) / total;
  return rep;
}

ComparisonReport compare(const std::map<std::string, SimReport>& reports, const std::string& baseline) {
  if (reports.size() < 2) throw ValidationError("compare: need at least two reports");
  const auto base_it = reports.find(baseline);
  if (base_it == reports.end()) throw ValidationError("compare: no report named '" + baseline + "'");
  const SimReport& base = base_it->second;
  for (const auto& [name, rep] : reports)
    if (rep.chunk_id != base.chunk_id)
      throw MismatchError("compare: report '" + name + "' is for chunk " + rep.chunk_id + ", expected " +
                          base.chunk_id);

  auto ranked = [](const std::vector<LadderEntry>& entries) {
    std::map<std::pair<Pixels, std::size_t>, BitsPerSecond> out;
    std::map<Pixels, std::size_t> seen;
    for (const auto& e : entries) out[{e.resolution, seen[e.resolution]++}] = e.bitrate;
    return out;
  };
  const auto base_entries = ranked(base.ladder);

  ComparisonReport out;
  out.chunk_id = base.chunk_id;
  out.baseline = baseline;
  for (const auto& [name, rep] : reports) {
    if (name == baseline) continue;
    LadderComparison c;
    c.name = name;
    c.relative_bitrate_change = rep.empirical_avg_bitrate / base.empirical_avg_bitrate - 1.0;
    c.quality_delta = rep.empirical_avg_quality - base.empirical_avg_quality;
    std::map<Pixels, double> shift;
    for (const auto& [v, w] : base.watch_time_by_resolution) shift[v] -= w;
    for (const auto& [v, w] : rep.watch_time_by_resolution) shift[v] += w;
    c.watch_time_shift = std::move(shift);
    for (const auto& [key, r] : ranked(rep.ladder)) {
      const auto b = base_entries.find(key);
      if (b == base_entries.end()) continue;
      c.entries.push_back({key.first, key.second, b->second, r, r / b->second - 1.0});
    }
    out.comparisons.push_back(std::move(c));
  }
  return out;
}

}  // namespace ladderopt
