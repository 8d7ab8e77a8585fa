#pragma once

#include <string>
#include <string_view>
#include <utility>

#include "ladderopt/player_model.hpp"
#include "ladderopt/rq_model.hpp"

namespace ladderopt {

struct BaselineSpec {
  enum class Kind { fixed_label, hull_maximizing };
  Kind kind = Kind::fixed_label;
  std::string label = "crf23";
  Pixels low_anchor = 0;
  Pixels high_anchor = 0;

  // "fixed:crf23" or "hull:144:1080:crf23".
  static BaselineSpec parse(std::string_view text);
  std::string to_string() const;
  // Short name for file names and reports: "fixed" or "hull".
  std::string name() const;
};

// One entry per curve, at the sample carrying `label`.
Ladder fixed_label_ladder(const ChunkRqModel& model, std::string_view label);

// Entries for every resolution in [anchors.first, anchors.second]. Anchors
// sit at their `anchor_label` samples; each other resolution sits at the
// log-midpoint of its upper-hull interval, or, when dominated everywhere, at
// the point of its own range closest to the geometric mean of its
// neighbours. Bitrates that would break the ordering are pushed up just
// enough to restore it (within each curve's range).
Ladder hull_maximizing_ladder(const ChunkRqModel& model, std::pair<Pixels, Pixels> anchors,
                              std::string_view anchor_label);

Ladder make_baseline(const ChunkRqModel& model, const BaselineSpec& spec);

}  // namespace ladderopt
