#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crowdact/box.hpp"

namespace crowdact {

/// Per-frame raster of scene-class ids from semantic segmentation.
struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> ids;  // row-major
  std::map<int, std::string> names;

  std::uint8_t at(int x, int y) const {
    return ids[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x)];
  }
  /// Throws InputError on bad dimensions or raster ids missing from `names`.
  void validate() const;
  /// Id registered for `name`; throws ConfigError if absent.
  int id_of(const std::string& name) const;
};

/// Reads a binary 8-bit P5 raster plus its `id=<int> name=<string>` sidecar.
LabelMask read_label_mask(const std::filesystem::path& pgm, const std::filesystem::path& names);

enum class OverlapRegion {
  kFullBox,
  // Bottom 20% of the box only.
  kFeet,
};

/// Fraction of pixels whose centers (x + 0.5, y + 0.5) fall inside the box
/// (half-open on the right and bottom, clipped to the mask) that carry
/// `label`. Empty clipped region -> 0.
double scene_overlap_ratio(const Box& b, const LabelMask& m, int label,
                           OverlapRegion region = OverlapRegion::kFullBox);

struct SceneRule {
  std::string scene;
  std::string action;
  double boost = 1.0;
  double damp = 1.0;
  OverlapRegion region = OverlapRegion::kFullBox;
  // Resolved index into the action label set.
  int action_index = -1;
};

struct GroupPair {
  std::string together;
  std::string alone;
  double tau = 0.0;
  double beta = 0.0;
  int together_index = -1;
  int alone_index = -1;
};

struct RuleSet {
  std::vector<SceneRule> scene_rules;
  std::vector<GroupPair> pairs;
};

/// Parses `scene=.. action=.. boost=.. damp=.. [region=full|feet]` and
/// `pair together=.. alone=.. tau=.. beta=..` lines ('#' starts a comment)
/// and resolves action names against `action_names`. Throws ConfigError.
RuleSet parse_rules(const std::string& text, const std::vector<std::string>& action_names);
RuleSet read_rules(const std::filesystem::path& path,
                   const std::vector<std::string>& action_names);

/// Scales each targeted class by damp + (boost - damp) * ratio, clamped to
/// [0, 1]. `ratios[i]` belongs to `rules[i]`.
ActionScoreVector scene_reweight(const ActionScoreVector& scores, std::span<const double> ratios,
                                 std::span<const SceneRule> rules);

/// Largest IoU between item `idx` and any other box of the frame.
double max_neighbor_iou(std::span<const Box> boxes, std::size_t idx);

/// When max_iou < tau, moves beta * together into alone. The transfer is
/// capped so alone stays <= 1, which keeps together + alone unchanged.
ActionScoreVector group_alone_reweight(const ActionScoreVector& scores, double max_iou,
                                       std::span<const GroupPair> pairs);

/// Applies scene rules then group pairs to every entry carrying action
/// scores. `mask` may be null only when there are no scene rules.
FrameDetections reweight_frame(const FrameDetections& frame, const RuleSet& rules,
                               const LabelMask* mask);

}  // namespace crowdact
