#pragma once

#include <span>
#include <utility>
#include <vector>

#include "crowdact/box.hpp"

namespace crowdact {

/// Weighted arithmetic mean per class; weights are normalized to sum to 1.
/// Throws InputError on length mismatch, negative or all-zero weights.
ActionScoreVector average_scores(std::span<const ActionScoreVector> vectors,
                                 std::span<const double> weights);

struct FusionConfig {
  double weight_a = 1.0;
  double weight_b = 1.0;
  double match_iou = 0.5;

  void validate() const;
};

/// Two-model fusion of one frame. Same-label pairs with IoU >= match_iou
/// are matched greedily by descending IoU (lower a-index, then lower
/// b-index, first on ties) and merged with weighted-average coordinates,
/// score and action scores. Unmatched entries keep their geometry and have
/// the score scaled by their model's normalized weight. Output is sorted by
/// score, descending. Throws InputError when the frame keys differ.
FrameDetections fuse_detections(const FrameDetections& a, const FrameDetections& b,
                                const FusionConfig& cfg);

}  // namespace crowdact
