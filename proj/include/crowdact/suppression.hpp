#pragma once

#include <span>
#include <vector>

#include "crowdact/box.hpp"

namespace crowdact {

struct SuppressionConfig {
  double iou_threshold = 0.5;
  // Boxes scoring below this are dropped before suppression.
  double score_floor = 0.0;

  /// Throws ConfigError unless both values lie in [0, 1].
  void validate() const;
};

/// Indices (into `dets`) of the boxes kept by greedy NMS, in output order:
/// score descending, earlier index first on ties. A candidate is suppressed
/// only when IoU > threshold with an already kept box.
std::vector<std::size_t> greedy_nms_indices(std::span<const Box> dets,
                                            const SuppressionConfig& cfg);

/// As greedy_nms_indices, but a kept box never suppresses a candidate that
/// carries the same proposal_id. Boxes without a proposal_id never skip.
std::vector<std::size_t> set_nms_indices(std::span<const Box> dets,
                                         const SuppressionConfig& cfg);

std::vector<Box> greedy_nms(std::span<const Box> dets, const SuppressionConfig& cfg);
std::vector<Box> set_nms(std::span<const Box> dets, const SuppressionConfig& cfg);

}  // namespace crowdact
