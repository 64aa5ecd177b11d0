#include "crowdact/suppression.hpp"

#include <algorithm>
#include <numeric>

#include "crowdact/errors.hpp"
#include "crowdact/geometry.hpp"

namespace crowdact {

namespace {

std::vector<std::size_t> run_nms(std::span<const Box> dets, const SuppressionConfig& cfg,
                                 bool respect_proposals) {
  cfg.validate();
  std::vector<std::size_t> order;
  order.reserve(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].score >= cfg.score_floor) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<std::size_t> kept;
  for (const std::size_t cand : order) {
    const Box& c = dets[cand];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      const Box& keeper = dets[k];
      if (respect_proposals && keeper.proposal_id && c.proposal_id &&
          *keeper.proposal_id == *c.proposal_id) {
        return false;
      }
      return iou(keeper, c) > cfg.iou_threshold;
    });
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

std::vector<Box> gather(std::span<const Box> dets, const std::vector<std::size_t>& idx) {
  std::vector<Box> out;
  out.reserve(idx.size());
  for (const std::size_t i : idx) out.push_back(dets[i]);
  return out;
}

}  // namespace

void SuppressionConfig::validate() const {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw ConfigError("suppression: iou_threshold must lie in [0, 1]");
  }
  if (!(score_floor >= 0.0 && score_floor <= 1.0)) {
    throw ConfigError("suppression: score_floor must lie in [0, 1]");
  }
}

std::vector<std::size_t> greedy_nms_indices(std::span<const Box> dets,
                                            const SuppressionConfig& cfg) {
  return run_nms(dets, cfg, false);
}

std::vector<std::size_t> set_nms_indices(std::span<const Box> dets,
                                         const SuppressionConfig& cfg) {
  return run_nms(dets, cfg, true);
}

std::vector<Box> greedy_nms(std::span<const Box> dets, const SuppressionConfig& cfg) {
  return gather(dets, greedy_nms_indices(dets, cfg));
}

std::vector<Box> set_nms(std::span<const Box> dets, const SuppressionConfig& cfg) {
  return gather(dets, set_nms_indices(dets, cfg));
}

}  // namespace crowdact
