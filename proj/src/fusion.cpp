#include "crowdact/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "crowdact/errors.hpp"
#include "crowdact/geometry.hpp"

namespace crowdact {

ActionScoreVector average_scores(std::span<const ActionScoreVector> vectors,
                                 std::span<const double> weights) {
  if (vectors.empty()) throw InputError("average_scores: no vectors");
  if (vectors.size() != weights.size()) {
    throw InputError("average_scores: one weight per vector required");
  }
  double total = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("average_scores: negative weight");
    total += w;
  }
  if (total <= 0.0) throw InputError("average_scores: weights sum to zero");

  const std::size_t len = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != len) throw InputError("average_scores: vector length mismatch");
  }
  // Accumulate offsets from the heaviest vector so that identical inputs and
  // single-weight cases reproduce that vector exactly.
  const std::size_t pivot = static_cast<std::size_t>(
      std::max_element(weights.begin(), weights.end()) - weights.begin());
  ActionScoreVector out = vectors[pivot];
  for (std::size_t c = 0; c < len; ++c) {
    double acc = 0.0;
    for (std::size_t v = 0; v < vectors.size(); ++v) {
      if (weights[v] != 0.0) acc += weights[v] * (vectors[v][c] - vectors[pivot][c]);
    }
    out[c] += acc / total;
  }
  return out;
}

void FusionConfig::validate() const {
  if (!(weight_a >= 0.0) || !(weight_b >= 0.0) || weight_a + weight_b <= 0.0) {
    throw ConfigError("fuse: weights must be non-negative and not both zero");
  }
  if (!(match_iou >= 0.0 && match_iou <= 1.0)) {
    throw ConfigError("fuse: match_iou must lie in [0, 1]");
  }
}

FrameDetections fuse_detections(const FrameDetections& a, const FrameDetections& b,
                                const FusionConfig& cfg) {
  cfg.validate();
  if (a.video != b.video || a.frame != b.frame) {
    throw InputError("fuse_detections: frame keys differ (" + a.video + ":" +
                     std::to_string(a.frame) + " vs " + b.video + ":" + std::to_string(b.frame) +
                     ")");
  }
  const double wa = cfg.weight_a / (cfg.weight_a + cfg.weight_b);
  const double wb = cfg.weight_b / (cfg.weight_a + cfg.weight_b);

  struct Candidate {
    double overlap;
    std::size_t ia;
    std::size_t ib;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    for (std::size_t j = 0; j < b.items.size(); ++j) {
      if (a.items[i].box.label != b.items[j].box.label) continue;
      const double ov = iou(a.items[i].box, b.items[j].box);
      if (ov >= cfg.match_iou) cands.push_back({ov, i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(y.overlap, x.ia, x.ib) < std::tie(x.overlap, y.ia, y.ib);
  });

  FrameDetections out;
  out.video = a.video;
  out.frame = a.frame;
  out.extra = a.extra.empty() ? b.extra : a.extra;

  std::vector<char> used_a(a.items.size(), 0);
  std::vector<char> used_b(b.items.size(), 0);
  for (const auto& c : cands) {
    if (used_a[c.ia] || used_b[c.ib]) continue;
    used_a[c.ia] = used_b[c.ib] = 1;
    const Detection& da = a.items[c.ia];
    const Detection& db = b.items[c.ib];
    Detection m = da;
    m.box.x1 = wa * da.box.x1 + wb * db.box.x1;
    m.box.y1 = wa * da.box.y1 + wb * db.box.y1;
    m.box.x2 = wa * da.box.x2 + wb * db.box.x2;
    m.box.y2 = wa * da.box.y2 + wb * db.box.y2;
    m.box.score = wa * da.box.score + wb * db.box.score;
    if (da.actions.size() == db.actions.size()) {
      for (std::size_t k = 0; k < m.actions.size(); ++k) {
        m.actions[k] = wa * da.actions[k] + wb * db.actions[k];
      }
    } else if (da.actions.empty()) {
      m.actions = db.actions;
    }
    if (!m.person_id) m.person_id = db.person_id;
    if (m.extra.empty()) m.extra = db.extra;
    out.items.push_back(std::move(m));
  }
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    if (used_a[i]) continue;
    Detection d = a.items[i];
    d.box.score *= wa;
    out.items.push_back(std::move(d));
  }
  for (std::size_t j = 0; j < b.items.size(); ++j) {
    if (used_b[j]) continue;
    Detection d = b.items[j];
    d.box.score *= wb;
    out.items.push_back(std::move(d));
  }
  std::stable_sort(out.items.begin(), out.items.end(), [](const Detection& x, const Detection& y) {
    return x.box.score > y.box.score;
  });
  return out;
}

}  // namespace crowdact
