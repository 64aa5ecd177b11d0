#include "crowdact/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "crowdact/errors.hpp"
#include "crowdact/parallel.hpp"

namespace crowdact {

void append_flags(std::span<const Box> dets, const MatchResult& match,
                  std::vector<ScoredFlag>& out) {
  for (std::size_t i = 0; i < dets.size(); ++i) out.push_back({dets[i].score, match.flags[i]});
}

namespace {

std::vector<ScoredFlag> ranked_scored(std::span<const ScoredFlag> flags) {
  std::vector<ScoredFlag> ranked;
  ranked.reserve(flags.size());
  for (const auto& f : flags) {
    if (f.flag != MatchFlag::kIgnored) ranked.push_back(f);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const ScoredFlag& a, const ScoredFlag& b) { return a.score > b.score; });
  return ranked;
}

}  // namespace

PRCurve pr_curve(std::span<const ScoredFlag> flags, std::size_t total_truths) {
  PRCurve curve;
  curve.total_truths = total_truths;
  const auto ranked = ranked_scored(flags);
  if (total_truths == 0) {
    curve.undefined = !ranked.empty();
    return curve;
  }
  std::size_t tp = 0;
  std::size_t fp = 0;
  curve.points.reserve(ranked.size());
  for (const auto& f : ranked) {
    if (f.flag == MatchFlag::kTruePositive) {
      ++tp;
    } else {
      ++fp;
    }
    curve.points.push_back({static_cast<double>(tp) / static_cast<double>(total_truths),
                            static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return curve;
}

double average_precision(const PRCurve& curve) {
  const auto& pts = curve.points;
  if (pts.empty()) return 0.0;
  std::vector<double> envelope(pts.size());
  double running = 0.0;
  for (std::size_t i = pts.size(); i-- > 0;) {
    running = std::max(running, pts[i].precision);
    envelope[i] = running;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ap += (pts[i].recall - prev_recall) * envelope[i];
    prev_recall = pts[i].recall;
  }
  return ap;
}

void MmrConfig::validate() const {
  if (!(fppi_lo > 0.0 && fppi_hi > fppi_lo)) {
    throw ConfigError("mmr: require 0 < fppi_lo < fppi_hi");
  }
  if (num_points < 2) throw ConfigError("mmr: num_points must be at least 2");
}

MRFPPICurve mr_fppi_curve(std::span<const ScoredFlag> flags, std::size_t total_truths,
                          std::size_t num_images) {
  if (total_truths == 0) throw InputError("mr_fppi_curve: miss rate undefined without truths");
  if (num_images == 0) throw InputError("mr_fppi_curve: num_images must be positive");
  MRFPPICurve curve;
  curve.num_images = num_images;
  curve.total_truths = total_truths;
  const auto ranked = ranked_scored(flags);
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].flag == MatchFlag::kTruePositive) {
      ++tp;
    } else {
      ++fp;
    }
    const bool group_end = i + 1 == ranked.size() || ranked[i + 1].score != ranked[i].score;
    if (!group_end) continue;
    curve.points.push_back({ranked[i].score,
                            static_cast<double>(fp) / static_cast<double>(num_images),
                            1.0 - static_cast<double>(tp) / static_cast<double>(total_truths)});
  }
  return curve;
}

double log_average_miss_rate(const MRFPPICurve& curve, const MmrConfig& cfg) {
  cfg.validate();
  // Decade-based spacing keeps the endpoints and powers of ten exact.
  const double log_lo = std::log10(cfg.fppi_lo);
  const double step = (std::log10(cfg.fppi_hi) - log_lo) / (cfg.num_points - 1);
  double log_sum = 0.0;
  bool all_zero = true;
  for (int k = 0; k < cfg.num_points; ++k) {
    const double ref = std::pow(10.0, log_lo + step * k);
    double mr = 1.0;
    for (const auto& p : curve.points) {
      if (p.fppi <= ref) mr = std::min(mr, p.miss_rate);
    }
    all_zero = all_zero && mr == 0.0;
    log_sum += std::log(std::max(mr, kMissRateFloor));
  }
  if (all_zero) return 0.0;
  return std::exp(log_sum / cfg.num_points);
}

// ---------------------------------------------------------------------------

namespace {

using FrameKey = std::pair<std::string, std::int64_t>;

std::map<FrameKey, const FrameDetections*> index_frames(const std::vector<FrameDetections>& c) {
  std::map<FrameKey, const FrameDetections*> idx;
  for (const auto& f : c) idx.emplace(FrameKey{f.video, f.frame}, &f);
  return idx;
}

struct ClassPool {
  std::vector<ScoredFlag> flags;
  std::size_t truths = 0;
  std::size_t detections = 0;
};

// Matches one frame for one class. `det_score` maps a detection to its
// ranking score, or nullopt when it does not take part.
template <typename DetSelect, typename TruthSelect>
void match_frame(const FrameDetections* det_frame, const FrameDetections& truth_frame,
                 double iou_threshold, DetSelect&& det_score, TruthSelect&& truth_in_class,
                 ClassPool& pool) {
  std::vector<Box> dboxes;
  if (det_frame != nullptr) {
    for (const auto& d : det_frame->items) {
      if (auto s = det_score(d)) {
        Box b = d.box;
        b.score = *s;
        dboxes.push_back(b);
      }
    }
  }
  std::vector<Box> tboxes;
  std::vector<bool> ignore;
  for (const auto& t : truth_frame.items) {
    if (!truth_in_class(t)) continue;
    tboxes.push_back(t.box);
    ignore.push_back(t.ignore);
    if (!t.ignore) ++pool.truths;
  }
  const MatchResult m = greedy_score_match(dboxes, tboxes, iou_threshold, ignore);
  append_flags(dboxes, m, pool.flags);
  pool.detections += dboxes.size();
}

std::string fmt6(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

DetReport evaluate_detections(const std::vector<FrameDetections>& dets,
                              const std::vector<FrameDetections>& truths,
                              const DetEvalConfig& cfg, int threads) {
  cfg.mmr.validate();
  if (!(cfg.iou_threshold >= 0.0 && cfg.iou_threshold <= 1.0)) {
    throw ConfigError("eval-det: iou threshold must lie in [0, 1]");
  }
  const auto det_idx = index_frames(dets);
  std::vector<const FrameDetections*> det_for_truth;
  std::set<int> labels;
  for (const auto& tf : truths) {
    auto it = det_idx.find({tf.video, tf.frame});
    det_for_truth.push_back(it == det_idx.end() ? nullptr : it->second);
    for (const auto& t : tf.items) labels.insert(t.box.label);
    if (det_for_truth.back() != nullptr) {
      for (const auto& d : det_for_truth.back()->items) labels.insert(d.box.label);
    }
  }

  DetReport report;
  report.config = cfg;
  const std::vector<int> label_list(labels.begin(), labels.end());
  report.classes.resize(label_list.size());
  parallel_for(label_list.size(), threads, [&](std::size_t li) {
    const int label = label_list[li];
    ClassPool pool;
    for (std::size_t f = 0; f < truths.size(); ++f) {
      match_frame(
          det_for_truth[f], truths[f], cfg.iou_threshold,
          [&](const Detection& d) -> std::optional<double> {
            if (d.box.label != label) return std::nullopt;
            return d.box.score;
          },
          [&](const Detection& t) { return t.box.label == label; }, pool);
    }
    DetClassResult& r = report.classes[li];
    r.label = label;
    r.images = truths.size();
    r.truths = pool.truths;
    r.detections = pool.detections;
    r.pr = pr_curve(pool.flags, pool.truths);
    r.ap = average_precision(r.pr);
    if (pool.truths > 0 && !truths.empty()) {
      r.mr = mr_fppi_curve(pool.flags, pool.truths, truths.size());
      r.mmr = log_average_miss_rate(r.mr, cfg.mmr);
    }
  });
  return report;
}

std::string det_report_text(const DetReport& report) {
  std::string out = "# detection evaluation\n";
  out += fmt::format("match_iou: {}\n", fmt6(report.config.iou_threshold));
  out += fmt::format("mmr_fppi_range: [{}, {}] points={}\n", fmt6(report.config.mmr.fppi_lo),
                     fmt6(report.config.mmr.fppi_hi), report.config.mmr.num_points);
  for (const auto& c : report.classes) {
    out += fmt::format("class {}: images={} truths={} detections={} AP={} MMR={}{}\n", c.label,
                       c.images, c.truths, c.detections, fmt6(c.ap),
                       c.mmr ? fmt6(*c.mmr) : std::string("n/a"),
                       c.pr.undefined ? " (no truths)" : "");
  }
  return out;
}

std::string det_report_csv(const DetReport& report) {
  std::string out = "class,images,truths,detections,ap,mmr\n";
  for (const auto& c : report.classes) {
    out += fmt::format("{},{},{},{},{},{}\n", c.label, c.images, c.truths, c.detections,
                       fmt6(c.ap), c.mmr ? fmt6(*c.mmr) : std::string());
  }
  return out;
}

// ---------------------------------------------------------------------------

void WfMapConfig::validate(std::size_t num_classes) const {
  if (iou_thresholds.empty()) throw ConfigError("wf-mAP: at least one IoU threshold required");
  for (const double t : iou_thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("wf-mAP: IoU thresholds must lie in [0, 1]");
  }
  if (class_weights.empty()) return;
  if (class_weights.size() != num_classes) {
    throw ConfigError(fmt::format("wf-mAP: {} class weights given for {} classes",
                                  class_weights.size(), num_classes));
  }
  double sum = 0.0;
  for (const double w : class_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("wf-mAP: class weights must be finite and non-negative");
    }
    sum += w;
  }
  if (sum <= 0.0) throw ConfigError("wf-mAP: class weights must not all be zero");
}

namespace {

ScopeSummary summarize(const std::string& video, const std::vector<ClassScopeResult>& rows,
                       std::size_t first) {
  ScopeSummary s;
  s.video = video;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t c = first; c < rows.size() && rows[c].video == video; ++c) {
    if (rows[c].absent) {
      s.absent_classes.push_back(rows[c].cls);
      continue;
    }
    num += rows[c].weight * rows[c].ap;
    den += rows[c].weight;
  }
  if (den > 0.0) s.wf_map = num / den;
  return s;
}

}  // namespace

EvalReport wf_map(const std::vector<FrameDetections>& dets,
                  const std::vector<FrameDetections>& truths,
                  const std::vector<std::string>& class_names, const WfMapConfig& cfg,
                  int threads) {
  const std::size_t nc = class_names.size();
  if (nc == 0) throw ConfigError("wf-mAP: empty class set");
  cfg.validate(nc);

  const auto det_idx = index_frames(dets);
  std::vector<const FrameDetections*> det_for_truth;
  std::vector<std::size_t> counts(nc, 0);
  std::set<std::string> video_set;
  for (const auto& tf : truths) {
    video_set.insert(tf.video);
    for (const auto& t : tf.items) {
      if (t.box.label < 0 || static_cast<std::size_t>(t.box.label) >= nc) {
        throw InputError(fmt::format("wf-mAP: truth label {} outside class set ({}:{})",
                                     t.box.label, tf.video, tf.frame));
      }
      if (!t.ignore) ++counts[static_cast<std::size_t>(t.box.label)];
    }
    auto it = det_idx.find({tf.video, tf.frame});
    det_for_truth.push_back(it == det_idx.end() ? nullptr : it->second);
    if (det_for_truth.back() != nullptr) {
      for (const auto& d : det_for_truth.back()->items) {
        if (d.actions.size() != nc) {
          throw InputError(fmt::format("wf-mAP: detection in {}:{} has {} action scores, expected {}",
                                       tf.video, tf.frame, d.actions.size(), nc));
        }
      }
    }
  }

  EvalReport report;
  report.config = cfg;
  report.class_names = class_names;
  report.weights_from_counts = cfg.class_weights.empty();
  report.weights.assign(nc, 0.0);
  if (report.weights_from_counts) {
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(),
                                                             std::size_t{0}));
    for (std::size_t c = 0; c < nc; ++c) {
      report.weights[c] = total > 0.0 ? static_cast<double>(counts[c]) / total : 0.0;
    }
  } else {
    const double total = std::accumulate(cfg.class_weights.begin(), cfg.class_weights.end(), 0.0);
    for (std::size_t c = 0; c < nc; ++c) report.weights[c] = cfg.class_weights[c] / total;
  }

  std::vector<std::string> scopes(video_set.begin(), video_set.end());
  scopes.emplace_back("*");
  report.rows.resize(scopes.size() * nc);
  parallel_for(report.rows.size(), threads, [&](std::size_t task) {
    const std::string& scope = scopes[task / nc];
    const int cls = static_cast<int>(task % nc);
    const bool pooled = scope == "*";
    ClassScopeResult& row = report.rows[task];
    row.video = scope;
    row.cls = cls;
    row.weight = report.weights[static_cast<std::size_t>(cls)];
    for (const double thr : cfg.iou_thresholds) {
      ClassPool pool;
      for (std::size_t f = 0; f < truths.size(); ++f) {
        if (!pooled && truths[f].video != scope) continue;
        match_frame(
            det_for_truth[f], truths[f], thr,
            [&](const Detection& d) -> std::optional<double> {
              return d.actions[static_cast<std::size_t>(cls)];
            },
            [&](const Detection& t) { return t.box.label == cls; }, pool);
      }
      row.truths = pool.truths;
      row.detections = pool.detections;
      row.ap_per_threshold.push_back(average_precision(pr_curve(pool.flags, pool.truths)));
    }
    row.absent = row.truths == 0;
    row.ap = std::accumulate(row.ap_per_threshold.begin(), row.ap_per_threshold.end(), 0.0) /
             static_cast<double>(row.ap_per_threshold.size());
  });

  for (std::size_t s = 0; s + 1 < scopes.size(); ++s) {
    report.videos.push_back(summarize(scopes[s], report.rows, s * nc));
  }
  report.overall = summarize("*", report.rows, (scopes.size() - 1) * nc);
  return report;
}

std::string eval_report_text(const EvalReport& report) {
  std::string out = "# action evaluation (wf-mAP@avg)\n";
  std::string thr;
  for (const double t : report.config.iou_thresholds) {
    thr += (thr.empty() ? "" : ",") + fmt6(t);
  }
  out += fmt::format("iou_thresholds: {}\n", thr);
  out += fmt::format("class_weights: {}\n",
                     report.weights_from_counts ? "truth-count proportional" : "explicit");
  for (std::size_t c = 0; c < report.class_names.size(); ++c) {
    out += fmt::format("  class {} {} weight={}\n", c, report.class_names[c],
                       fmt6(report.weights[c]));
  }
  const auto line = [&](const ScopeSummary& s) {
    std::string absent;
    for (const int c : s.absent_classes) {
      absent += (absent.empty() ? "" : ",") + report.class_names[static_cast<std::size_t>(c)];
    }
    return fmt::format("{}: {}{}\n", s.video, s.wf_map ? fmt6(*s.wf_map) : std::string("n/a"),
                       absent.empty() ? std::string() : " (absent: " + absent + ")");
  };
  out += "per-video wf-mAP:\n";
  for (const auto& v : report.videos) out += "  " + line(v);
  out += "overall wf-mAP@avg:\n  " + line(report.overall);
  return out;
}

std::string eval_report_csv(const EvalReport& report) {
  std::string out = "video,class,truths,detections,weight,ap,status\n";
  const std::size_t nc = report.class_names.size();
  std::vector<const ScopeSummary*> summaries;
  for (const auto& v : report.videos) summaries.push_back(&v);
  summaries.push_back(&report.overall);
  for (std::size_t s = 0; s < summaries.size(); ++s) {
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& r = report.rows[s * nc + c];
      out += fmt::format("{},{},{},{},{},{},{}\n", r.video, report.class_names[c], r.truths,
                         r.detections, fmt6(r.weight), r.absent ? std::string() : fmt6(r.ap),
                         r.absent ? "absent" : "ok");
    }
    const auto& sm = *summaries[s];
    out += fmt::format("{},wf-mAP,,,,{},{}\n", sm.video,
                       sm.wf_map ? fmt6(*sm.wf_map) : std::string(),
                       sm.wf_map ? "ok" : "undefined");
  }
  return out;
}

}  // namespace crowdact
