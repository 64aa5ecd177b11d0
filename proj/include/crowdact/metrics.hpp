#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdact/assignment.hpp"
#include "crowdact/box.hpp"

namespace crowdact {

/// One detection's outcome after matching, tagged with its ranking score.
struct ScoredFlag {
  double score = 0.0;
  MatchFlag flag = MatchFlag::kFalsePositive;
};

/// Appends (score, flag) for every detection of one frame.
void append_flags(std::span<const Box> dets, const MatchResult& match,
                  std::vector<ScoredFlag>& out);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PRCurve {
  std::vector<PrPoint> points;
  std::size_t total_truths = 0;
  // Set when detections exist but there are no truths to recall.
  bool undefined = false;
};

/// Ranks flags by score (stable, descending) and emits one (recall,
/// precision) point per non-ignored detection.
PRCurve pr_curve(std::span<const ScoredFlag> flags, std::size_t total_truths);

/// Area under the all-points monotone precision envelope. Empty curve -> 0.
double average_precision(const PRCurve& curve);

struct MrPoint {
  double threshold = 0.0;
  double fppi = 0.0;
  double miss_rate = 1.0;
};

struct MRFPPICurve {
  // One point per distinct detection score, threshold descending.
  std::vector<MrPoint> points;
  std::size_t num_images = 0;
  std::size_t total_truths = 0;
};

struct MmrConfig {
  double fppi_lo = 0.01;
  double fppi_hi = 100.0;
  int num_points = 9;

  void validate() const;
};

inline constexpr double kMissRateFloor = 1e-10;

/// Throws InputError when total_truths or num_images is zero.
MRFPPICurve mr_fppi_curve(std::span<const ScoredFlag> flags, std::size_t total_truths,
                          std::size_t num_images);

/// exp(mean log mr(f)) over num_points log-spaced reference FPPI values,
/// where mr(f) is the lowest miss rate reached with fppi <= f (1 if none).
/// Returns exactly 0 when every reference miss rate is 0.
double log_average_miss_rate(const MRFPPICurve& curve, const MmrConfig& cfg = {});

// ---------------------------------------------------------------------------
// Corpus-level evaluation. Evaluated frames are exactly those in the truth
// corpus; detections on other frames are not scored.

struct DetEvalConfig {
  double iou_threshold = 0.5;
  MmrConfig mmr;
};

struct DetClassResult {
  int label = 0;
  std::size_t images = 0;
  std::size_t truths = 0;
  std::size_t detections = 0;
  double ap = 0.0;
  // Empty when the class has no truths.
  std::optional<double> mmr;
  PRCurve pr;
  MRFPPICurve mr;
};

struct DetReport {
  DetEvalConfig config;
  std::vector<DetClassResult> classes;
};

DetReport evaluate_detections(const std::vector<FrameDetections>& dets,
                              const std::vector<FrameDetections>& truths,
                              const DetEvalConfig& cfg, int threads = 1);

std::string det_report_text(const DetReport& report);
std::string det_report_csv(const DetReport& report);

struct WfMapConfig {
  std::vector<double> iou_thresholds{0.5};
  // Indexed by class id. Empty selects weights proportional to truth counts.
  std::vector<double> class_weights;

  void validate(std::size_t num_classes) const;
};

/// AP of one class within one scope (a video, or "*" for the pooled corpus).
struct ClassScopeResult {
  std::string video;
  int cls = 0;
  std::size_t truths = 0;
  std::size_t detections = 0;
  double weight = 0.0;
  std::vector<double> ap_per_threshold;
  // Mean over thresholds; meaningless when absent.
  double ap = 0.0;
  // No truths of this class in scope: excluded from the weighted mean.
  bool absent = false;
};

struct ScopeSummary {
  std::string video;
  std::optional<double> wf_map;
  std::vector<int> absent_classes;
};

struct EvalReport {
  WfMapConfig config;
  bool weights_from_counts = false;
  std::vector<std::string> class_names;
  std::vector<double> weights;
  std::vector<ClassScopeResult> rows;   // scope-major, class-minor
  std::vector<ScopeSummary> videos;     // sorted by video id
  ScopeSummary overall;                 // video == "*"
};

/// Class-weighted frame mAP. Detection score for class c is actions[c];
/// a truth belongs to the class in its box label.
EvalReport wf_map(const std::vector<FrameDetections>& dets,
                  const std::vector<FrameDetections>& truths,
                  const std::vector<std::string>& class_names, const WfMapConfig& cfg,
                  int threads = 1);

std::string eval_report_text(const EvalReport& report);
std::string eval_report_csv(const EvalReport& report);

}  // namespace crowdact
