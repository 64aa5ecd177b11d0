#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "crowdact/box.hpp"

namespace crowdact {

/// Dense row-major matrix of non-negative finite costs (rows = predictions).
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline constexpr std::size_t kDefaultMaxAssignmentRows = 512;

struct Assignment {
  // row_to_col[r] is the assigned column, or -1 when the row is left over.
  std::vector<long> row_to_col;
  double total_cost = 0.0;
};

/// Exact minimum-cost one-to-one assignment of min(rows, cols) pairs.
/// Throws InputError on negative/non-finite entries or rows > max_rows.
Assignment min_cost_assignment(const CostMatrix& cost,
                               std::size_t max_rows = kDefaultMaxAssignmentRows);

struct EmdCostConfig {
  // Weight on (1 - prediction score) in the real-pair cost.
  double lambda = 1.0;
  // Cost of leaving a truth unmatched.
  double miss_penalty = 1.0;
};

struct EmdResult {
  double value = 0.0;
  // (prediction index, truth index) for real pairs only, ascending prediction.
  std::vector<std::pair<std::size_t, std::size_t>> matching;
};

/// Pairwise cost between real entries: (1 - iou) + lambda * (1 - score).
double emd_pair_cost(const Box& pred, const Box& truth, const EmdCostConfig& cfg);

/// Set distance between predictions and truths. The smaller set is padded
/// with dummies: pred<->dummy costs the prediction's score and
/// truth<->dummy costs `miss_penalty`.
EmdResult emd_set_distance(std::span<const Box> preds, std::span<const Box> truths,
                           const EmdCostConfig& cfg = {});

enum class MatchFlag { kTruePositive, kFalsePositive, kIgnored };

struct MatchResult {
  // Indexed like the input detections.
  std::vector<MatchFlag> flags;
  std::vector<long> matched_truth;
  std::size_t false_negatives = 0;

  std::size_t true_positives() const;
};

/// Score-ordered greedy matching for one frame and class. Each detection,
/// in descending score (earlier input first on ties), takes the
/// highest-IoU unmatched truth with IoU >= threshold. Truths flagged
/// ignore absorb detections as kIgnored and are not counted as misses.
MatchResult greedy_score_match(std::span<const Box> dets, std::span<const Box> truths,
                               double iou_threshold,
                               const std::vector<bool>& truth_ignore = {});

}  // namespace crowdact
