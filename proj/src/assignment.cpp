#include "crowdact/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "crowdact/errors.hpp"
#include "crowdact/geometry.hpp"

namespace crowdact {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw InputError("CostMatrix: data size mismatch");
}

namespace {

// Shortest augmenting path Hungarian with potentials; requires n <= m.
// Returns row -> column (0-based).
std::vector<long> solve_rows_le_cols(std::size_t n, std::size_t m,
                                     const auto& cost /* (row, col) -> double */) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<long> row_to_col(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = static_cast<long>(j - 1);
  }
  return row_to_col;
}

}  // namespace

Assignment min_cost_assignment(const CostMatrix& cost, std::size_t max_rows) {
  if (cost.rows() > max_rows) {
    throw InputError("min_cost_assignment: " + std::to_string(cost.rows()) +
                     " rows exceeds limit " + std::to_string(max_rows));
  }
  for (const double c : cost.data()) {
    if (!std::isfinite(c) || c < 0.0) {
      throw InputError("min_cost_assignment: costs must be finite and non-negative");
    }
  }

  Assignment result;
  result.row_to_col.assign(cost.rows(), -1);
  if (cost.rows() == 0 || cost.cols() == 0) return result;

  if (cost.rows() <= cost.cols()) {
    result.row_to_col = solve_rows_le_cols(
        cost.rows(), cost.cols(), [&](std::size_t r, std::size_t c) { return cost.at(r, c); });
  } else {
    const auto col_to_row = solve_rows_le_cols(
        cost.cols(), cost.rows(), [&](std::size_t r, std::size_t c) { return cost.at(c, r); });
    for (std::size_t c = 0; c < col_to_row.size(); ++c) {
      result.row_to_col[static_cast<std::size_t>(col_to_row[c])] = static_cast<long>(c);
    }
  }
  // Sum in row order so the total does not depend on solver internals.
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    if (result.row_to_col[r] >= 0) {
      result.total_cost += cost.at(r, static_cast<std::size_t>(result.row_to_col[r]));
    }
  }
  return result;
}

double emd_pair_cost(const Box& pred, const Box& truth, const EmdCostConfig& cfg) {
  return (1.0 - iou(pred, truth)) + cfg.lambda * (1.0 - pred.score);
}

EmdResult emd_set_distance(std::span<const Box> preds, std::span<const Box> truths,
                           const EmdCostConfig& cfg) {
  if (cfg.lambda < 0.0 || cfg.miss_penalty < 0.0) {
    throw ConfigError("emd_set_distance: lambda and miss_penalty must be non-negative");
  }
  EmdResult out;
  const std::size_t n = std::max(preds.size(), truths.size());
  if (n == 0) return out;

  CostMatrix cost(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const bool real_pred = r < preds.size();
      const bool real_truth = c < truths.size();
      if (real_pred && real_truth) {
        cost.at(r, c) = emd_pair_cost(preds[r], truths[c], cfg);
      } else if (real_pred) {
        cost.at(r, c) = preds[r].score;
      } else if (real_truth) {
        cost.at(r, c) = cfg.miss_penalty;
      }
    }
  }
  const Assignment a = min_cost_assignment(cost, std::max(n, kDefaultMaxAssignmentRows));
  out.value = a.total_cost;
  for (std::size_t r = 0; r < preds.size(); ++r) {
    const long c = a.row_to_col[r];
    if (c >= 0 && static_cast<std::size_t>(c) < truths.size()) {
      out.matching.emplace_back(r, static_cast<std::size_t>(c));
    }
  }
  return out;
}

std::size_t MatchResult::true_positives() const {
  return static_cast<std::size_t>(
      std::count(flags.begin(), flags.end(), MatchFlag::kTruePositive));
}

MatchResult greedy_score_match(std::span<const Box> dets, std::span<const Box> truths,
                               double iou_threshold, const std::vector<bool>& truth_ignore) {
  if (!truth_ignore.empty() && truth_ignore.size() != truths.size()) {
    throw InputError("greedy_score_match: ignore mask size differs from truth count");
  }
  const auto ignored = [&](std::size_t t) { return !truth_ignore.empty() && truth_ignore[t]; };

  MatchResult res;
  res.flags.assign(dets.size(), MatchFlag::kFalsePositive);
  res.matched_truth.assign(dets.size(), -1);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<char> taken(truths.size(), 0);
  for (const std::size_t d : order) {
    long best = -1;
    double best_iou = -1.0;
    long best_ignored = -1;
    for (std::size_t t = 0; t < truths.size(); ++t) {
      const double ov = iou(dets[d], truths[t]);
      if (ov < iou_threshold) continue;
      if (ignored(t)) {
        if (best_ignored < 0) best_ignored = static_cast<long>(t);
        continue;
      }
      if (taken[t]) continue;
      if (ov > best_iou) {
        best_iou = ov;
        best = static_cast<long>(t);
      }
    }
    if (best >= 0) {
      taken[static_cast<std::size_t>(best)] = 1;
      res.flags[d] = MatchFlag::kTruePositive;
      res.matched_truth[d] = best;
    } else if (best_ignored >= 0) {
      res.flags[d] = MatchFlag::kIgnored;
      res.matched_truth[d] = best_ignored;
    }
  }
  for (std::size_t t = 0; t < truths.size(); ++t) {
    if (!taken[t] && !ignored(t)) ++res.false_negatives;
  }
  return res;
}

}  // namespace crowdact
