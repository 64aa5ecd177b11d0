#include "crowdact/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crowdact/errors.hpp"
#include "crowdact/parallel.hpp"
#include "crowdact/rng.hpp"

namespace crowdact {

std::vector<std::int64_t> class_counts(std::span<const ClipProfile> profiles,
                                       std::size_t num_classes) {
  std::vector<std::int64_t> counts(num_classes, 0);
  for (const auto& p : profiles) {
    for (const int c : p.actions) {
      if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
        throw InputError("class_counts: clip '" + p.id + "' has class id " + std::to_string(c) +
                         " outside the class set");
      }
      ++counts[static_cast<std::size_t>(c)];
    }
  }
  return counts;
}

std::vector<double> clip_weights(std::span<const ClipProfile> profiles,
                                 std::span<const std::int64_t> counts, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("clip_weights: gamma must lie in [0, 1]");
  const std::int64_t n_max = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  std::vector<double> weights;
  weights.reserve(profiles.size());
  for (const auto& p : profiles) {
    if (p.actions.empty()) throw InputError("clip_weights: clip '" + p.id + "' has no actions");
    double w = 0.0;
    for (const int c : p.actions) {
      if (c < 0 || static_cast<std::size_t>(c) >= counts.size() ||
          counts[static_cast<std::size_t>(c)] <= 0) {
        throw InputError("clip_weights: clip '" + p.id + "' references class " +
                         std::to_string(c) + " with zero count");
      }
      const double ratio = static_cast<double>(n_max) /
                           static_cast<double>(counts[static_cast<std::size_t>(c)]);
      w = std::max(w, std::pow(ratio, gamma));
    }
    weights.push_back(w);
  }
  return weights;
}

std::vector<double> expected_class_occurrence(std::span<const ClipProfile> profiles,
                                              std::span<const double> weights,
                                              std::size_t num_classes) {
  if (profiles.size() != weights.size()) {
    throw InputError("expected_class_occurrence: one weight per clip required");
  }
  std::vector<double> expect(num_classes, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (!(weights[i] > 0.0)) throw InputError("expected_class_occurrence: weights must be positive");
    total += weights[i];
    for (const int c : profiles[i].actions) {
      if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
        throw InputError("expected_class_occurrence: class id outside the class set");
      }
      expect[static_cast<std::size_t>(c)] += weights[i];
    }
  }
  if (total > 0.0) {
    for (double& e : expect) e /= total;
  }
  return expect;
}

double expected_ratio(std::span<const ClipProfile> profiles, std::span<const double> weights,
                      std::size_t num_classes) {
  const auto expect = expected_class_occurrence(profiles, weights, num_classes);
  double hi = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (const double e : expect) {
    if (e <= 0.0) continue;
    hi = std::max(hi, e);
    lo = std::min(lo, e);
  }
  if (hi == 0.0) throw InputError("expected_ratio: no class occurs in any clip");
  return hi / lo;
}

GammaTuning tune_gamma(std::span<const ClipProfile> profiles, std::size_t num_classes,
                       double target_ratio) {
  if (!(target_ratio >= 1.0)) throw InputError("tune_gamma: target ratio must be at least 1");
  const auto counts = class_counts(profiles, num_classes);
  const auto ratio_at = [&](double g) {
    return expected_ratio(profiles, clip_weights(profiles, counts, g), num_classes);
  };

  GammaTuning t;
  const double r0 = ratio_at(0.0);
  if (target_ratio >= r0) {
    t.gamma = 0.0;
    t.achieved_ratio = r0;
    t.clamped = target_ratio > r0;
    return t;
  }
  const double r1 = ratio_at(1.0);
  if (target_ratio <= r1) {
    t.gamma = 1.0;
    t.achieved_ratio = r1;
    t.clamped = target_ratio < r1;
    return t;
  }
  double lo = 0.0;
  double hi = 1.0;
  for (t.iterations = 1; t.iterations <= 40; ++t.iterations) {
    t.gamma = 0.5 * (lo + hi);
    t.achieved_ratio = ratio_at(t.gamma);
    if (std::abs(t.achieved_ratio - target_ratio) <= 0.01 * target_ratio) break;
    if (t.achieved_ratio > target_ratio) {
      lo = t.gamma;
    } else {
      hi = t.gamma;
    }
  }
  t.iterations = std::min(t.iterations, 40);
  return t;
}

std::vector<std::size_t> sample_clips(std::span<const double> weights, std::size_t n,
                                      std::uint64_t seed, int threads) {
  if (weights.empty()) {
    if (n == 0) return {};
    throw InputError("sample_clips: no clips to draw from");
  }
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw InputError("sample_clips: weights must be positive and finite");
    }
    acc += weights[i];
    cdf[i] = acc;
  }
  const CounterRng rng(seed);
  std::vector<std::size_t> out(n);
  constexpr std::size_t kChunk = 1 << 16;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t chunk) {
    const std::size_t end = std::min(n, (chunk + 1) * kChunk);
    for (std::size_t k = chunk * kChunk; k < end; ++k) {
      const double u = rng.uniform(k) * acc;
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      out[k] = std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    }
  });
  return out;
}

std::vector<std::int64_t> sampled_class_counts(std::span<const ClipProfile> profiles,
                                               std::span<const std::size_t> draws,
                                               std::size_t num_classes) {
  std::vector<std::int64_t> counts(num_classes, 0);
  for (const std::size_t d : draws) {
    for (const int c : profiles[d].actions) ++counts[static_cast<std::size_t>(c)];
  }
  return counts;
}

}  // namespace crowdact
