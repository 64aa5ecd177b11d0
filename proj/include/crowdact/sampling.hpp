#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace crowdact {

/// Action-class occurrences of one training clip (a key frame's persons).
struct ClipProfile {
  std::string id;
  std::vector<int> actions;  // class ids, repeats allowed
};

/// Exact per-class occurrence totals. Throws InputError on ids outside
/// [0, num_classes).
std::vector<std::int64_t> class_counts(std::span<const ClipProfile> profiles,
                                       std::size_t num_classes);

/// weight(clip) = max over classes c in the clip of (N_max / N_c)^gamma.
/// Throws InputError for empty profiles or classes with zero count.
std::vector<double> clip_weights(std::span<const ClipProfile> profiles,
                                 std::span<const std::int64_t> counts, double gamma);

/// Expected per-class occurrences per draw under weighted sampling with
/// replacement (normalized by total weight).
std::vector<double> expected_class_occurrence(std::span<const ClipProfile> profiles,
                                              std::span<const double> weights,
                                              std::size_t num_classes);

/// max E[c] / min E[c] over classes present in at least one clip.
double expected_ratio(std::span<const ClipProfile> profiles, std::span<const double> weights,
                      std::size_t num_classes);

struct GammaTuning {
  double gamma = 0.0;
  double achieved_ratio = 0.0;
  int iterations = 0;
  // Target lay outside [ratio(gamma=1), ratio(gamma=0)]; gamma is a boundary.
  bool clamped = false;
};

/// Bisection on gamma in [0, 1] until expected_ratio is within 1% of the
/// target or 40 iterations have run.
GammaTuning tune_gamma(std::span<const ClipProfile> profiles, std::size_t num_classes,
                       double target_ratio);

/// n independent weighted draws with replacement; returns clip indices.
/// Draw k depends only on (seed, k).
std::vector<std::size_t> sample_clips(std::span<const double> weights, std::size_t n,
                                      std::uint64_t seed, int threads = 1);

/// Per-class occurrence totals over a drawn clip sequence.
std::vector<std::int64_t> sampled_class_counts(std::span<const ClipProfile> profiles,
                                               std::span<const std::size_t> draws,
                                               std::size_t num_classes);

}  // namespace crowdact
