#include "crowdact/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crowdact/errors.hpp"

namespace crowdact {

FeatureGrid::FeatureGrid(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels <= 0 || height <= 0 || width <= 0) {
    throw InputError("FeatureGrid: dimensions must be positive");
  }
  values_.assign(static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
                     static_cast<std::size_t>(width),
                 fill);
}

FeatureGrid::FeatureGrid(int channels, int height, int width, std::vector<double> values)
    : FeatureGrid(channels, height, width) {
  if (values.size() != values_.size()) throw InputError("FeatureGrid: value count mismatch");
  values_ = std::move(values);
}

double bilinear_sample(const FeatureGrid& g, int c, double y, double x) {
  y = std::clamp(y, 0.0, static_cast<double>(g.height() - 1));
  x = std::clamp(x, 0.0, static_cast<double>(g.width() - 1));
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const int y1 = std::min(y0 + 1, g.height() - 1);
  const int x1 = std::min(x0 + 1, g.width() - 1);
  const double ly = y - y0;
  const double lx = x - x0;
  return (1.0 - ly) * ((1.0 - lx) * g.at(c, y0, x0) + lx * g.at(c, y0, x1)) +
         ly * ((1.0 - lx) * g.at(c, y1, x0) + lx * g.at(c, y1, x1));
}

FeatureGrid roi_align_2d(const FeatureGrid& g, const Box& roi, int out_h, int out_w,
                         int sampling_ratio) {
  if (out_h < 1 || out_w < 1 || sampling_ratio < 1) {
    throw InputError("roi_align_2d: output size and sampling ratio must be >= 1");
  }
  if (!(roi.x1 <= roi.x2 && roi.y1 <= roi.y2)) throw InputError("roi_align_2d: invalid roi");
  const double bin_h = roi.height() / out_h;
  const double bin_w = roi.width() / out_w;
  const double inv_count = 1.0 / (sampling_ratio * sampling_ratio);

  FeatureGrid out(g.channels(), out_h, out_w);
  for (int c = 0; c < g.channels(); ++c) {
    for (int by = 0; by < out_h; ++by) {
      for (int bx = 0; bx < out_w; ++bx) {
        double acc = 0.0;
        for (int sy = 0; sy < sampling_ratio; ++sy) {
          const double y = roi.y1 + bin_h * (by + (sy + 0.5) / sampling_ratio);
          for (int sx = 0; sx < sampling_ratio; ++sx) {
            const double x = roi.x1 + bin_w * (bx + (sx + 0.5) / sampling_ratio);
            acc += bilinear_sample(g, c, y, x);
          }
        }
        out.at(c, by, bx) = acc * inv_count;
      }
    }
  }
  return out;
}

FeatureGrid temporal_mean_pool(std::span<const FeatureGrid> stack) {
  if (stack.empty()) throw InputError("temporal_mean_pool: empty stack");
  const FeatureGrid& first = stack.front();
  FeatureGrid out(first.channels(), first.height(), first.width());
  auto dst = out.values();
  for (const auto& g : stack) {
    if (!g.same_shape(first)) throw InputError("temporal_mean_pool: shape mismatch");
    const auto src = g.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  const double inv = 1.0 / static_cast<double>(stack.size());
  for (double& v : dst) v *= inv;
  return out;
}

std::vector<std::int64_t> clip_frame_indices(std::int64_t key, std::int64_t window,
                                             std::int64_t n, std::int64_t video_len) {
  if (video_len <= 0) throw InputError("clip_frame_indices: video length must be positive");
  if (window < 1 || n < 1) throw InputError("clip_frame_indices: window and n must be >= 1");
  const std::int64_t start = key - window / 2;
  std::vector<std::int64_t> idx;
  idx.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    // floor((k + 0.5) * window / n) in exact integer arithmetic
    const std::int64_t offset = ((2 * k + 1) * window) / (2 * n);
    idx.push_back(std::clamp<std::int64_t>(start + offset, 0, video_len - 1));
  }
  return idx;
}

ClipPlan make_clip_plan(std::int64_t key, std::int64_t window,
                        std::span<const std::int64_t> branch_samples, std::int64_t video_len) {
  ClipPlan plan;
  plan.key = key;
  plan.window = window;
  for (const auto n : branch_samples) {
    plan.branches.push_back(clip_frame_indices(key, window, n, video_len));
  }
  return plan;
}

}  // namespace crowdact
