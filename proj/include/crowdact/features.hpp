#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crowdact/box.hpp"

namespace crowdact {

/// Channel-major dense feature map.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(int channels, int height, int width, double fill = 0.0);
  FeatureGrid(int channels, int height, int width, std::vector<double> values);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }

  double& at(int c, int y, int x) { return values_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return values_[index(c, y, x)]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool same_shape(const FeatureGrid& o) const {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

/// Bilinear sample of channel `c`; pixel centers sit at integer coordinates
/// and out-of-range coordinates clamp to the border.
double bilinear_sample(const FeatureGrid& g, int c, double y, double x);

/// RoIAlign: out_h x out_w equal bins, each the mean of
/// sampling_ratio^2 bilinear samples at sub-bin centers.
FeatureGrid roi_align_2d(const FeatureGrid& g, const Box& roi, int out_h, int out_w,
                         int sampling_ratio);

/// Element-wise mean of equally shaped grids.
FeatureGrid temporal_mean_pool(std::span<const FeatureGrid> stack);

/// n frame indices spread over a window centred on `key`
/// (start = key - floor(window / 2)), clamped into [0, video_len).
std::vector<std::int64_t> clip_frame_indices(std::int64_t key, std::int64_t window,
                                             std::int64_t n, std::int64_t video_len);

struct ClipPlan {
  std::int64_t key = 0;
  std::int64_t window = 0;
  std::vector<std::vector<std::int64_t>> branches;
};

/// One index list per entry of `branch_samples` (e.g. {32, 8}).
ClipPlan make_clip_plan(std::int64_t key, std::int64_t window,
                        std::span<const std::int64_t> branch_samples, std::int64_t video_len);

}  // namespace crowdact
