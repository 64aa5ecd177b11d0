#include "crowdact/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "crowdact/errors.hpp"
#include "crowdact/rng.hpp"

namespace crowdact {

bool Box::valid() const {
  return x1 <= x2 && y1 <= y2 && score >= 0.0 && score <= 1.0;
}

std::vector<Box> boxes_of(const std::vector<Detection>& items) {
  std::vector<Box> out;
  out.reserve(items.size());
  for (const auto& d : items) out.push_back(d.box);
  return out;
}

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

Box hflip_box(const Box& b, double frame_width) {
  if (b.x1 < 0.0 || frame_width < b.x2) {
    throw InputError("hflip_box: box x-range [" + std::to_string(b.x1) + ", " +
                     std::to_string(b.x2) + "] outside frame width " +
                     std::to_string(frame_width));
  }
  Box out = b;
  out.x1 = frame_width - b.x2;
  out.x2 = frame_width - b.x1;
  return out;
}

TransformPlan resize_pad_plan(int frame_w, int frame_h, int target_short, bool flipped) {
  if (frame_w <= 0 || frame_h <= 0 || target_short <= 0) {
    throw InputError("resize_pad_plan: dimensions must be positive");
  }
  const bool width_is_long = frame_w >= frame_h;
  const int shorter = width_is_long ? frame_h : frame_w;
  const int longer = width_is_long ? frame_w : frame_h;

  TransformPlan p;
  p.flipped = flipped;
  p.scale = static_cast<double>(target_short) / shorter;
  const long scaled_long = std::lround(p.scale * longer);
  const long padded_long = std::lround(kPadRatio * target_short);
  if (scaled_long > padded_long) {
    throw InputError("resize_pad_plan: scaled longer side " + std::to_string(scaled_long) +
                     " exceeds padded size " + std::to_string(padded_long));
  }
  if (width_is_long) {
    p.scaled_w = static_cast<int>(scaled_long);
    p.scaled_h = target_short;
    p.padded_w = static_cast<int>(padded_long);
    p.padded_h = target_short;
  } else {
    p.scaled_w = target_short;
    p.scaled_h = static_cast<int>(scaled_long);
    p.padded_w = target_short;
    p.padded_h = static_cast<int>(padded_long);
  }
  return p;
}

Box apply_plan(const Box& b, const TransformPlan& p) {
  Box out = b;
  out.x1 = b.x1 * p.scale;
  out.y1 = b.y1 * p.scale;
  out.x2 = b.x2 * p.scale;
  out.y2 = b.y2 * p.scale;
  if (p.flipped) {
    const double x1 = p.padded_w - out.x2;
    out.x2 = p.padded_w - out.x1;
    out.x1 = x1;
  }
  return out;
}

Box invert_plan(const Box& b, const TransformPlan& p) {
  Box out = b;
  double x1 = b.x1;
  double x2 = b.x2;
  if (p.flipped) {
    x1 = p.padded_w - b.x2;
    x2 = p.padded_w - b.x1;
  }
  out.x1 = x1 / p.scale;
  out.x2 = x2 / p.scale;
  out.y1 = b.y1 / p.scale;
  out.y2 = b.y2 / p.scale;
  return out;
}

Box jitter_box(const Box& b, double ratio, std::uint64_t seed) {
  if (ratio < 0.0 || ratio > 1.0) throw InputError("jitter_box: ratio must lie in [0, 1]");
  if (ratio == 0.0) return b;
  const CounterRng rng(seed);
  const double w = b.width();
  const double h = b.height();
  Box out = b;
  out.x1 = b.x1 + ratio * w * rng.symmetric(0);
  out.y1 = b.y1 + ratio * h * rng.symmetric(1);
  out.x2 = b.x2 + ratio * w * rng.symmetric(2);
  out.y2 = b.y2 + ratio * h * rng.symmetric(3);
  if (out.x1 > out.x2) std::swap(out.x1, out.x2);
  if (out.y1 > out.y2) std::swap(out.y1, out.y2);
  return out;
}

}  // namespace crowdact
