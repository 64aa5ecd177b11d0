#pragma once

#include <cstdint>

#include "crowdact/box.hpp"

namespace crowdact {

/// Resize-then-pad bookkeeping for one inference/training scale.
struct TransformPlan {
  double scale = 1.0;
  int scaled_w = 0;
  int scaled_h = 0;
  int padded_w = 0;
  int padded_h = 0;
  bool flipped = false;
};

/// Longer side of the padded canvas is this multiple of the shorter side.
inline constexpr double kPadRatio = 2.5;

/// Intersection over union; 0 when the union is empty.
double iou(const Box& a, const Box& b);

/// Mirror about the vertical axis of a frame of width `frame_width`.
/// Throws InputError if the box does not lie in [0, frame_width].
Box hflip_box(const Box& b, double frame_width);

/// Scale the shorter frame side to `target_short` and pad the longer side to
/// round(2.5 * target_short). When width == height the width is treated as
/// the longer side. Throws InputError when the scaled longer side would not
/// fit the padded canvas.
TransformPlan resize_pad_plan(int frame_w, int frame_h, int target_short, bool flipped);

/// Original frame coordinates -> padded model coordinates.
Box apply_plan(const Box& b, const TransformPlan& p);
/// Padded model coordinates -> original frame coordinates.
Box invert_plan(const Box& b, const TransformPlan& p);

/// Shifts every edge by an independent offset uniform in
/// [-ratio, ratio] * side length, drawn in x1, y1, x2, y2 order.
Box jitter_box(const Box& b, double ratio, std::uint64_t seed);

}  // namespace crowdact
