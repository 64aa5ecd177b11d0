#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace crowdact {

/// Axis-aligned box in continuous corner coordinates. Area has no +1 pixel term.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  double score = 0.0;
  int label = 0;
  // Boxes emitted from the same proposal share this tag.
  std::optional<std::int64_t> proposal_id;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  /// True when x1 <= x2, y1 <= y2 and score lies in [0, 1].
  bool valid() const;

  friend bool operator==(const Box&, const Box&) = default;
};

/// Per-person scores over the configured action label set.
using ActionScoreVector = std::vector<double>;

/// One person entry of a frame: a box plus the optional per-action scores.
struct Detection {
  Box box;
  ActionScoreVector actions;
  std::optional<std::int64_t> person_id;
  // Truth-side only: matches against ignored entries count neither TP nor FP.
  bool ignore = false;
  // Serialized JSON object of fields this library does not interpret.
  std::string extra;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// All entries of one (video, frame). Used for both predictions and truths.
struct FrameDetections {
  std::string video;
  std::int64_t frame = 0;
  std::vector<Detection> items;
  std::string extra;

  friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

std::vector<Box> boxes_of(const std::vector<Detection>& items);

}  // namespace crowdact
