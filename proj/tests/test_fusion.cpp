#include <gtest/gtest.h>

#include <random>

#include "crowdact/errors.hpp"
#include "crowdact/fusion.hpp"
#include "crowdact/geometry.hpp"
#include "support/oracles.hpp"

namespace crowdact {
namespace {

TEST(AverageScores, EqualWeights) {
  const std::vector<ActionScoreVector> v{{.2, .8}, {.4, .6}};
  const std::vector<double> w{1, 1};
  const auto out = average_scores(v, w);
  EXPECT_NEAR(out[0], .3, 1e-15);
  EXPECT_NEAR(out[1], .7, 1e-15);
}

TEST(AverageScores, TenIdenticalPassesIsIdentity) {
  const ActionScoreVector s{.125, .5, .25, .0625};
  const std::vector<ActionScoreVector> v(10, s);
  const std::vector<double> w(10, 1.0);
  EXPECT_EQ(average_scores(v, w), s);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 1000; ++t) {
    const ActionScoreVector r{u(rng), u(rng), u(rng)};
    ASSERT_EQ(average_scores(std::vector<ActionScoreVector>(10, r), w), r);
  }
}

TEST(AverageScores, DegenerateWeightPicksFirst) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    ActionScoreVector a(14), b(14);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const std::vector<ActionScoreVector> v{a, b};
    const std::vector<double> w{2, 0};
    EXPECT_EQ(average_scores(v, w), a);
  }
}

TEST(AverageScores, PermutationInvariant) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    std::vector<ActionScoreVector> v(5, ActionScoreVector(6));
    std::vector<double> w(5);
    for (auto& vec : v) {
      for (auto& x : vec) x = u(rng);
    }
    for (auto& x : w) x = u(rng);
    std::vector<std::size_t> perm{4, 2, 0, 3, 1};
    std::vector<ActionScoreVector> pv;
    std::vector<double> pw;
    for (const auto p : perm) {
      pv.push_back(v[p]);
      pw.push_back(w[p]);
    }
    const auto a = average_scores(v, w);
    const auto b = average_scores(pv, pw);
    for (std::size_t c = 0; c < a.size(); ++c) EXPECT_NEAR(a[c], b[c], 1e-12);
  }
}

TEST(AverageScores, Errors) {
  const std::vector<ActionScoreVector> v{{.2, .8}, {.4}};
  const std::vector<double> w{1, 1};
  EXPECT_THROW(average_scores(v, w), InputError);
  const std::vector<ActionScoreVector> ok{{.2}, {.4}};
  const std::vector<double> zero{0, 0};
  EXPECT_THROW(average_scores(ok, zero), InputError);
  const std::vector<double> neg{1, -1};
  EXPECT_THROW(average_scores(ok, neg), InputError);
}

Detection det(double x1, double y1, double x2, double y2, double s, int label = 0) {
  Detection d;
  d.box.x1 = x1;
  d.box.y1 = y1;
  d.box.x2 = x2;
  d.box.y2 = y2;
  d.box.score = s;
  d.box.label = label;
  return d;
}

FrameDetections frame(std::vector<Detection> items) {
  FrameDetections f;
  f.video = "v";
  f.frame = 40;
  f.items = std::move(items);
  return f;
}

TEST(FuseDetections, SelfFusionIsIdentity) {
  const FrameDetections a =
      frame({det(0, 0, 10, 10, .9), det(3, 3, 13, 17, .7), det(50, 50, 60, 60, .4, 1)});
  EXPECT_EQ(fuse_detections(a, a, {}), a);
}

TEST(FuseDetections, DisjointBoxesPassThroughHalved) {
  const FrameDetections a = frame({det(0, 0, 10, 10, .8)});
  const FrameDetections b = frame({det(50, 50, 60, 60, .6)});
  const FrameDetections out = fuse_detections(a, b, {});
  ASSERT_EQ(out.items.size(), 2u);
  EXPECT_DOUBLE_EQ(out.items[0].box.score, .4);
  EXPECT_DOUBLE_EQ(out.items[1].box.score, .3);
  EXPECT_EQ(out.items[1].box.x1, 50);
}

TEST(FuseDetections, DifferentLabelsNeverMerge) {
  const FrameDetections a = frame({det(0, 0, 10, 10, .8, 0)});
  const FrameDetections b = frame({det(0, 0, 10, 10, .8, 1)});
  EXPECT_EQ(fuse_detections(a, b, {}).items.size(), 2u);
}

TEST(FuseDetections, FrameKeyMismatch) {
  FrameDetections a = frame({});
  FrameDetections b = frame({});
  b.frame = 60;
  EXPECT_THROW(fuse_detections(a, b, {}), InputError);
}

// Literal re-statement of the merge rule: repeatedly pick the globally best
// remaining same-label pair above the threshold.
FrameDetections reference_fuse(const FrameDetections& a, const FrameDetections& b, double wa_raw,
                               double wb_raw, double thr) {
  const double wa = wa_raw / (wa_raw + wb_raw);
  const double wb = wb_raw / (wa_raw + wb_raw);
  std::vector<bool> ua(a.items.size()), ub(b.items.size());
  FrameDetections out;
  out.video = a.video;
  out.frame = a.frame;
  while (true) {
    double best = -1;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < a.items.size(); ++i) {
      for (std::size_t j = 0; j < b.items.size(); ++j) {
        if (ua[i] || ub[j] || a.items[i].box.label != b.items[j].box.label) continue;
        const double ov = oracle::box_iou(a.items[i].box, b.items[j].box);
        if (ov >= thr && ov > best) {
          best = ov;
          bi = i;
          bj = j;
        }
      }
    }
    if (best < 0) break;
    ua[bi] = ub[bj] = true;
    Detection m = a.items[bi];
    const Box& x = a.items[bi].box;
    const Box& y = b.items[bj].box;
    m.box.x1 = wa * x.x1 + wb * y.x1;
    m.box.y1 = wa * x.y1 + wb * y.y1;
    m.box.x2 = wa * x.x2 + wb * y.x2;
    m.box.y2 = wa * x.y2 + wb * y.y2;
    m.box.score = wa * x.score + wb * y.score;
    out.items.push_back(m);
  }
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    if (ua[i]) continue;
    out.items.push_back(a.items[i]);
    out.items.back().box.score *= wa;
  }
  for (std::size_t j = 0; j < b.items.size(); ++j) {
    if (ub[j]) continue;
    out.items.push_back(b.items[j]);
    out.items.back().box.score *= wb;
  }
  std::stable_sort(out.items.begin(), out.items.end(),
                   [](const Detection& p, const Detection& q) { return p.box.score > q.box.score; });
  return out;
}

TEST(FuseDetections, MatchesReferenceMerge) {
  std::mt19937_64 rng(61);
  std::uniform_int_distribution<int> label(0, 1);
  for (int t = 0; t < 300; ++t) {
    FrameDetections a = frame({});
    FrameDetections b = frame({});
    for (int i = 0; i < 12; ++i) {
      Detection d;
      d.box = oracle::random_box(rng, 60.0, 30.0);
      d.box.label = label(rng);
      a.items.push_back(d);
      // Jittered partner so overlaps are common.
      Detection e = d;
      std::uniform_real_distribution<double> off(-4, 4);
      e.box.x1 += off(rng);
      e.box.x2 = std::max(e.box.x1, e.box.x2 + off(rng));
      e.box.score = std::uniform_real_distribution<double>(0, 1)(rng);
      if (i % 3 != 0) b.items.push_back(e);
    }
    const double wa = 1.0 + t % 3;
    const double wb = 1.0;
    const FrameDetections got = fuse_detections(a, b, {wa, wb, 0.5});
    const FrameDetections ref = reference_fuse(a, b, wa, wb, 0.5);
    ASSERT_EQ(got.items.size(), ref.items.size());
    double max_in = 0.0;
    for (const auto& d : a.items) max_in = std::max(max_in, d.box.score);
    for (const auto& d : b.items) max_in = std::max(max_in, d.box.score);
    for (std::size_t k = 0; k < got.items.size(); ++k) {
      EXPECT_EQ(got.items[k].box, ref.items[k].box);
      EXPECT_LE(got.items[k].box.score, max_in);
    }
  }
}

TEST(FuseDetections, EqualWeightsSymmetric) {
  std::mt19937_64 rng(62);
  for (int t = 0; t < 100; ++t) {
    FrameDetections a = frame({});
    FrameDetections b = frame({});
    for (int i = 0; i < 8; ++i) {
      Detection d;
      d.box = oracle::random_box(rng, 50.0, 30.0);
      a.items.push_back(d);
      d.box = oracle::random_box(rng, 50.0, 30.0);
      b.items.push_back(d);
    }
    auto ab = fuse_detections(a, b, {}).items;
    auto ba = fuse_detections(b, a, {}).items;
    const auto key = [](const Detection& d) {
      return std::tie(d.box.score, d.box.x1, d.box.y1, d.box.x2, d.box.y2);
    };
    std::sort(ab.begin(), ab.end(), [&](auto& p, auto& q) { return key(p) < key(q); });
    std::sort(ba.begin(), ba.end(), [&](auto& p, auto& q) { return key(p) < key(q); });
    ASSERT_EQ(ab.size(), ba.size());
    for (std::size_t k = 0; k < ab.size(); ++k) EXPECT_EQ(ab[k].box, ba[k].box);
  }
}

TEST(FuseDetections, MergesActionScores) {
  Detection x = det(0, 0, 10, 10, .8);
  x.actions = {.2, .6};
  Detection y = det(0, 0, 10, 10, .4);
  y.actions = {.4, .2};
  const FrameDetections out = fuse_detections(frame({x}), frame({y}), {1, 3, 0.5});
  ASSERT_EQ(out.items.size(), 1u);
  EXPECT_NEAR(out.items[0].box.score, .25 * .8 + .75 * .4, 1e-15);
  EXPECT_NEAR(out.items[0].actions[0], .25 * .2 + .75 * .4, 1e-15);
  EXPECT_NEAR(out.items[0].actions[1], .25 * .6 + .75 * .2, 1e-15);
}

}  // namespace
}  // namespace crowdact
