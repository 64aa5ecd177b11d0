#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "crowdact/errors.hpp"
#include "crowdact/postproc.hpp"
#include "support/oracles.hpp"

namespace crowdact {
namespace {

LabelMask half_mask() {
  // Left half (x < 10) stairs (id 3), right half floor (id 0); 20 x 10.
  LabelMask m;
  m.width = 20;
  m.height = 10;
  m.names = {{0, "floor"}, {3, "stairs"}};
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 20; ++x) m.ids.push_back(x < 10 ? 3 : 0);
  }
  return m;
}

Box box(double x1, double y1, double x2, double y2) {
  Box b;
  b.x1 = x1;
  b.y1 = y1;
  b.x2 = x2;
  b.y2 = y2;
  return b;
}

TEST(SceneOverlap, InsideAndStraddling) {
  const LabelMask m = half_mask();
  EXPECT_EQ(scene_overlap_ratio(box(1, 1, 8, 9), m, 3), 1.0);
  EXPECT_EQ(scene_overlap_ratio(box(5, 0, 15, 10), m, 3), 0.5);
  EXPECT_EQ(scene_overlap_ratio(box(5, 0, 15, 10), m, 0), 0.5);
  EXPECT_EQ(scene_overlap_ratio(box(12, 0, 18, 10), m, 3), 0.0);
}

TEST(SceneOverlap, ClippingAndEmpty) {
  const LabelMask m = half_mask();
  EXPECT_EQ(scene_overlap_ratio(box(-50, -50, 10, 100), m, 3), 1.0);
  EXPECT_EQ(scene_overlap_ratio(box(30, 0, 40, 10), m, 3), 0.0);
  EXPECT_EQ(scene_overlap_ratio(box(4.2, 4.2, 4.3, 4.3), m, 3), 0.0);
}

TEST(SceneOverlap, UnknownLabelIsError) {
  EXPECT_THROW(scene_overlap_ratio(box(0, 0, 5, 5), half_mask(), 7), InputError);
}

TEST(SceneOverlap, FeetRegionUsesBottomFifth) {
  LabelMask m;
  m.width = 10;
  m.height = 10;
  m.names = {{0, "floor"}, {1, "stairs"}};
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) m.ids.push_back(y >= 8 ? 1 : 0);
  }
  EXPECT_NEAR(scene_overlap_ratio(box(0, 0, 10, 10), m, 1), 0.2, 1e-15);
  EXPECT_EQ(scene_overlap_ratio(box(0, 0, 10, 10), m, 1, OverlapRegion::kFeet), 1.0);
}

TEST(SceneOverlap, MatchesPixelLoop) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> id(0, 2);
  std::uniform_real_distribution<double> coord(-5.0, 45.0);
  LabelMask m;
  m.width = 37;
  m.height = 29;
  m.names = {{0, "a"}, {1, "b"}, {2, "c"}};
  for (int i = 0; i < m.width * m.height; ++i) m.ids.push_back(static_cast<std::uint8_t>(id(rng)));
  for (int t = 0; t < 500; ++t) {
    double x1 = coord(rng), x2 = coord(rng), y1 = coord(rng), y2 = coord(rng);
    if (x1 > x2) std::swap(x1, x2);
    if (y1 > y2) std::swap(y1, y2);
    std::size_t hit = 0, all = 0;
    for (int y = 0; y < m.height; ++y) {
      for (int x = 0; x < m.width; ++x) {
        const double cx = x + 0.5, cy = y + 0.5;
        if (cx >= x1 && cx < x2 && cy >= y1 && cy < y2) {
          ++all;
          hit += m.at(x, y) == 1;
        }
      }
    }
    const double expect = all == 0 ? 0.0 : static_cast<double>(hit) / all;
    EXPECT_DOUBLE_EQ(scene_overlap_ratio(box(x1, y1, x2, y2), m, 1), expect);
  }
}

std::vector<SceneRule> stairs_rule(double boost, double damp) {
  SceneRule r;
  r.scene = "stairs";
  r.action = "walking-up-down-stairs";
  r.boost = boost;
  r.damp = damp;
  r.action_index = 1;
  return {r};
}

TEST(SceneReweight, FormulaAtEnds) {
  const ActionScoreVector s{.3, .4};
  const auto rule = stairs_rule(1.5, 0.5);
  const std::vector<double> one{1.0}, zero{0.0};
  EXPECT_NEAR(scene_reweight(s, one, rule)[1], .6, 1e-15);
  EXPECT_NEAR(scene_reweight(s, zero, rule)[1], .2, 1e-15);
  EXPECT_EQ(scene_reweight(s, one, rule)[0], .3);
}

TEST(SceneReweight, ClampsToOne) {
  const std::vector<double> one{1.0};
  EXPECT_EQ(scene_reweight({.1, .9}, one, stairs_rule(1.5, 0.5))[1], 1.0);
}

TEST(SceneReweight, NeutralRuleIsIdentity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 1000; ++t) {
    const ActionScoreVector s{u(rng), u(rng), u(rng)};
    const std::vector<double> r{u(rng)};
    EXPECT_EQ(scene_reweight(s, r, stairs_rule(1.0, 1.0)), s);
  }
}

TEST(SceneReweight, Errors) {
  auto rule = stairs_rule(1.5, 0.5);
  rule[0].action_index = 5;
  const std::vector<double> one{1.0};
  EXPECT_THROW(scene_reweight({.1, .2}, one, rule), InputError);
  const std::vector<double> bad{1.5};
  EXPECT_THROW(scene_reweight({.1, .2}, bad, stairs_rule(1.5, .5)), InputError);
}

TEST(MaxNeighborIou, Cases) {
  const std::vector<Box> one{box(0, 0, 10, 10)};
  EXPECT_EQ(max_neighbor_iou(one, 0), 0.0);
  const std::vector<Box> two{box(0, 0, 10, 10), box(0, 0, 10, 10)};
  EXPECT_EQ(max_neighbor_iou(two, 1), 1.0);
  EXPECT_THROW(max_neighbor_iou(two, 2), InputError);
}

TEST(MaxNeighborIou, MatchesPairwiseScan) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    std::vector<Box> v;
    for (int i = 0; i < 20; ++i) v.push_back(oracle::random_box(rng, 60.0, 30.0));
    for (std::size_t i = 0; i < v.size(); ++i) {
      double best = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (i != j) best = std::max(best, oracle::box_iou(v[i], v[j]));
      }
      EXPECT_NEAR(max_neighbor_iou(v, i), best, 1e-15);
    }
  }
}

GroupPair pair(int together, int alone, double tau, double beta) {
  GroupPair p;
  p.together_index = together;
  p.alone_index = alone;
  p.tau = tau;
  p.beta = beta;
  return p;
}

TEST(GroupAlone, FullTransfer) {
  const std::vector<GroupPair> p{pair(0, 1, 0.05, 1.0)};
  const auto out = group_alone_reweight({.8, .1}, 0.0, p);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_NEAR(out[1], 0.9, 1e-15);
}

TEST(GroupAlone, GateClosedAndNeutral) {
  const ActionScoreVector s{.8, .1, .5};
  const std::vector<GroupPair> p{pair(0, 1, 0.05, 1.0)};
  EXPECT_EQ(group_alone_reweight(s, 0.05, p), s);
  EXPECT_EQ(group_alone_reweight(s, 0.7, p), s);
  const std::vector<GroupPair> neutral{pair(0, 1, 0.05, 0.0)};
  EXPECT_EQ(group_alone_reweight(s, 0.0, neutral), s);
}

TEST(GroupAlone, TransferCappedAtOne) {
  const std::vector<GroupPair> p{pair(0, 1, 0.5, 1.0)};
  const auto out = group_alone_reweight({.8, .5}, 0.0, p);
  EXPECT_EQ(out[1], 1.0);
  EXPECT_NEAR(out[0] + out[1], 1.3, 1e-15);
}

TEST(GroupAlone, PairsSharingAClassAreRejected) {
  const std::vector<GroupPair> p{pair(0, 1, 0.5, 1.0), pair(2, 1, 0.5, 1.0)};
  EXPECT_THROW(group_alone_reweight({.1, .2, .3}, 0.0, p), InputError);
  const std::vector<GroupPair> self{pair(1, 1, 0.5, 1.0)};
  EXPECT_THROW(group_alone_reweight({.1, .2, .3}, 0.0, self), InputError);
}

TEST(GroupAlone, ConservesMassAndBounds) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  const std::vector<GroupPair> p{pair(0, 1, 0.3, 0.0), pair(2, 3, 0.6, 0.0)};
  for (int t = 0; t < 20000; ++t) {
    std::vector<GroupPair> pp = p;
    pp[0].beta = u(rng);
    pp[1].beta = u(rng);
    const ActionScoreVector s{u(rng), u(rng), u(rng), u(rng)};
    const double miou = u(rng);
    const auto out = group_alone_reweight(s, miou, pp);
    for (const double v : out) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    ASSERT_NEAR(out[0] + out[1], s[0] + s[1], 1e-12);
    ASSERT_NEAR(out[2] + out[3], s[2] + s[3], 1e-12);
  }
}

const std::vector<std::string> kActions{"walking-alone", "walking-together",
                                        "walking-up-down-stairs"};

TEST(Rules, ParseBothKinds) {
  const RuleSet r = parse_rules(
      "# sample\n"
      "scene=stairs action=walking-up-down-stairs boost=1.5 damp=0.5\n"
      "scene=stairs action=walking-alone boost=1 damp=0.8 region=feet\n"
      "pair together=walking-together alone=walking-alone tau=0.05 beta=1.0\n",
      kActions);
  ASSERT_EQ(r.scene_rules.size(), 2u);
  EXPECT_EQ(r.scene_rules[0].action_index, 2);
  EXPECT_EQ(r.scene_rules[0].boost, 1.5);
  EXPECT_EQ(r.scene_rules[1].region, OverlapRegion::kFeet);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].together_index, 1);
  EXPECT_EQ(r.pairs[0].alone_index, 0);
  EXPECT_EQ(r.pairs[0].tau, 0.05);
}

TEST(Rules, Errors) {
  EXPECT_THROW(parse_rules("scene=stairs action=flying boost=1.5 damp=0.5\n", kActions),
               ConfigError);
  EXPECT_THROW(parse_rules("scene=stairs action=walking-alone boost=0.5 damp=0.5\n", kActions),
               ConfigError);
  EXPECT_THROW(parse_rules("scene=stairs action=walking-alone boost=2 damp=0\n", kActions),
               ConfigError);
  EXPECT_THROW(parse_rules("scene=stairs action=walking-alone boost=x damp=0.5\n", kActions),
               ConfigError);
  EXPECT_THROW(parse_rules("pair together=walking-together alone=walking-alone tau=0.1\n",
                           kActions),
               ConfigError);
  EXPECT_THROW(parse_rules("pair together=walking-together alone=walking-alone tau=0.1 beta=1\n"
                           "pair together=walking-up-down-stairs alone=walking-alone tau=0.1 "
                           "beta=1\n",
                           kActions),
               ConfigError);
}

TEST(LabelMaskIo, ReadsP5WithSidecar) {
  const auto dir = std::filesystem::temp_directory_path() / "crowdact_mask_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "m.pgm", std::ios::binary);
    f << "P5\n# comment\n3 2\n255\n";
    const unsigned char px[] = {0, 3, 3, 0, 0, 3};
    f.write(reinterpret_cast<const char*>(px), sizeof px);
    std::ofstream n(dir / "m.names");
    n << "id=0 name=floor\nid=3 name=stairs\n";
  }
  const LabelMask m = read_label_mask(dir / "m.pgm", dir / "m.names");
  EXPECT_EQ(m.width, 3);
  EXPECT_EQ(m.height, 2);
  EXPECT_EQ(m.at(1, 0), 3);
  EXPECT_EQ(m.at(2, 1), 3);
  EXPECT_EQ(m.id_of("stairs"), 3);
  EXPECT_THROW(m.id_of("escalator"), ConfigError);

  {
    std::ofstream n(dir / "bad.names");
    n << "id=0 name=floor\n";
  }
  EXPECT_THROW(read_label_mask(dir / "m.pgm", dir / "bad.names"), InputError);
  {
    std::ofstream f(dir / "short.pgm", std::ios::binary);
    f << "P5\n3 2\n255\n" << '\0';
  }
  EXPECT_THROW(read_label_mask(dir / "short.pgm", dir / "m.names"), InputError);
  std::filesystem::remove_all(dir);
}

TEST(ReweightFrame, NeutralRulesLeaveFrameUntouched) {
  FrameDetections f;
  f.video = "v";
  f.frame = 0;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10; ++i) {
    Detection d;
    d.box = oracle::random_box(rng, 15.0, 8.0);
    d.actions = {u(rng), u(rng), u(rng)};
    f.items.push_back(d);
  }
  const RuleSet rules = parse_rules(
      "scene=stairs action=walking-up-down-stairs boost=1 damp=1\n"
      "pair together=walking-together alone=walking-alone tau=1 beta=0\n",
      kActions);
  const LabelMask m = half_mask();
  EXPECT_EQ(reweight_frame(f, rules, &m), f);
  EXPECT_THROW(reweight_frame(f, rules, nullptr), InputError);
}

}  // namespace
}  // namespace crowdact
