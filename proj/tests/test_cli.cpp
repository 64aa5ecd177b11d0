#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "crowdact/cli.hpp"

namespace crowdact {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("crowdact_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name, std::ios::binary) << text;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

const char* kThreeBoxes =
    "{\"video\":\"v\",\"frame\":0,\"boxes\":["
    "{\"x1\":0,\"y1\":0,\"x2\":10,\"y2\":10,\"score\":0.9},"
    "{\"x1\":1,\"y1\":1,\"x2\":11,\"y2\":11,\"score\":0.8},"
    "{\"x1\":50,\"y1\":50,\"x2\":60,\"y2\":60,\"score\":0.7}]}\n";

TEST_F(CliTest, NmsKeepsTwoOfThree) {
  write("in.jsonl", kThreeBoxes);
  ASSERT_EQ(run({"nms", "--in", path("in.jsonl"), "--out", path("out.jsonl"), "--iou", "0.5"}),
            kExitOk)
      << err_.str();
  EXPECT_EQ(read("out.jsonl"),
            "{\"video\":\"v\",\"frame\":0,\"boxes\":["
            "{\"x1\":0.000000,\"y1\":0.000000,\"x2\":10.000000,\"y2\":10.000000,"
            "\"score\":0.900000,\"label\":0},"
            "{\"x1\":50.000000,\"y1\":50.000000,\"x2\":60.000000,\"y2\":60.000000,"
            "\"score\":0.700000,\"label\":0}]}\n");
}

TEST_F(CliTest, ExitCodes) {
  write("in.jsonl", kThreeBoxes);
  write("bad.jsonl", "{nope\n");
  write("bad.cfg", "nms.iou=high\n");
  EXPECT_EQ(run({"--help"}), kExitOk);
  EXPECT_EQ(run({}), kExitConfigError);
  EXPECT_EQ(run({"frobnicate"}), kExitConfigError);
  EXPECT_EQ(run({"nms", "--in", path("in.jsonl"), "--out", path("o.jsonl")}), kExitConfigError);
  EXPECT_EQ(run({"nms", "--in", path("bad.jsonl"), "--out", path("o.jsonl"), "--iou", "0.5"}),
            kExitInputError);
  EXPECT_NE(err_.str().find("bad.jsonl:1"), std::string::npos);
  EXPECT_EQ(run({"nms", "--in", path("missing.jsonl"), "--out", path("o.jsonl"), "--iou", "0.5"}),
            kExitInputError);
  EXPECT_EQ(run({"--config", path("bad.cfg"), "nms", "--in", path("in.jsonl"), "--out",
                 path("o.jsonl")}),
            kExitConfigError);
  EXPECT_EQ(run({"nms", "--in", path("in.jsonl"), "--out", path("o.jsonl"), "--iou", "1.5"}),
            kExitConfigError);
  EXPECT_EQ(run({"--threads", "0", "clipindex", "--key", "1", "--video-len", "10"}),
            kExitConfigError);
}

TEST_F(CliTest, ConfigSuppliesThreshold) {
  write("in.jsonl", kThreeBoxes);
  write("c.cfg", "nms.iou=0.5\n");
  EXPECT_EQ(run({"--config", path("c.cfg"), "nms", "--in", path("in.jsonl"), "--out",
                 path("o.jsonl")}),
            kExitOk);
}

TEST_F(CliTest, EvalDetPerfectDetector) {
  const std::string truths =
      "{\"video\":\"v\",\"frame\":0,\"boxes\":[{\"x1\":0,\"y1\":0,\"x2\":10,\"y2\":10},"
      "{\"x1\":20,\"y1\":0,\"x2\":30,\"y2\":10}]}\n"
      "{\"video\":\"v\",\"frame\":20,\"boxes\":[{\"x1\":5,\"y1\":5,\"x2\":15,\"y2\":25}]}\n";
  write("t.jsonl", truths);
  ASSERT_EQ(run({"eval-det", "--dets", path("t.jsonl"), "--truths", path("t.jsonl"), "--csv",
                 path("r.csv")}),
            kExitOk)
      << err_.str();
  EXPECT_EQ(read("r.csv"), "class,images,truths,detections,ap,mmr\n0,2,3,3,1.000000,0.000000\n");
}

TEST_F(CliTest, EvalActOutputIndependentOfThreads) {
  std::string truths, dets;
  for (int v = 0; v < 3; ++v) {
    for (int f = 0; f < 20; ++f) {
      const std::string head =
          "{\"video\":\"v" + std::to_string(v) + "\",\"frame\":" + std::to_string(f * 20) +
          ",\"boxes\":[";
      truths += head + "{\"x1\":0,\"y1\":0,\"x2\":10,\"y2\":10,\"label\":" +
                std::to_string((v + f) % 2) + "}]}\n";
      dets += head + "{\"x1\":1,\"y1\":0,\"x2\":10,\"y2\":10,\"score\":0.9,\"actions\":[" +
              std::to_string(((f * 7) % 10) / 10.0) + "," + std::to_string(((f * 3) % 10) / 10.0) +
              "]}]}\n";
    }
  }
  write("t.jsonl", truths);
  write("d.jsonl", dets);
  write("c.cfg", "classes=stand,walk\n");
  std::string first;
  for (const char* threads : {"1", "2", "5"}) {
    ASSERT_EQ(run({"--threads", threads, "--config", path("c.cfg"), "eval-act", "--dets",
                   path("d.jsonl"), "--truths", path("t.jsonl"), "--csv", path("r.csv")}),
              kExitOk)
        << err_.str();
    if (first.empty()) first = read("r.csv");
    EXPECT_EQ(read("r.csv"), first);
  }
  EXPECT_NE(first.find("*,wf-mAP,"), std::string::npos);
}

TEST_F(CliTest, SplitAndClipIndex) {
  write("in.jsonl",
        "{\"video\":\"1\",\"frame\":0,\"boxes\":[]}\n{\"video\":\"3\",\"frame\":0,\"boxes\":[]}\n");
  ASSERT_EQ(run({"split", "--in", path("in.jsonl"), "--val", "3", "--train-out", path("tr.jsonl"),
                 "--val-out", path("va.jsonl")}),
            kExitOk);
  EXPECT_EQ(read("tr.jsonl"), "{\"video\":\"1\",\"frame\":0,\"boxes\":[]}\n");
  EXPECT_EQ(read("va.jsonl"), "{\"video\":\"3\",\"frame\":0,\"boxes\":[]}\n");
  EXPECT_EQ(run({"split", "--in", path("in.jsonl"), "--val", "9", "--train-out", path("tr.jsonl"),
                 "--val-out", path("va.jsonl")}),
            kExitInputError);

  ASSERT_EQ(run({"clipindex", "--key", "100", "--window", "64", "--video-len", "2000",
                 "--samples", "8"}),
            kExitOk);
  EXPECT_EQ(out_.str(), "72 80 88 96 104 112 120 128\n");
}

TEST_F(CliTest, SampleWeightsDeterministic) {
  std::string truths;
  for (int f = 0; f < 30; ++f) {
    truths += "{\"video\":\"v\",\"frame\":" + std::to_string(f * 20) +
              ",\"boxes\":[{\"x1\":0,\"y1\":0,\"x2\":1,\"y2\":1,\"label\":" +
              std::to_string(f < 27 ? 0 : 1) + "}]}\n";
  }
  write("t.jsonl", truths);
  write("c.cfg", "classes=a,b\n");
  ASSERT_EQ(run({"--seed", "5", "--config", path("c.cfg"), "sample-weights", "--annotations",
                 path("t.jsonl"), "--target-ratio", "3", "--out", path("w.csv")}),
            kExitOk)
      << err_.str();
  const std::string a = out_.str();
  ASSERT_EQ(run({"--seed", "5", "--threads", "3", "--config", path("c.cfg"), "sample-weights",
                 "--annotations", path("t.jsonl"), "--target-ratio", "3", "--out", path("w.csv")}),
            kExitOk);
  EXPECT_EQ(out_.str(), a);
  EXPECT_EQ(read("w.csv").substr(0, 13), "clip,weight\nv");
}

}  // namespace
}  // namespace crowdact
