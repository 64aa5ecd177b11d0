#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "crowdact/assignment.hpp"
#include "crowdact/cli.hpp"
#include "crowdact/errors.hpp"
#include "crowdact/features.hpp"
#include "crowdact/fusion.hpp"
#include "crowdact/geometry.hpp"
#include "crowdact/metrics.hpp"
#include "crowdact/postproc.hpp"
#include "crowdact/sampling.hpp"
#include "crowdact/suppression.hpp"

namespace py = pybind11;
using namespace crowdact;

namespace {

using Nested = std::vector<std::vector<std::vector<double>>>;

std::vector<ScoredFlag> to_flags(const std::vector<std::pair<double, bool>>& ranked) {
  std::vector<ScoredFlag> flags;
  for (const auto& [s, tp] : ranked) {
    flags.push_back({s, tp ? MatchFlag::kTruePositive : MatchFlag::kFalsePositive});
  }
  return flags;
}

std::vector<ClipProfile> to_profiles(const std::vector<std::vector<int>>& clips) {
  std::vector<ClipProfile> p;
  for (std::size_t i = 0; i < clips.size(); ++i) p.push_back({std::to_string(i), clips[i]});
  return p;
}

FeatureGrid to_grid(const Nested& g) {
  if (g.empty() || g[0].empty() || g[0][0].empty()) throw InputError("grid must be non-empty");
  const int c = static_cast<int>(g.size());
  const int h = static_cast<int>(g[0].size());
  const int w = static_cast<int>(g[0][0].size());
  std::vector<double> flat;
  for (const auto& plane : g) {
    if (static_cast<int>(plane.size()) != h) throw InputError("ragged grid");
    for (const auto& row : plane) {
      if (static_cast<int>(row.size()) != w) throw InputError("ragged grid");
      flat.insert(flat.end(), row.begin(), row.end());
    }
  }
  return FeatureGrid(c, h, w, std::move(flat));
}

Nested from_grid(const FeatureGrid& g) {
  Nested out(static_cast<std::size_t>(g.channels()),
             std::vector<std::vector<double>>(static_cast<std::size_t>(g.height()),
                                              std::vector<double>(static_cast<std::size_t>(g.width()))));
  for (int c = 0; c < g.channels(); ++c)
    for (int y = 0; y < g.height(); ++y)
      for (int x = 0; x < g.width(); ++x) out[c][y][x] = g.at(c, y, x);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Crowded-scene detection and action post-processing primitives";

  auto input_error = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  (void)input_error;

  py::class_<Box>(m, "Box")
      .def(py::init([](double x1, double y1, double x2, double y2, double score, int label,
                       std::optional<std::int64_t> proposal_id) {
             return Box{x1, y1, x2, y2, score, label, proposal_id};
           }),
           py::arg("x1"), py::arg("y1"), py::arg("x2"), py::arg("y2"), py::arg("score") = 0.0,
           py::arg("label") = 0, py::arg("proposal_id") = py::none())
      .def_readwrite("x1", &Box::x1)
      .def_readwrite("y1", &Box::y1)
      .def_readwrite("x2", &Box::x2)
      .def_readwrite("y2", &Box::y2)
      .def_readwrite("score", &Box::score)
      .def_readwrite("label", &Box::label)
      .def_readwrite("proposal_id", &Box::proposal_id)
      .def("__eq__", [](const Box& a, const Box& b) { return a == b; })
      .def("__repr__", [](const Box& b) {
        std::ostringstream s;
        s << "Box(" << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2
          << ", score=" << b.score << ", label=" << b.label << ")";
        return s.str();
      });

  m.def("iou", &iou);
  m.def("hflip_box", &hflip_box, py::arg("box"), py::arg("frame_width"));
  m.def("jitter_box", &jitter_box, py::arg("box"), py::arg("ratio"), py::arg("seed"));

  m.def(
      "greedy_nms",
      [](const std::vector<Box>& boxes, double iou_threshold, double score_floor) {
        return greedy_nms_indices(boxes, {iou_threshold, score_floor});
      },
      py::arg("boxes"), py::arg("iou_threshold"), py::arg("score_floor") = 0.0,
      "Indices of kept boxes in descending score order.");
  m.def(
      "set_nms",
      [](const std::vector<Box>& boxes, double iou_threshold, double score_floor) {
        return set_nms_indices(boxes, {iou_threshold, score_floor});
      },
      py::arg("boxes"), py::arg("iou_threshold"), py::arg("score_floor") = 0.0);

  m.def(
      "min_cost_assignment",
      [](const std::vector<std::vector<double>>& cost) {
        const std::size_t rows = cost.size();
        const std::size_t cols = rows ? cost[0].size() : 0;
        CostMatrix cm(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
          if (cost[i].size() != cols) throw InputError("ragged cost matrix");
          for (std::size_t j = 0; j < cols; ++j) cm.at(i, j) = cost[i][j];
        }
        const Assignment a = min_cost_assignment(cm);
        return py::make_tuple(a.row_to_col, a.total_cost);
      },
      py::arg("cost"), "Returns (row_to_col, total_cost); unassigned rows map to -1.");
  m.def(
      "emd_set_distance",
      [](const std::vector<Box>& preds, const std::vector<Box>& truths, double lambda,
         double miss_penalty) {
        const EmdResult r = emd_set_distance(preds, truths, {lambda, miss_penalty});
        return py::make_tuple(r.value, r.matching);
      },
      py::arg("preds"), py::arg("truths"), py::arg("lam") = 1.0, py::arg("miss_penalty") = 1.0);

  m.def(
      "average_precision",
      [](const std::vector<std::pair<double, bool>>& ranked, std::size_t total_truths) {
        return average_precision(pr_curve(to_flags(ranked), total_truths));
      },
      py::arg("flags"), py::arg("total_truths"),
      "flags: (score, is_true_positive) pairs pooled over all frames.");
  m.def(
      "log_average_miss_rate",
      [](const std::vector<std::pair<double, bool>>& ranked, std::size_t total_truths,
         std::size_t num_images, double fppi_lo, double fppi_hi, int num_points) {
        MmrConfig cfg{fppi_lo, fppi_hi, num_points};
        cfg.validate();
        return log_average_miss_rate(mr_fppi_curve(to_flags(ranked), total_truths, num_images),
                                     cfg);
      },
      py::arg("flags"), py::arg("total_truths"), py::arg("num_images"), py::arg("fppi_lo") = 0.01,
      py::arg("fppi_hi") = 100.0, py::arg("num_points") = 9);

  m.def(
      "average_scores",
      [](const std::vector<ActionScoreVector>& v, const std::vector<double>& w) {
        return average_scores(v, w);
      },
      py::arg("vectors"), py::arg("weights"));

  m.def(
      "scene_reweight_score",
      [](double score, double ratio, double boost, double damp) {
        SceneRule r;
        r.boost = boost;
        r.damp = damp;
        r.action_index = 0;
        const std::vector<SceneRule> rules{r};
        const std::vector<double> ratios{ratio};
        return scene_reweight({score}, ratios, rules)[0];
      },
      py::arg("score"), py::arg("ratio"), py::arg("boost"), py::arg("damp"));
  m.def(
      "group_alone_reweight",
      [](const ActionScoreVector& scores, double max_iou,
         const std::vector<std::tuple<int, int, double, double>>& pairs) {
        std::vector<GroupPair> gp;
        for (const auto& [t, a, tau, beta] : pairs) {
          GroupPair p;
          p.together_index = t;
          p.alone_index = a;
          p.tau = tau;
          p.beta = beta;
          gp.push_back(p);
        }
        return group_alone_reweight(scores, max_iou, gp);
      },
      py::arg("scores"), py::arg("max_iou"), py::arg("pairs"),
      "pairs: (together_index, alone_index, tau, beta) tuples.");

  m.def(
      "clip_weights",
      [](const std::vector<std::vector<int>>& clips, std::size_t num_classes, double gamma) {
        const auto p = to_profiles(clips);
        return clip_weights(p, class_counts(p, num_classes), gamma);
      },
      py::arg("clips"), py::arg("num_classes"), py::arg("gamma"));
  m.def(
      "expected_ratio",
      [](const std::vector<std::vector<int>>& clips, const std::vector<double>& weights,
         std::size_t num_classes) { return expected_ratio(to_profiles(clips), weights, num_classes); },
      py::arg("clips"), py::arg("weights"), py::arg("num_classes"));
  m.def(
      "tune_gamma",
      [](const std::vector<std::vector<int>>& clips, std::size_t num_classes, double target) {
        const GammaTuning t = tune_gamma(to_profiles(clips), num_classes, target);
        py::dict d;
        d["gamma"] = t.gamma;
        d["achieved_ratio"] = t.achieved_ratio;
        d["iterations"] = t.iterations;
        d["clamped"] = t.clamped;
        return d;
      },
      py::arg("clips"), py::arg("num_classes"), py::arg("target_ratio"));
  m.def(
      "sample_clips",
      [](const std::vector<double>& weights, std::size_t n, std::uint64_t seed, int threads) {
        py::gil_scoped_release release;
        return sample_clips(weights, n, seed, threads);
      },
      py::arg("weights"), py::arg("n"), py::arg("seed"), py::arg("threads") = 1);

  m.def(
      "roi_align",
      [](const Nested& grid, const Box& roi, int out_h, int out_w, int sampling_ratio) {
        return from_grid(roi_align_2d(to_grid(grid), roi, out_h, out_w, sampling_ratio));
      },
      py::arg("grid"), py::arg("roi"), py::arg("out_h"), py::arg("out_w"),
      py::arg("sampling_ratio") = 2, "grid is nested [channel][row][col].");
  m.def("clip_frame_indices", &clip_frame_indices, py::arg("key"), py::arg("window"), py::arg("n"),
        py::arg("video_len"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int rc = 0;
        {
          py::gil_scoped_release release;
          rc = run_cli(args, out, err);
        }
        return py::make_tuple(rc, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
