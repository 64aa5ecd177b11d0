#include "crowdact/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "crowdact/errors.hpp"
#include "crowdact/fusion.hpp"
#include "crowdact/io.hpp"
#include "crowdact/metrics.hpp"
#include "crowdact/parallel.hpp"
#include "crowdact/postproc.hpp"
#include "crowdact/sampling.hpp"
#include "crowdact/suppression.hpp"
#include "crowdact/features.hpp"

namespace crowdact {

namespace {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string config_path;
  int threads = 1;
};

Config load_config(const GlobalOptions& g) {
  return g.config_path.empty() ? Config{} : Config::load(g.config_path);
}

void emit_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << text;
}

double pick(const std::optional<double>& flag, const Config& cfg, const std::string& key,
            std::optional<double> fallback, const std::string& what) {
  if (flag) return *flag;
  if (auto v = cfg.get_double(key)) return *v;
  if (fallback) return *fallback;
  throw ConfigError(what + " is required (flag or config key '" + key + "')");
}

std::vector<double> pick_list(const std::string& flag, const Config& cfg, const std::string& key,
                              std::vector<double> fallback) {
  if (!flag.empty()) {
    std::vector<double> out;
    for (const auto& s : split_list(flag)) out.push_back(parse_double(s, key));
    return out;
  }
  if (auto v = cfg.get_doubles(key)) return *v;
  return fallback;
}

using FrameKey = std::pair<std::string, std::int64_t>;

std::map<FrameKey, std::size_t> key_index(const Corpus& c) {
  std::map<FrameKey, std::size_t> idx;
  for (std::size_t i = 0; i < c.size(); ++i) idx.emplace(FrameKey{c[i].video, c[i].frame}, i);
  return idx;
}

// --- nms -------------------------------------------------------------------

struct NmsArgs {
  std::string in, out, mode;
  std::optional<double> iou, score_floor;
};

void cmd_nms(const GlobalOptions& g, const NmsArgs& a, std::ostream&) {
  const Config cfg = load_config(g);
  SuppressionConfig sc;
  sc.iou_threshold = pick(a.iou, cfg, "nms.iou", std::nullopt, "NMS IoU threshold");
  sc.score_floor = pick(a.score_floor, cfg, "nms.score_floor", 0.0, "score floor");
  sc.validate();
  const std::string mode = !a.mode.empty() ? a.mode : cfg.get("nms.mode").value_or("greedy");
  if (mode != "greedy" && mode != "set") throw ConfigError("nms mode must be 'greedy' or 'set'");

  Corpus corpus = read_corpus(a.in);
  parallel_for(corpus.size(), g.threads, [&](std::size_t i) {
    auto& frame = corpus[i];
    const auto boxes = boxes_of(frame.items);
    const auto keep = mode == "set" ? set_nms_indices(boxes, sc) : greedy_nms_indices(boxes, sc);
    std::vector<Detection> kept;
    kept.reserve(keep.size());
    for (const auto k : keep) kept.push_back(frame.items[k]);
    frame.items = std::move(kept);
  });
  write_corpus(fs::path(a.out), corpus);
}

// --- fuse ------------------------------------------------------------------

struct FuseArgs {
  std::string a, b, out, weights;
  std::optional<double> match_iou;
};

void cmd_fuse(const GlobalOptions& g, const FuseArgs& f, std::ostream&) {
  const Config cfg = load_config(g);
  FusionConfig fc;
  const auto w = pick_list(f.weights, cfg, "fuse.weights", {1.0, 1.0});
  if (w.size() != 2) throw ConfigError("fuse weights must be two values");
  fc.weight_a = w[0];
  fc.weight_b = w[1];
  fc.match_iou = pick(f.match_iou, cfg, "fuse.match_iou", 0.5, "fuse match IoU");
  fc.validate();

  const Corpus ca = read_corpus(f.a);
  const Corpus cb = read_corpus(f.b);
  const auto b_idx = key_index(cb);
  const auto a_idx = key_index(ca);
  // Frames of a in order, then frames present only in b.
  std::vector<std::pair<const FrameDetections*, const FrameDetections*>> jobs;
  for (const auto& fa : ca) {
    auto it = b_idx.find({fa.video, fa.frame});
    jobs.emplace_back(&fa, it == b_idx.end() ? nullptr : &cb[it->second]);
  }
  for (const auto& fb : cb) {
    if (!a_idx.contains({fb.video, fb.frame})) jobs.emplace_back(nullptr, &fb);
  }
  Corpus out(jobs.size());
  parallel_for(jobs.size(), g.threads, [&](std::size_t i) {
    const auto [pa, pb] = jobs[i];
    FrameDetections empty;
    empty.video = pa ? pa->video : pb->video;
    empty.frame = pa ? pa->frame : pb->frame;
    out[i] = fuse_detections(pa ? *pa : empty, pb ? *pb : empty, fc);
  });
  write_corpus(fs::path(f.out), out);
}

// --- tta-merge -------------------------------------------------------------

struct TtaArgs {
  std::vector<std::string> inputs;
  std::string out, weights;
};

void cmd_tta(const GlobalOptions& g, const TtaArgs& t, std::ostream&) {
  const Config cfg = load_config(g);
  std::vector<Corpus> passes;
  for (const auto& p : t.inputs) passes.push_back(read_corpus(p));
  const auto weights =
      pick_list(t.weights, cfg, "tta.weights", std::vector<double>(passes.size(), 1.0));
  if (weights.size() != passes.size()) throw ConfigError("tta-merge: one weight per input file");

  std::vector<std::map<FrameKey, std::size_t>> idx;
  for (const auto& c : passes) idx.push_back(key_index(c));
  Corpus out = passes.front();
  for (std::size_t p = 1; p < passes.size(); ++p) {
    if (passes[p].size() != out.size()) throw InputError("tta-merge: inputs cover different frames");
  }
  parallel_for(out.size(), g.threads, [&](std::size_t fi) {
    auto& frame = out[fi];
    std::vector<const FrameDetections*> views;
    for (std::size_t p = 0; p < passes.size(); ++p) {
      auto it = idx[p].find({frame.video, frame.frame});
      if (it == idx[p].end()) {
        throw InputError(fmt::format("tta-merge: {}:{} missing from {}", frame.video, frame.frame,
                                     t.inputs[p]));
      }
      views.push_back(&passes[p][it->second]);
      if (views.back()->items.size() != frame.items.size()) {
        throw InputError(fmt::format("tta-merge: box count differs at {}:{} in {}", frame.video,
                                     frame.frame, t.inputs[p]));
      }
    }
    for (std::size_t b = 0; b < frame.items.size(); ++b) {
      std::vector<ActionScoreVector> vecs;
      std::vector<double> scores;
      for (std::size_t p = 0; p < views.size(); ++p) {
        const Box& ref = frame.items[b].box;
        const Box& cur = views[p]->items[b].box;
        if (std::abs(ref.x1 - cur.x1) > 1e-3 || std::abs(ref.y1 - cur.y1) > 1e-3 ||
            std::abs(ref.x2 - cur.x2) > 1e-3 || std::abs(ref.y2 - cur.y2) > 1e-3) {
          throw InputError(fmt::format("tta-merge: box {} at {}:{} differs between passes", b,
                                       frame.video, frame.frame));
        }
        vecs.push_back(views[p]->items[b].actions);
        scores.push_back(cur.score);
      }
      // Detection score and action scores use the same per-pass weights.
      std::vector<ActionScoreVector> score_vecs;
      for (const double s : scores) score_vecs.push_back({s});
      frame.items[b].box.score = average_scores(score_vecs, weights)[0];
      if (!frame.items[b].actions.empty()) frame.items[b].actions = average_scores(vecs, weights);
    }
  });
  write_corpus(fs::path(t.out), out);
}

// --- reweight --------------------------------------------------------------

struct ReweightArgs {
  std::string in, out, rules, masks;
};

struct MaskCache {
  fs::path dir;
  std::map<std::string, std::optional<LabelMask>> by_path;

  const LabelMask* find(const std::string& video, std::int64_t frame) {
    const fs::path per_frame = dir / video / (std::to_string(frame) + ".pgm");
    const fs::path per_video = dir / (video + ".pgm");
    for (const auto& p : {per_frame, per_video}) {
      auto it = by_path.find(p.string());
      if (it == by_path.end()) {
        std::optional<LabelMask> m;
        if (fs::exists(p)) {
          fs::path names = p;
          names.replace_extension(".names");
          m = read_label_mask(p, names);
        }
        it = by_path.emplace(p.string(), std::move(m)).first;
      }
      if (it->second) return &*it->second;
    }
    return nullptr;
  }
};

void cmd_reweight(const GlobalOptions& g, const ReweightArgs& r, std::ostream&) {
  const Config cfg = load_config(g);
  const ActionLabelSet labels = cfg.label_set();
  const RuleSet rules = read_rules(r.rules, labels.names);
  Corpus corpus = read_corpus(r.in);
  check_action_lengths(corpus, labels.names.size());

  // Masks are loaded up front so the workers only read shared state.
  MaskCache cache{r.masks, {}};
  std::vector<const LabelMask*> masks(corpus.size(), nullptr);
  if (!rules.scene_rules.empty()) {
    if (r.masks.empty()) throw ConfigError("reweight: scene rules need --masks");
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      masks[i] = cache.find(corpus[i].video, corpus[i].frame);
    }
  }
  parallel_for(corpus.size(), g.threads, [&](std::size_t i) {
    corpus[i] = reweight_frame(corpus[i], rules, masks[i]);
  });
  write_corpus(fs::path(r.out), corpus);
}

// --- eval-det / eval-act ---------------------------------------------------

struct EvalArgs {
  std::string dets, truths, report, csv, iou_thresholds, class_weights;
  std::optional<double> iou;
};

MmrConfig mmr_from(const Config& cfg) {
  MmrConfig m;
  m.fppi_lo = cfg.get_double("mmr.fppi_lo").value_or(m.fppi_lo);
  m.fppi_hi = cfg.get_double("mmr.fppi_hi").value_or(m.fppi_hi);
  m.num_points = cfg.get_int("mmr.points").value_or(m.num_points);
  m.validate();
  return m;
}

void cmd_eval_det(const GlobalOptions& g, const EvalArgs& e, std::ostream& out) {
  const Config cfg = load_config(g);
  DetEvalConfig dc;
  dc.iou_threshold = pick(e.iou, cfg, "eval.iou", 0.5, "match IoU");
  dc.mmr = mmr_from(cfg);
  const Corpus dets = read_corpus(e.dets);
  const Corpus truths = read_corpus(e.truths);
  const DetReport rep = evaluate_detections(dets, truths, dc, g.threads);
  emit_text(e.report, det_report_text(rep), out);
  if (!e.csv.empty()) emit_text(e.csv, det_report_csv(rep), out);
}

void cmd_eval_act(const GlobalOptions& g, const EvalArgs& e, std::ostream& out) {
  const Config cfg = load_config(g);
  const ActionLabelSet labels = cfg.label_set();
  WfMapConfig wc;
  wc.iou_thresholds = pick_list(e.iou_thresholds, cfg, "eval.iou_thresholds", {0.5});
  wc.class_weights = pick_list(e.class_weights, cfg, "eval.class_weights", {});
  const Corpus dets = read_corpus(e.dets);
  const Corpus truths = read_corpus(e.truths);
  const EvalReport rep = wf_map(dets, truths, labels.names, wc, g.threads);
  emit_text(e.report, eval_report_text(rep), out);
  if (!e.csv.empty()) emit_text(e.csv, eval_report_csv(rep), out);
}

// --- sample-weights --------------------------------------------------------

struct SampleArgs {
  std::string annotations, out;
  std::optional<double> gamma, target_ratio;
  std::optional<std::size_t> draws;
};

void cmd_sample(const GlobalOptions& g, const SampleArgs& s, std::ostream& out) {
  const Config cfg = load_config(g);
  const Corpus truths = read_corpus(s.annotations);
  const auto profiles = clip_profiles(truths);
  if (profiles.empty()) throw InputError("sample-weights: no annotated clips");

  std::vector<std::string> names;
  if (cfg.has("classes")) {
    names = cfg.label_set().names;
  } else {
    int max_label = 0;
    for (const auto& p : profiles) {
      for (const int c : p.actions) max_label = std::max(max_label, c);
    }
    for (int c = 0; c <= max_label; ++c) names.push_back(std::to_string(c));
  }
  const std::size_t nc = names.size();
  const auto counts = class_counts(profiles, nc);

  double gamma = 0.0;
  std::string how;
  std::optional<double> gflag = s.gamma ? s.gamma : cfg.get_double("sample.gamma");
  if (gflag) {
    gamma = *gflag;
    how = "fixed";
  } else {
    const double target = s.target_ratio ? *s.target_ratio
                                         : cfg.get_double("sample.target_ratio").value_or(10.0);
    const GammaTuning t = tune_gamma(profiles, nc, target);
    gamma = t.gamma;
    how = fmt::format("tuned for target {} ({} iterations{})", target, t.iterations,
                      t.clamped ? ", clamped to boundary" : "");
  }
  const auto weights = clip_weights(profiles, counts, gamma);
  const double uniform_ratio =
      expected_ratio(profiles, std::vector<double>(profiles.size(), 1.0), nc);
  const double weighted_ratio = expected_ratio(profiles, weights, nc);

  const std::size_t n = s.draws ? *s.draws : profiles.size();
  const auto draws = sample_clips(weights, n, g.seed, g.threads);
  const auto realized = sampled_class_counts(profiles, draws, nc);
  std::int64_t hi = 0;
  std::int64_t lo = -1;
  std::set<int> present;
  for (const auto& p : profiles) present.insert(p.actions.begin(), p.actions.end());
  bool missing = false;
  for (const int c : present) {
    const auto v = realized[static_cast<std::size_t>(c)];
    hi = std::max(hi, v);
    if (v == 0) missing = true;
    if (lo < 0 || v < lo) lo = v;
  }

  std::string csv = "clip,weight\n";
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    csv += fmt::format("{},{:.6f}\n", profiles[i].id, weights[i]);
  }
  emit_text(s.out, csv, out);

  out << fmt::format("gamma: {:.6f} ({})\n", gamma, how);
  out << fmt::format("expected_ratio_uniform: {:.6f}\n", uniform_ratio);
  out << fmt::format("expected_ratio_weighted: {:.6f}\n", weighted_ratio);
  if (missing || lo <= 0) {
    out << fmt::format("realized_ratio ({} draws, seed {}): inf (a class was never drawn)\n", n,
                       g.seed);
  } else {
    out << fmt::format("realized_ratio ({} draws, seed {}): {:.6f}\n", n, g.seed,
                       static_cast<double>(hi) / static_cast<double>(lo));
  }
}

// --- split -----------------------------------------------------------------

struct SplitArgs {
  std::string in, val, train_out, val_out;
};

void cmd_split(const GlobalOptions&, const SplitArgs& s, std::ostream& out) {
  const Corpus corpus = read_corpus(s.in);
  const auto [train, val] = split_by_video(corpus, split_list(s.val));
  write_corpus(fs::path(s.train_out), train);
  write_corpus(fs::path(s.val_out), val);
  out << fmt::format("train frames: {}\nval frames: {}\n", train.size(), val.size());
}

// --- clipindex -------------------------------------------------------------

struct ClipArgs {
  std::int64_t key = 0;
  std::int64_t window = 64;
  std::int64_t video_len = 0;
  std::vector<std::int64_t> samples;
};

void cmd_clipindex(const GlobalOptions& g, const ClipArgs& c, std::ostream& out) {
  const Config cfg = load_config(g);
  std::vector<std::int64_t> samples = c.samples;
  if (samples.empty()) {
    for (const double v : cfg.get_doubles("clip.samples").value_or(std::vector<double>{32, 8})) {
      samples.push_back(static_cast<std::int64_t>(v));
    }
  }
  const ClipPlan plan = make_clip_plan(c.key, c.window, samples, c.video_len);
  for (const auto& branch : plan.branches) {
    std::string line;
    for (const auto i : branch) line += (line.empty() ? "" : " ") + std::to_string(i);
    out << line << '\n';
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crowded-scene detection and action post-processing toolkit", "crowdact"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for randomized steps");
  app.add_option("--config", g.config_path, "key=value configuration file");
  app.add_option("--threads", g.threads, "Worker threads (output is independent of this)");

  NmsArgs nms;
  auto* s_nms = app.add_subcommand("nms", "Suppress overlapping detections per frame");
  s_nms->add_option("--in", nms.in)->required();
  s_nms->add_option("--out", nms.out)->required();
  s_nms->add_option("--iou", nms.iou, "Suppression IoU threshold");
  s_nms->add_option("--score-floor", nms.score_floor);
  s_nms->add_option("--mode", nms.mode, "greedy or set");

  FuseArgs fuse;
  auto* s_fuse = app.add_subcommand("fuse", "Fuse two detection files");
  s_fuse->add_option("--a", fuse.a)->required();
  s_fuse->add_option("--b", fuse.b)->required();
  s_fuse->add_option("--out", fuse.out)->required();
  s_fuse->add_option("--weights", fuse.weights, "wa,wb (default 1,1)");
  s_fuse->add_option("--match-iou", fuse.match_iou);

  TtaArgs tta;
  auto* s_tta = app.add_subcommand("tta-merge", "Average scores over augmented passes");
  s_tta->add_option("--in", tta.inputs)->required();
  s_tta->add_option("--out", tta.out)->required();
  s_tta->add_option("--weights", tta.weights);

  ReweightArgs rw;
  auto* s_rw = app.add_subcommand("reweight", "Scene and group/alone score re-weighting");
  s_rw->add_option("--in", rw.in)->required();
  s_rw->add_option("--out", rw.out)->required();
  s_rw->add_option("--rules", rw.rules)->required();
  s_rw->add_option("--masks", rw.masks, "Directory of <video>.pgm or <video>/<frame>.pgm");

  EvalArgs ed;
  auto* s_ed = app.add_subcommand("eval-det", "Detection AP and log-average miss rate");
  s_ed->add_option("--dets", ed.dets)->required();
  s_ed->add_option("--truths", ed.truths)->required();
  s_ed->add_option("--iou", ed.iou);
  s_ed->add_option("--report", ed.report);
  s_ed->add_option("--csv", ed.csv);

  EvalArgs ea;
  auto* s_ea = app.add_subcommand("eval-act", "Weighted frame mAP of action scores");
  s_ea->add_option("--dets", ea.dets)->required();
  s_ea->add_option("--truths", ea.truths)->required();
  s_ea->add_option("--iou-thresholds", ea.iou_thresholds);
  s_ea->add_option("--class-weights", ea.class_weights);
  s_ea->add_option("--report", ea.report);
  s_ea->add_option("--csv", ea.csv);

  SampleArgs sw;
  auto* s_sw = app.add_subcommand("sample-weights", "Per-clip weights for class balancing");
  s_sw->add_option("--annotations", sw.annotations)->required();
  s_sw->add_option("--out", sw.out);
  s_sw->add_option("--gamma", sw.gamma);
  s_sw->add_option("--target-ratio", sw.target_ratio);
  s_sw->add_option("--draws", sw.draws);

  SplitArgs sp;
  auto* s_sp = app.add_subcommand("split", "Partition a corpus by video id");
  s_sp->add_option("--in", sp.in)->required();
  s_sp->add_option("--val", sp.val, "Comma-separated validation video ids");
  s_sp->add_option("--train-out", sp.train_out)->required();
  s_sp->add_option("--val-out", sp.val_out)->required();

  ClipArgs ci;
  auto* s_ci = app.add_subcommand("clipindex", "Frame indices sampled around a key frame");
  s_ci->add_option("--key", ci.key)->required();
  s_ci->add_option("--window", ci.window);
  s_ci->add_option("--video-len", ci.video_len)->required();
  s_ci->add_option("--samples", ci.samples, "Samples per branch (default 32 8)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return kExitOk;
    }
    std::string what = e.what();
    // CLI11 reports a mistyped subcommand as a missing one; name it instead.
    for (std::size_t i = 0; i < args.size(); ++i) {
      const std::string& a = args[i];
      if (a == "--seed" || a == "--config" || a == "--threads") {
        ++i;
        continue;
      }
      if (a.rfind("-", 0) == 0) continue;
      if (app.get_subcommand_no_throw(a) == nullptr) what = "unknown subcommand '" + a + "'";
      break;
    }
    err << "error: " << what << "\n\n" << app.help();
    return kExitConfigError;
  }

  try {
    if (g.threads < 1) throw ConfigError("--threads must be at least 1");
    if (*s_nms) cmd_nms(g, nms, out);
    else if (*s_fuse) cmd_fuse(g, fuse, out);
    else if (*s_tta) cmd_tta(g, tta, out);
    else if (*s_rw) cmd_reweight(g, rw, out);
    else if (*s_ed) cmd_eval_det(g, ed, out);
    else if (*s_ea) cmd_eval_act(g, ea, out);
    else if (*s_sw) cmd_sample(g, sw, out);
    else if (*s_sp) cmd_split(g, sp, out);
    else if (*s_ci) cmd_clipindex(g, ci, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitOk;
}

}  // namespace crowdact
