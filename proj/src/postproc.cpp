#include "crowdact/postproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "crowdact/errors.hpp"
#include "crowdact/geometry.hpp"

namespace crowdact {

void LabelMask::validate() const {
  if (width <= 0 || height <= 0) throw InputError("label mask: dimensions must be positive");
  if (ids.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InputError("label mask: raster size does not match dimensions");
  }
  std::array<bool, 256> seen{};
  for (const auto v : ids) seen[v] = true;
  for (int v = 0; v < 256; ++v) {
    if (seen[static_cast<std::size_t>(v)] && !names.contains(v)) {
      throw InputError("label mask: raster id " + std::to_string(v) + " missing from name table");
    }
  }
}

int LabelMask::id_of(const std::string& name) const {
  for (const auto& [id, n] : names) {
    if (n == name) return id;
  }
  throw ConfigError("label mask: no scene class named '" + name + "'");
}

namespace {

std::string read_token(std::istream& in) {
  std::string tok;
  while (in) {
    in >> std::ws;
    if (in.peek() == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    in >> tok;
    break;
  }
  return tok;
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(what + ": expected integer, got '" + s + "'");
  }
}

}  // namespace

LabelMask read_label_mask(const std::filesystem::path& pgm, const std::filesystem::path& names) {
  std::ifstream in(pgm, std::ios::binary);
  if (!in) throw InputError("cannot open mask " + pgm.string());
  const std::string what = "mask " + pgm.string();
  if (read_token(in) != "P5") throw InputError(what + ": not a binary P5 raster");
  LabelMask m;
  m.width = parse_int(read_token(in), what);
  m.height = parse_int(read_token(in), what);
  const int maxval = parse_int(read_token(in), what);
  if (maxval <= 0 || maxval > 255) throw InputError(what + ": only 8-bit rasters are supported");
  in.get();  // single whitespace before the raster
  if (m.width <= 0 || m.height <= 0) throw InputError(what + ": dimensions must be positive");
  m.ids.resize(static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height));
  in.read(reinterpret_cast<char*>(m.ids.data()), static_cast<std::streamsize>(m.ids.size()));
  if (in.gcount() != static_cast<std::streamsize>(m.ids.size())) {
    throw InputError(what + ": truncated raster");
  }

  std::ifstream table(names);
  if (!table) throw InputError("cannot open mask name table " + names.string());
  std::string line;
  int lineno = 0;
  while (std::getline(table, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string id_tok;
    ls >> id_tok;
    std::string rest;
    std::getline(ls >> std::ws, rest);
    while (!rest.empty() && (rest.back() == '\r' || rest.back() == ' ')) rest.pop_back();
    if (id_tok.rfind("id=", 0) != 0 || rest.rfind("name=", 0) != 0) {
      throw InputError(names.string() + ":" + std::to_string(lineno) +
                       ": expected 'id=<int> name=<string>'");
    }
    const int id = parse_int(id_tok.substr(3), names.string() + ":" + std::to_string(lineno));
    if (id < 0 || id > 255) throw InputError(names.string() + ": id out of 8-bit range");
    m.names[id] = rest.substr(5);
  }
  m.validate();
  return m;
}

double scene_overlap_ratio(const Box& b, const LabelMask& m, int label, OverlapRegion region) {
  if (!m.names.contains(label)) {
    throw InputError("scene_overlap_ratio: unknown scene id " + std::to_string(label));
  }
  double y_top = b.y1;
  if (region == OverlapRegion::kFeet) y_top = b.y2 - 0.2 * (b.y2 - b.y1);
  // Pixel x is inside when x1 <= x + 0.5 < x2.
  const auto lo = [](double v) { return static_cast<long>(std::ceil(v - 0.5)); };
  const long cx0 = std::max(0L, lo(b.x1));
  const long cx1 = std::min(static_cast<long>(m.width), lo(b.x2));
  const long cy0 = std::max(0L, lo(y_top));
  const long cy1 = std::min(static_cast<long>(m.height), lo(b.y2));
  if (cx0 >= cx1 || cy0 >= cy1) return 0.0;
  std::size_t hits = 0;
  for (long y = cy0; y < cy1; ++y) {
    for (long x = cx0; x < cx1; ++x) {
      if (m.at(static_cast<int>(x), static_cast<int>(y)) == label) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>((cx1 - cx0) * (cy1 - cy0));
}

namespace {

std::map<std::string, std::string> parse_fields(std::istringstream& ls, const std::string& where) {
  std::map<std::string, std::string> kv;
  std::string tok;
  while (ls >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(where + ": expected key=value, got '" + tok + "'");
    }
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

double number(const std::map<std::string, std::string>& kv, const std::string& key,
              const std::string& where) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ConfigError(where + ": missing '" + key + "'");
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size() || !std::isfinite(v)) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + key + "' is not a number");
  }
}

const std::string& text(const std::map<std::string, std::string>& kv, const std::string& key,
                        const std::string& where) {
  auto it = kv.find(key);
  if (it == kv.end() || it->second.empty()) throw ConfigError(where + ": missing '" + key + "'");
  return it->second;
}

int resolve(const std::vector<std::string>& names, const std::string& n, const std::string& where) {
  auto it = std::find(names.begin(), names.end(), n);
  if (it == names.end()) throw ConfigError(where + ": unknown action class '" + n + "'");
  return static_cast<int>(it - names.begin());
}

}  // namespace

RuleSet parse_rules(const std::string& text_in, const std::vector<std::string>& action_names) {
  RuleSet rules;
  std::istringstream in(text_in);
  std::string line;
  int lineno = 0;
  std::set<int> paired;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    const std::string where = "rules line " + std::to_string(lineno);
    if (head == "pair") {
      const auto kv = parse_fields(ls, where);
      GroupPair p;
      p.together = text(kv, "together", where);
      p.alone = text(kv, "alone", where);
      p.tau = number(kv, "tau", where);
      p.beta = number(kv, "beta", where);
      if (p.tau < 0.0 || p.tau > 1.0 || p.beta < 0.0 || p.beta > 1.0) {
        throw ConfigError(where + ": tau and beta must lie in [0, 1]");
      }
      p.together_index = resolve(action_names, p.together, where);
      p.alone_index = resolve(action_names, p.alone, where);
      if (p.together_index == p.alone_index) {
        throw ConfigError(where + ": together and alone must differ");
      }
      if (!paired.insert(p.together_index).second || !paired.insert(p.alone_index).second) {
        throw ConfigError(where + ": class already used by another pair");
      }
      rules.pairs.push_back(std::move(p));
    } else {
      std::istringstream all(line);
      const auto kv = parse_fields(all, where);
      SceneRule r;
      r.scene = text(kv, "scene", where);
      r.action = text(kv, "action", where);
      r.boost = number(kv, "boost", where);
      r.damp = number(kv, "damp", where);
      if (!(r.boost >= 1.0 && r.damp <= 1.0 && r.damp > 0.0)) {
        throw ConfigError(where + ": require boost >= 1 >= damp > 0");
      }
      if (auto it = kv.find("region"); it != kv.end()) {
        if (it->second == "feet") {
          r.region = OverlapRegion::kFeet;
        } else if (it->second != "full") {
          throw ConfigError(where + ": region must be 'full' or 'feet'");
        }
      }
      r.action_index = resolve(action_names, r.action, where);
      rules.scene_rules.push_back(std::move(r));
    }
  }
  return rules;
}

RuleSet read_rules(const std::filesystem::path& path,
                   const std::vector<std::string>& action_names) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rules file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str(), action_names);
}

ActionScoreVector scene_reweight(const ActionScoreVector& scores, std::span<const double> ratios,
                                 std::span<const SceneRule> rules) {
  if (ratios.size() != rules.size()) throw InputError("scene_reweight: one ratio per rule");
  ActionScoreVector out = scores;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    if (r.action_index < 0 || static_cast<std::size_t>(r.action_index) >= out.size()) {
      throw InputError("scene_reweight: rule targets unknown action class '" + r.action + "'");
    }
    if (!(ratios[i] >= 0.0 && ratios[i] <= 1.0)) {
      throw InputError("scene_reweight: overlap ratio outside [0, 1]");
    }
    double& s = out[static_cast<std::size_t>(r.action_index)];
    s = std::clamp(s * (r.damp + (r.boost - r.damp) * ratios[i]), 0.0, 1.0);
  }
  return out;
}

double max_neighbor_iou(std::span<const Box> boxes, std::size_t idx) {
  if (idx >= boxes.size()) throw InputError("max_neighbor_iou: index out of range");
  double best = 0.0;
  for (std::size_t j = 0; j < boxes.size(); ++j) {
    if (j != idx) best = std::max(best, iou(boxes[idx], boxes[j]));
  }
  return best;
}

ActionScoreVector group_alone_reweight(const ActionScoreVector& scores, double max_iou,
                                       std::span<const GroupPair> pairs) {
  std::set<int> used;
  for (const auto& p : pairs) {
    const auto bad = [&](int i) { return i < 0 || static_cast<std::size_t>(i) >= scores.size(); };
    if (bad(p.together_index) || bad(p.alone_index) || p.together_index == p.alone_index) {
      throw InputError("group_alone_reweight: pair references invalid classes");
    }
    if (!used.insert(p.together_index).second || !used.insert(p.alone_index).second) {
      throw InputError("group_alone_reweight: pairs share a class");
    }
  }
  ActionScoreVector out = scores;
  for (const auto& p : pairs) {
    if (!(max_iou < p.tau)) continue;
    double& together = out[static_cast<std::size_t>(p.together_index)];
    double& alone = out[static_cast<std::size_t>(p.alone_index)];
    const double moved = std::min(p.beta * together, std::max(0.0, 1.0 - alone));
    alone += moved;
    together -= moved;
  }
  return out;
}

FrameDetections reweight_frame(const FrameDetections& frame, const RuleSet& rules,
                               const LabelMask* mask) {
  if (!rules.scene_rules.empty() && mask == nullptr) {
    throw InputError("reweight: no scene mask for " + frame.video + ":" +
                     std::to_string(frame.frame));
  }
  std::vector<int> scene_ids;
  for (const auto& r : rules.scene_rules) scene_ids.push_back(mask->id_of(r.scene));

  const std::vector<Box> boxes = boxes_of(frame.items);
  FrameDetections out = frame;
  for (std::size_t i = 0; i < out.items.size(); ++i) {
    auto& d = out.items[i];
    if (d.actions.empty()) continue;
    std::vector<double> ratios;
    for (std::size_t r = 0; r < rules.scene_rules.size(); ++r) {
      ratios.push_back(
          scene_overlap_ratio(d.box, *mask, scene_ids[r], rules.scene_rules[r].region));
    }
    d.actions = scene_reweight(d.actions, ratios, rules.scene_rules);
    if (!rules.pairs.empty()) {
      d.actions = group_alone_reweight(d.actions, max_neighbor_iou(boxes, i), rules.pairs);
    }
  }
  return out;
}

}  // namespace crowdact
