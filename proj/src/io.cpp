#include "crowdact/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "crowdact/errors.hpp"

namespace crowdact {

using Json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kRecordKeys{"video", "frame", "boxes"};
const std::set<std::string> kBoxKeys{"x1",     "y1",     "x2",     "y2",     "score",
                                     "label",  "proposal", "person", "ignore", "actions"};

std::string fmt6(double v) { return fmt::format("{:.6f}", v); }

double number(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(where + ": missing '" + key + "'");
  if (!it->is_number()) throw InputError(where + ": '" + key + "' must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw InputError(where + ": '" + key + "' must be finite");
  return v;
}

std::optional<std::int64_t> optional_int(const Json& obj, const char* key,
                                         const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw InputError(where + ": '" + key + "' must be an integer");
  return it->get<std::int64_t>();
}

std::string extras_of(const Json& obj, const std::set<std::string>& known) {
  Json extra = Json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.contains(it.key())) extra[it.key()] = it.value();
  }
  return extra.empty() ? std::string() : extra.dump();
}

void append_extras(std::string& out, const std::string& extra) {
  if (extra.empty()) return;
  const Json obj = Json::parse(extra);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    out += ',';
    out += Json(it.key()).dump();
    out += ':';
    out += it.value().dump();
  }
}

Detection parse_box(const Json& jb, const std::string& where) {
  if (!jb.is_object()) throw InputError(where + ": box must be an object");
  Detection d;
  d.box.x1 = number(jb, "x1", where);
  d.box.y1 = number(jb, "y1", where);
  d.box.x2 = number(jb, "x2", where);
  d.box.y2 = number(jb, "y2", where);
  d.box.score = jb.contains("score") ? number(jb, "score", where) : 1.0;
  if (auto l = optional_int(jb, "label", where)) d.box.label = static_cast<int>(*l);
  d.box.proposal_id = optional_int(jb, "proposal", where);
  d.person_id = optional_int(jb, "person", where);
  if (auto it = jb.find("ignore"); it != jb.end()) {
    if (!it->is_boolean()) throw InputError(where + ": 'ignore' must be a boolean");
    d.ignore = it->get<bool>();
  }
  if (auto it = jb.find("actions"); it != jb.end()) {
    if (!it->is_array()) throw InputError(where + ": 'actions' must be an array");
    for (const auto& v : *it) {
      if (!v.is_number()) throw InputError(where + ": action scores must be numbers");
      d.actions.push_back(v.get<double>());
    }
  }
  if (!d.box.valid()) {
    throw InputError(where + ": box must satisfy x1<=x2, y1<=y2 and score in [0,1]");
  }
  d.extra = extras_of(jb, kBoxKeys);
  return d;
}

}  // namespace

Corpus parse_corpus(std::istream& in, const std::string& source) {
  Corpus corpus;
  std::set<std::pair<std::string, std::int64_t>> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + ": " + e.what());
    }
    if (!j.is_object()) throw InputError(where + ": record must be an object");
    FrameDetections f;
    auto vid = j.find("video");
    if (vid == j.end() || !vid->is_string()) throw InputError(where + ": 'video' must be a string");
    f.video = vid->get<std::string>();
    const auto frame = optional_int(j, "frame", where);
    if (!frame || *frame < 0) throw InputError(where + ": 'frame' must be a non-negative integer");
    f.frame = *frame;
    if (auto boxes = j.find("boxes"); boxes != j.end()) {
      if (!boxes->is_array()) throw InputError(where + ": 'boxes' must be an array");
      for (const auto& jb : *boxes) f.items.push_back(parse_box(jb, where));
    }
    f.extra = extras_of(j, kRecordKeys);
    if (!seen.emplace(f.video, f.frame).second) {
      throw InputError(where + ": duplicate record for " + f.video + ":" +
                       std::to_string(f.frame));
    }
    corpus.push_back(std::move(f));
  }
  return corpus;
}

Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_corpus(in, path.string());
}

std::string format_record(const FrameDetections& frame) {
  std::string out = "{\"video\":" + Json(frame.video).dump() +
                    ",\"frame\":" + std::to_string(frame.frame) + ",\"boxes\":[";
  for (std::size_t i = 0; i < frame.items.size(); ++i) {
    const Detection& d = frame.items[i];
    if (i > 0) out += ',';
    out += fmt::format("{{\"x1\":{},\"y1\":{},\"x2\":{},\"y2\":{},\"score\":{},\"label\":{}",
                       fmt6(d.box.x1), fmt6(d.box.y1), fmt6(d.box.x2), fmt6(d.box.y2),
                       fmt6(d.box.score), d.box.label);
    if (d.box.proposal_id) out += ",\"proposal\":" + std::to_string(*d.box.proposal_id);
    if (d.person_id) out += ",\"person\":" + std::to_string(*d.person_id);
    if (d.ignore) out += ",\"ignore\":true";
    if (!d.actions.empty()) {
      out += ",\"actions\":[";
      for (std::size_t k = 0; k < d.actions.size(); ++k) {
        if (k > 0) out += ',';
        out += fmt6(d.actions[k]);
      }
      out += ']';
    }
    append_extras(out, d.extra);
    out += '}';
  }
  out += ']';
  append_extras(out, frame.extra);
  out += '}';
  return out;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& f : corpus) out << format_record(f) << '\n';
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_corpus(out, corpus);
}

void check_action_lengths(const Corpus& corpus, std::size_t num_classes) {
  for (const auto& f : corpus) {
    for (const auto& d : f.items) {
      if (!d.actions.empty() && d.actions.size() != num_classes) {
        throw InputError(fmt::format("{}:{}: {} action scores, class set has {}", f.video,
                                     f.frame, d.actions.size(), num_classes));
      }
    }
  }
}

std::pair<Corpus, Corpus> split_by_video(const Corpus& corpus,
                                         const std::vector<std::string>& val_ids) {
  std::set<std::string> videos;
  for (const auto& f : corpus) videos.insert(f.video);
  const std::set<std::string> val(val_ids.begin(), val_ids.end());
  for (const auto& v : val) {
    if (!videos.contains(v)) throw InputError("split: unknown video id '" + v + "'");
  }
  std::pair<Corpus, Corpus> out;
  for (const auto& f : corpus) (val.contains(f.video) ? out.second : out.first).push_back(f);
  return out;
}

std::vector<ClipProfile> clip_profiles(const Corpus& truths) {
  std::vector<ClipProfile> profiles;
  for (const auto& f : truths) {
    ClipProfile p;
    p.id = f.video + ":" + std::to_string(f.frame);
    for (const auto& t : f.items) {
      if (!t.ignore) p.actions.push_back(t.box.label);
    }
    if (!p.actions.empty()) profiles.push_back(std::move(p));
  }
  return profiles;
}

int ActionLabelSet::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError("unknown action class '" + name + "'");
  return static_cast<int>(it - names.begin());
}

void ActionLabelSet::validate() const {
  std::set<std::string> uniq(names.begin(), names.end());
  if (uniq.size() != names.size()) throw ConfigError("action class names must be unique");
  for (const auto& [t, a] : pairs) {
    index_of(t);
    index_of(a);
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (auto t = trim(cur); !t.empty()) out.push_back(std::move(t));
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + s + "' is not a number");
  }
}

Config Config::parse(const std::string& text, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> Config::get_double(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  return parse_double(*v, source_ + " " + key);
}

std::optional<int> Config::get_int(const std::string& key) const {
  auto v = get_double(key);
  if (!v) return std::nullopt;
  if (*v != std::floor(*v)) throw ConfigError(source_ + " " + key + ": expected an integer");
  return static_cast<int>(*v);
}

std::optional<std::vector<double>> Config::get_doubles(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  std::vector<double> out;
  for (const auto& s : split_list(*v)) out.push_back(parse_double(s, source_ + " " + key));
  return out;
}

std::optional<std::vector<std::string>> Config::get_strings(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  return split_list(*v);
}

ActionLabelSet Config::label_set() const {
  ActionLabelSet set;
  auto names = get_strings("classes");
  if (!names || names->empty()) throw ConfigError(source_ + ": 'classes' is required");
  set.names = *names;
  if (auto pairs = get_strings("pairs")) {
    for (const auto& p : *pairs) {
      const auto parts = split_list(p, ':');
      if (parts.size() != 2) throw ConfigError(source_ + ": pairs entries are together:alone");
      set.pairs.emplace_back(parts[0], parts[1]);
    }
  }
  set.validate();
  return set;
}

}  // namespace crowdact
