#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crowdact/box.hpp"
#include "crowdact/sampling.hpp"

namespace crowdact {

using Corpus = std::vector<FrameDetections>;

// Line-delimited records, one JSON object per (video, frame):
//   {"video":"v1","frame":20,"boxes":[{"x1":..,"y1":..,"x2":..,"y2":..,
//     "score":..,"label":0,"proposal":3,"person":7,"ignore":true,
//     "actions":[..]}]}
// Reals are written with 6 decimals. Unknown keys on records and boxes are
// kept verbatim and written back after the known ones.

/// Throws InputError naming `source` and the 1-based line on malformed
/// input or a repeated (video, frame). Blank lines are skipped.
Corpus parse_corpus(std::istream& in, const std::string& source = "<input>");
Corpus read_corpus(const std::filesystem::path& path);

std::string format_record(const FrameDetections& frame);
void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// Every entry with action scores must carry exactly `num_classes` of them.
void check_action_lengths(const Corpus& corpus, std::size_t num_classes);

/// Partitions frames by video id. Throws InputError for ids not in corpus.
std::pair<Corpus, Corpus> split_by_video(const Corpus& corpus,
                                         const std::vector<std::string>& val_ids);

/// One clip per truth frame with at least one non-ignored person.
std::vector<ClipProfile> clip_profiles(const Corpus& truths);

/// Ordered action class names plus optional together/alone pairing.
struct ActionLabelSet {
  std::vector<std::string> names;
  std::vector<std::pair<std::string, std::string>> pairs;

  int index_of(const std::string& name) const;
  /// Throws ConfigError on duplicate names or pairs naming unknown classes.
  void validate() const;
};

/// Plain-text `key=value` configuration; '#' starts a comment.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<int> get_int(const std::string& key) const;
  std::optional<std::vector<double>> get_doubles(const std::string& key) const;
  std::optional<std::vector<std::string>> get_strings(const std::string& key) const;
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// `classes=a,b,c` and optional `pairs=together:alone,...`.
  ActionLabelSet label_set() const;

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
};

std::vector<std::string> split_list(const std::string& s, char sep = ',');
double parse_double(const std::string& s, const std::string& what);

}  // namespace crowdact
