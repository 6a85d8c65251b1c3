#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dagfm/data/dataset.hpp"
#include "dagfm/distill/pipeline.hpp"

namespace dagfm {

/// Parsed `[section]` / `key = value` text, keyed by "section.key". Lines
/// starting with '#' or ';' are comments, as is anything from a '#' or ';'
/// that follows whitespace. Keys outside any section, repeated
/// keys and malformed lines are ParseErrors.
using ConfigEntries = std::map<std::string, std::string>;
ConfigEntries parse_config_text(const std::string& text);

// Every accepted "section.key".
const std::vector<std::string>& config_keys();

/// A fully resolved run: data, both model specs (vocabularies are filled in
/// from the data later), stage settings and output location.
struct RunConfig {
  std::string data_path;
  std::size_t min_freq = 0;
  SplitRatios split = kDefaultSplit;
  std::uint64_t split_seed = kDefaultSplitSeed;
  DistillPlan plan;
  std::string out_dir = "out";
};

// Unknown keys and unparsable values are ConfigErrors naming the key.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

SplitRatios parse_split(const std::string& text);

}  // namespace dagfm
