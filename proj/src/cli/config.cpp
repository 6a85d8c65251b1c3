#include "dagfm/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// A '#' or ';' after whitespace starts an inline comment.
std::string strip_comment(const std::string& line) {
  for (std::size_t k = 1; k < line.size(); ++k) {
    if ((line[k] == '#' || line[k] == ';') && (line[k - 1] == ' ' || line[k - 1] == '\t')) return line.substr(0, k);
  }
  return line;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::logic_error&) {
    throw ConfigError("config key " + key + ": '" + v + "' is not a number");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("config key " + key + ": '" + v + "' is not a nonnegative integer");
  }
  try {
    return std::stoull(v);
  } catch (const std::logic_error&) {
    throw ConfigError("config key " + key + ": '" + v + "' is out of range");
  }
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const std::string& item : split_list(v)) out.push_back(to_uint(key, item));
  return out;
}

void apply_stage(StageSettings& s, const std::string& field, const std::string& key, const std::string& v) {
  if (field == "epochs") s.epochs = to_uint(key, v);
  else if (field == "lr") s.lr = to_double(key, v);
  else if (field == "batch_size") s.batch_size = to_uint(key, v);
  else if (field == "patience") s.patience = to_uint(key, v);
  else if (field == "l2") s.l2 = to_double(key, v);
}

void apply_model(ModelSpec& spec, const std::string& field, const std::string& key, const std::string& v) {
  if (field == "kind") spec.kind = parse_model_kind(v);
  else if (field == "fn") spec.fn = parse_interaction_fn(v);
  else if (field == "embed_dim") spec.embed_dim = to_uint(key, v);
  else if (field == "depth") spec.depth = to_uint(key, v);
  else if (field == "cin_layers") spec.cin_layers = to_sizes(key, v);
  else if (field == "mlp_hidden") spec.mlp_hidden = to_sizes(key, v);
  else if (field == "plus_states") spec.plus_states = parse_plus_states(v);
}

}  // namespace

ConfigEntries parse_config_text(const std::string& text) {
  ConfigEntries entries;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  std::size_t number = 0;
  while (std::getline(ss, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    line = trim(strip_comment(line));
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("config line " + std::to_string(number) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError("config line " + std::to_string(number) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line " + std::to_string(number) + ": expected key = value");
    if (section.empty()) throw ParseError("config line " + std::to_string(number) + ": key outside any section");
    const std::string key = section + "." + trim(line.substr(0, eq));
    if (!entries.emplace(key, trim(line.substr(eq + 1))).second) {
      throw ParseError("config line " + std::to_string(number) + ": duplicate key " + key);
    }
  }
  return entries;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k{"data.path",      "data.min_freq", "data.split",     "data.split_seed",
                               "distill.alpha",  "distill.beta",  "distill.kd_space", "run.seed",
                               "run.out",        "teacher.checkpoint"};
    for (const char* model : {"teacher", "student"}) {
      for (const char* f : {"kind", "fn", "embed_dim", "depth", "cin_layers", "mlp_hidden", "plus_states"}) {
        k.push_back(std::string(model) + "." + f);
      }
    }
    for (const char* stage : {"train.teacher", "train.distill", "train.finetune"}) {
      for (const char* f : {"epochs", "lr", "batch_size", "patience", "l2"}) k.push_back(std::string(stage) + "." + f);
    }
    std::sort(k.begin(), k.end());
    return k;
  }();
  return keys;
}

SplitRatios parse_split(const std::string& text) {
  const auto parts = split_list(text);
  if (parts.size() != 3) throw ConfigError("split needs three comma-separated ratios, got '" + text + "'");
  SplitRatios r{};
  for (std::size_t k = 0; k < 3; ++k) r[k] = to_double("split", parts[k]);
  return r;
}

RunConfig parse_run_config(const std::string& text) {
  const ConfigEntries entries = parse_config_text(text);
  const auto& keys = config_keys();
  for (const auto& [key, value] : entries) {
    if (!std::binary_search(keys.begin(), keys.end(), key)) throw ConfigError("unknown config key " + key);
  }

  RunConfig cfg;
  cfg.plan.teacher.kind = ModelKind::crossnet;
  cfg.plan.student.kind = ModelKind::dagfm;
  cfg.plan.student.fn = InteractionFn::outer;
  bool student_depth_set = false;
  for (const auto& [key, v] : entries) {
    const auto dot = key.rfind('.');
    const std::string section = key.substr(0, dot);
    const std::string field = key.substr(dot + 1);
    if (key == "data.path") cfg.data_path = v;
    else if (key == "data.min_freq") cfg.min_freq = to_uint(key, v);
    else if (key == "data.split") cfg.split = parse_split(v);
    else if (key == "data.split_seed") cfg.split_seed = to_uint(key, v);
    else if (key == "distill.alpha") cfg.plan.alpha = to_double(key, v);
    else if (key == "distill.beta") cfg.plan.beta = to_double(key, v);
    else if (key == "distill.kd_space") cfg.plan.kd_space = parse_kd_space(v);
    else if (key == "run.seed") cfg.plan.seed = to_uint(key, v);
    else if (key == "run.out") cfg.out_dir = v;
    else if (key == "teacher.checkpoint") cfg.plan.teacher_checkpoint = v;
    else if (section == "teacher") apply_model(cfg.plan.teacher, field, key, v);
    else if (section == "student") {
      apply_model(cfg.plan.student, field, key, v);
      student_depth_set = student_depth_set || field == "depth";
    } else if (section == "train.teacher") apply_stage(cfg.plan.teacher_stage, field, key, v);
    else if (section == "train.distill") apply_stage(cfg.plan.distill_stage, field, key, v);
    else if (section == "train.finetune") apply_stage(cfg.plan.finetune_stage, field, key, v);
  }
  if (!student_depth_set) cfg.plan.student.depth = cfg.plan.teacher.depth;
  if (cfg.plan.alpha < 0 || cfg.plan.beta < 0 || (cfg.plan.alpha == 0 && cfg.plan.beta == 0)) {
    throw ConfigError("distill.alpha and distill.beta must be nonnegative and not both zero");
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace dagfm
