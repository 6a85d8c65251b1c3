#include "dagfm/data/schema.hpp"

#include <fstream>
#include <map>

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

namespace {

std::string at_line(std::size_t line_number) {
  return line_number == 0 ? std::string() : " (line " + std::to_string(line_number) + ")";
}

std::uint8_t parse_label(std::string_view text, std::size_t line_number) {
  if (text == "1") return 1;
  if (text == "0") return 0;
  throw ParseError("label must be 0 or 1, got '" + std::string(text) + "'" + at_line(line_number));
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

FieldVocab::FieldVocab(std::string name, std::vector<std::string> values)
    : name_(std::move(name)), values_(std::move(values)) {
  lookup_.reserve(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!lookup_.emplace(values_[i], static_cast<FieldIndex>(i)).second) {
      throw ParseError("field '" + name_ + "' lists value '" + values_[i] + "' twice");
    }
  }
}

FieldIndex FieldVocab::encode(std::string_view value) const {
  auto it = lookup_.find(std::string(value));
  return it == lookup_.end() ? oov_index() : it->second;
}

const std::string& FieldVocab::decode(FieldIndex index) const {
  static const std::string oov;
  if (index < values_.size()) return values_[index];
  if (index == oov_index()) return oov;
  throw LookupError("index " + std::to_string(index) + " is out of range for field '" + name_ + "'");
}

FieldSchema::FieldSchema(std::vector<FieldVocab> fields, std::size_t min_freq)
    : fields_(std::move(fields)), min_freq_(min_freq) {
  if (fields_.size() < 2) {
    throw ConfigError("schema needs at least two feature fields, got " + std::to_string(fields_.size()));
  }
}

std::vector<std::size_t> FieldSchema::vocab_rows() const {
  std::vector<std::size_t> rows;
  rows.reserve(fields_.size());
  for (const auto& f : fields_) rows.push_back(f.rows());
  return rows;
}

std::size_t FieldSchema::total_features() const {
  std::size_t total = 0;
  for (const auto& f : fields_) total += f.rows();
  return total;
}

nlohmann::json FieldSchema::to_json() const {
  nlohmann::json fields = nlohmann::json::array();
  for (const auto& f : fields_) fields.push_back({{"name", f.name()}, {"values", f.values()}});
  return {{"fields", fields}, {"min_freq", min_freq_}};
}

FieldSchema FieldSchema::from_json(const nlohmann::json& j) {
  try {
    std::vector<FieldVocab> fields;
    for (const auto& f : j.at("fields")) {
      fields.emplace_back(f.at("name").get<std::string>(), f.at("values").get<std::vector<std::string>>());
    }
    return FieldSchema(std::move(fields), j.at("min_freq").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed schema JSON: ") + e.what());
  }
}

void FieldSchema::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write schema to " + path.string());
  out << to_json().dump(2) << "\n";
}

FieldSchema FieldSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read schema from " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("schema " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  line = strip_cr(line);
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cols.push_back(line.substr(start));
      return cols;
    }
    cols.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

FieldSchema build_vocab(const std::filesystem::path& csv_path, std::size_t min_freq) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + csv_path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError(csv_path.string() + " is empty; expected header 'label,<fields>'");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "label") {
    throw ParseError("first header column must be 'label'" + at_line(1));
  }
  const std::size_t m = header.size() - 1;
  if (m < 2) throw ConfigError("schema needs at least two feature fields, got " + std::to_string(m));

  // Per field: value -> (count, first-seen order).
  struct Seen {
    std::size_t count = 0;
    std::size_t order = 0;
  };
  std::vector<std::unordered_map<std::string, Seen>> counts(m);
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (strip_cr(line).empty()) continue;
    auto cols = split_csv_line(line);
    if (cols.size() != m + 1) {
      throw ParseError("expected " + std::to_string(m + 1) + " columns, got " + std::to_string(cols.size()) +
                       at_line(line_number));
    }
    parse_label(cols[0], line_number);
    for (std::size_t f = 0; f < m; ++f) {
      auto [it, inserted] = counts[f].try_emplace(std::string(cols[f + 1]));
      if (inserted) it->second.order = counts[f].size() - 1;
      ++it->second.count;
    }
  }

  std::vector<FieldVocab> fields;
  fields.reserve(m);
  for (std::size_t f = 0; f < m; ++f) {
    std::map<std::size_t, std::string> kept;
    for (const auto& [value, seen] : counts[f]) {
      if (seen.count >= min_freq) kept.emplace(seen.order, value);
    }
    std::vector<std::string> values;
    values.reserve(kept.size());
    for (auto& [order, value] : kept) values.push_back(value);
    fields.emplace_back(std::string(header[f + 1]), std::move(values));
  }
  return FieldSchema(std::move(fields), min_freq);
}

Instance encode_instance(const FieldSchema& schema, std::span<const std::string_view> row, std::size_t line_number) {
  if (row.size() != schema.num_fields() + 1) {
    throw ParseError("expected " + std::to_string(schema.num_fields() + 1) + " columns, got " +
                     std::to_string(row.size()) + at_line(line_number));
  }
  Instance inst;
  inst.label = parse_label(row[0], line_number);
  inst.indices.reserve(schema.num_fields());
  for (std::size_t f = 0; f < schema.num_fields(); ++f) inst.indices.push_back(schema.field(f).encode(row[f + 1]));
  return inst;
}

}  // namespace dagfm
