#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace dagfm {

using FieldIndex = std::uint32_t;

/// Vocabulary of one categorical field. Indices are contiguous from 0 in the
/// order values were first seen; the out-of-vocabulary bucket is `size()`.
class FieldVocab {
 public:
  FieldVocab() = default;
  FieldVocab(std::string name, std::vector<std::string> values);

  const std::string& name() const { return name_; }
  std::size_t size() const { return values_.size(); }
  FieldIndex oov_index() const { return static_cast<FieldIndex>(values_.size()); }
  // Embedding rows needed for this field: vocabulary plus the OOV bucket.
  std::size_t rows() const { return values_.size() + 1; }

  FieldIndex encode(std::string_view value) const;
  // Raw value for an in-vocabulary index; the OOV bucket decodes to "".
  const std::string& decode(FieldIndex index) const;
  const std::vector<std::string>& values() const { return values_; }

 private:
  std::string name_;
  std::vector<std::string> values_;
  std::unordered_map<std::string, FieldIndex> lookup_;
};

/// Ordered categorical fields of a CTR dataset (at least two).
class FieldSchema {
 public:
  FieldSchema() = default;
  FieldSchema(std::vector<FieldVocab> fields, std::size_t min_freq);

  std::size_t num_fields() const { return fields_.size(); }
  const FieldVocab& field(std::size_t i) const { return fields_.at(i); }
  const std::vector<FieldVocab>& fields() const { return fields_; }
  std::size_t min_freq() const { return min_freq_; }

  // Embedding rows per field (vocab size + 1).
  std::vector<std::size_t> vocab_rows() const;
  // Sum over fields of (vocab size + 1).
  std::size_t total_features() const;

  nlohmann::json to_json() const;
  static FieldSchema from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static FieldSchema load(const std::filesystem::path& path);

 private:
  std::vector<FieldVocab> fields_;
  std::size_t min_freq_ = 0;
};

/// One labelled example: a binary label and one index per field.
struct Instance {
  std::uint8_t label = 0;
  std::vector<FieldIndex> indices;
};

// Splits one CSV line on commas. No quoting support.
std::vector<std::string_view> split_csv_line(std::string_view line);

// Reads a CSV with header `label,<field names>` and builds the vocabulary.
// Values seen fewer than `min_freq` times fall into the OOV bucket.
FieldSchema build_vocab(const std::filesystem::path& csv_path, std::size_t min_freq);

// Encodes a raw row (label column first). `line_number` only decorates errors.
Instance encode_instance(const FieldSchema& schema, std::span<const std::string_view> row,
                         std::size_t line_number = 0);

}  // namespace dagfm
