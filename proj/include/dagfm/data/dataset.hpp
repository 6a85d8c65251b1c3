#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dagfm/data/schema.hpp"

namespace dagfm {

/// Encoded instances stored as a dense n x m index matrix plus labels.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t num_fields) : num_fields_(num_fields) {}

  std::size_t num_fields() const { return num_fields_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  void add(const Instance& inst);
  void add(std::span<const FieldIndex> indices, std::uint8_t label);
  void reserve(std::size_t n);

  std::span<const FieldIndex> row(std::size_t k) const {
    return {indices_.data() + k * num_fields_, num_fields_};
  }
  std::uint8_t label(std::size_t k) const { return labels_[k]; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }
  Instance instance(std::size_t k) const;

  // Rows in the given order.
  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  std::size_t num_fields_ = 0;
  std::vector<FieldIndex> indices_;
  std::vector<std::uint8_t> labels_;
};

// Encodes every data row of a CSV file (header skipped) with `schema`.
Dataset load_dataset(const std::filesystem::path& csv_path, const FieldSchema& schema);

using SplitRatios = std::array<double, 3>;

struct DatasetSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
  std::uint64_t seed = 0;
  SplitRatios ratios{};
};

inline constexpr SplitRatios kDefaultSplit{0.8, 0.1, 0.1};
inline constexpr std::uint64_t kDefaultSplitSeed = 42;

// Fisher-Yates permutation of [0, n) driven by a 64-bit Mersenne twister.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// Deterministic shuffle by seed, then contiguous train/validation/test slices.
DatasetSplit split_dataset(const Dataset& instances, const SplitRatios& ratios, std::uint64_t seed);

/// Mini-batch schedule of one epoch: row positions in a seeded order, cut into
/// consecutive batches. The last batch may be short.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t num_rows, std::size_t batch_size, std::uint64_t seed);

  std::size_t num_batches() const { return (order_.size() + batch_size_ - 1) / batch_size_; }
  std::span<const std::size_t> batch(std::size_t b) const;
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
};

/// Materialized batch: row-major index matrix and label vector.
struct Batch {
  std::vector<FieldIndex> indices;
  std::vector<std::uint8_t> labels;
};

std::vector<Batch> iterate_batches(const Dataset& part, std::size_t batch_size, std::uint64_t seed);

}  // namespace dagfm
