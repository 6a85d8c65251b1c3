#include "dagfm/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

void Dataset::add(const Instance& inst) { add(inst.indices, inst.label); }

void Dataset::add(std::span<const FieldIndex> indices, std::uint8_t label) {
  if (indices.size() != num_fields_) {
    throw ShapeError("instance has " + std::to_string(indices.size()) + " fields, dataset expects " +
                     std::to_string(num_fields_));
  }
  if (label > 1) throw ParseError("label must be 0 or 1");
  indices_.insert(indices_.end(), indices.begin(), indices.end());
  labels_.push_back(label);
}

void Dataset::reserve(std::size_t n) {
  indices_.reserve(n * num_fields_);
  labels_.reserve(n);
}

Instance Dataset::instance(std::size_t k) const {
  auto r = row(k);
  return Instance{labels_[k], std::vector<FieldIndex>(r.begin(), r.end())};
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out(num_fields_);
  out.reserve(rows.size());
  for (std::size_t k : rows) out.add(row(k), labels_[k]);
  return out;
}

Dataset load_dataset(const std::filesystem::path& csv_path, const FieldSchema& schema) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(csv_path.string() + " is empty");
  auto header = split_csv_line(line);
  if (header.size() != schema.num_fields() + 1 || header[0] != "label") {
    throw ParseError(csv_path.string() + ": header does not match the schema's " +
                     std::to_string(schema.num_fields()) + " fields (line 1)");
  }
  Dataset data(schema.num_fields());
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "\r") continue;
    auto cols = split_csv_line(line);
    data.add(encode_instance(schema, cols, line_number));
  }
  return data;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

DatasetSplit split_dataset(const Dataset& instances, const SplitRatios& ratios, std::uint64_t seed) {
  if (instances.empty()) throw ConfigError("cannot split an empty dataset");
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw ConfigError("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  const auto perm = seeded_permutation(instances.size(), seed);
  const auto n = static_cast<double>(instances.size());
  const auto train_end = static_cast<std::size_t>(std::llround(n * ratios[0]));
  const auto val_end = std::min(instances.size(), static_cast<std::size_t>(std::llround(n * (ratios[0] + ratios[1]))));
  std::span<const std::size_t> all(perm);

  DatasetSplit split;
  split.seed = seed;
  split.ratios = ratios;
  split.train = instances.subset(all.subspan(0, train_end));
  split.validation = instances.subset(all.subspan(train_end, val_end - train_end));
  split.test = instances.subset(all.subspan(val_end));
  return split;
}

BatchSchedule::BatchSchedule(std::size_t num_rows, std::size_t batch_size, std::uint64_t seed)
    : order_(seeded_permutation(num_rows, seed)), batch_size_(batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
}

std::span<const std::size_t> BatchSchedule::batch(std::size_t b) const {
  const std::size_t begin = b * batch_size_;
  const std::size_t end = std::min(order_.size(), begin + batch_size_);
  return std::span<const std::size_t>(order_).subspan(begin, end - begin);
}

std::vector<Batch> iterate_batches(const Dataset& part, std::size_t batch_size, std::uint64_t seed) {
  BatchSchedule schedule(part.size(), batch_size, seed);
  std::vector<Batch> batches;
  batches.reserve(schedule.num_batches());
  for (std::size_t b = 0; b < schedule.num_batches(); ++b) {
    Batch batch;
    for (std::size_t k : schedule.batch(b)) {
      auto r = part.row(k);
      batch.indices.insert(batch.indices.end(), r.begin(), r.end());
      batch.labels.push_back(part.label(k));
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace dagfm
