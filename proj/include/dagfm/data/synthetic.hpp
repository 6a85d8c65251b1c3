#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "dagfm/data/dataset.hpp"

namespace dagfm {

struct PlantedRuleConfig {
  std::size_t instances = 200'000;
  std::size_t num_fields = 8;
  std::size_t vocab_per_field = 50;
  // Logit scale of the planted third-order term.
  double strength = 1.0;
  // Mean of the latent scores. A zero mean leaves no lower-order marginal
  // signal at all, which gradient training from a small init cannot find.
  double latent_mean = 1.0;
  std::uint64_t seed = 7;
};

struct PlantedDataset {
  FieldSchema schema;
  Dataset data;
};

// Synthetic CTR data with a planted third-order rule. Every (field, value)
// gets a latent score z ~ N(latent_mean, 1); the click logit is
//   strength / sqrt(T) * sum over T consecutive field triples (f, f+1, f+2) of (z_f z_{f+1} z_{f+2} - latent_mean³)
// and the label is drawn from Bernoulli(sigmoid(logit)), which supplies the
// noise. Values are named "<field>_<k>" and drawn uniformly.
PlantedDataset make_planted_dataset(const PlantedRuleConfig& config);

// Writes `data` as a `label,<fields>` CSV using the schema's raw values.
void write_csv(const std::filesystem::path& path, const FieldSchema& schema, const Dataset& data);

}  // namespace dagfm
