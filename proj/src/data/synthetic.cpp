#include "dagfm/data/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

PlantedDataset make_planted_dataset(const PlantedRuleConfig& config) {
  if (config.num_fields < 3) throw ConfigError("planted third-order rule needs at least three fields");
  if (config.vocab_per_field == 0 || config.instances == 0) throw ConfigError("empty synthetic dataset requested");

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(config.latent_mean, 1.0);
  const std::size_t m = config.num_fields;
  const std::size_t v = config.vocab_per_field;

  std::vector<FieldVocab> fields;
  std::vector<std::vector<double>> latent(m, std::vector<double>(v));
  for (std::size_t f = 0; f < m; ++f) {
    std::vector<std::string> values;
    for (std::size_t k = 0; k < v; ++k) {
      values.push_back("f" + std::to_string(f) + "_" + std::to_string(k));
      latent[f][k] = normal(rng);
    }
    fields.emplace_back("f" + std::to_string(f), std::move(values));
  }

  const std::size_t triples = m - 2;
  const double scale = config.strength / std::sqrt(static_cast<double>(triples));
  const double centre = config.latent_mean * config.latent_mean * config.latent_mean;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  PlantedDataset out{FieldSchema(std::move(fields), 0), Dataset(m)};
  out.data.reserve(config.instances);
  std::vector<FieldIndex> row(m);
  for (std::size_t n = 0; n < config.instances; ++n) {
    for (std::size_t f = 0; f < m; ++f) row[f] = static_cast<FieldIndex>(rng() % v);
    double logit = 0.0;
    for (std::size_t f = 0; f < triples; ++f) {
      logit += latent[f][row[f]] * latent[f + 1][row[f + 1]] * latent[f + 2][row[f + 2]] - centre;
    }
    logit *= scale;
    const double p = 1.0 / (1.0 + std::exp(-logit));
    out.data.add(row, uniform(rng) < p ? 1 : 0);
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const FieldSchema& schema, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "label";
  for (const auto& f : schema.fields()) out << ',' << f.name();
  out << '\n';
  for (std::size_t k = 0; k < data.size(); ++k) {
    out << static_cast<int>(data.label(k));
    auto r = data.row(k);
    for (std::size_t f = 0; f < r.size(); ++f) {
      const auto& field = schema.field(f);
      // OOV rows have no raw value; emit a token that cannot be in-vocabulary.
      out << ',' << (r[f] == field.oov_index() ? std::string("__oov__") : field.decode(r[f]));
    }
    out << '\n';
  }
}

}  // namespace dagfm
