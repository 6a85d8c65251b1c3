#include "dagfm/model_factory.hpp"

#include <random>

#include "dagfm/interactions/dagfm.hpp"
#include "dagfm/teachers/baselines.hpp"
#include "dagfm/teachers/cin.hpp"
#include "dagfm/teachers/crossnet.hpp"

namespace dagfm {

std::unique_ptr<Model> make_model(const ModelSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  switch (spec.kind) {
    case ModelKind::dagfm:
    case ModelKind::dagfm_plus:
      return std::make_unique<DagfmModel>(spec, rng);
    case ModelKind::cin:
      return std::make_unique<CinModel>(spec, rng);
    case ModelKind::crossnet:
      return std::make_unique<CrossNetModel>(spec, rng);
    case ModelKind::fwfm:
    case ModelKind::fmfm:
      return std::make_unique<PairwiseFmModel>(spec, rng);
    case ModelKind::tiny_mlp:
      return std::make_unique<TinyMlpModel>(spec, rng);
  }
  return nullptr;
}

std::unique_ptr<Model> clone_model(const Model& model) {
  auto copy = make_model(model.spec(), 0);
  copy->params().restore(model.params().snapshot());
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    copy->params().set_trainable(ParamHandle{i}, model.params().trainable(ParamHandle{i}));
  }
  return copy;
}

}  // namespace dagfm
