#include <cmath>
#include <random>

#include "dagfm/model_factory.hpp"
#include "dagfm/numcore/errors.hpp"
#include "dagfm/teachers/baselines.hpp"
#include "dagfm/teachers/cin.hpp"
#include "dagfm/teachers/crossnet.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dagfm;
using Vec = std::vector<double>;

namespace {

template <class M>
M& as(std::unique_ptr<Model>& m) {
  return dynamic_cast<M&>(*m);
}

ModelSpec cin_spec(std::size_t m, std::size_t d, std::vector<std::size_t> layers, std::size_t rows = 1) {
  ModelSpec s = testutil::spec_of(ModelKind::cin, m, d, layers.size(), InteractionFn::inner, rows);
  s.cin_layers = std::move(layers);
  return s;
}

Vec random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

double max_grad_error(ModelSpec s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto model = make_model(s, seed);
  testutil::randomize(model->params(), rng, 0.6);
  const auto rows = testutil::random_rows(s, 3, rng);
  const Vec labels{1, 0, 1};
  return grad_check(testutil::batch_logloss(*model, rows, labels), model->params(), 1e-5, {0, seed})
      .max_relative_error;
}

}  // namespace

TEST_CASE("CIN layer on m=2 d=1 with an all-ones kernel") {
  auto model = make_model(cin_spec(2, 1, {1}), 1);
  testutil::set_embedding_rows(*model, {1, 2});
  model->params().value(as<CinModel>(model).kernel(0)).fill(1.0);
  const auto maps = as<CinModel>(model).feature_maps(Vec{1, 2});
  REQUIRE(maps.size() == 2);
  CHECK(maps[1] == Vec{9});  // 1*1 + 1*2 + 2*1 + 2*2
  model->params().value(as<CinModel>(model).head_weight()).fill(1.0);
  CHECK(model->logit(std::vector<FieldIndex>{0, 0}) == 9.0);
}

TEST_CASE("CIN with zero kernels outputs the bias") {
  std::mt19937_64 rng(2);
  auto model = make_model(cin_spec(4, 3, {5, 4}, 3), 2);
  testutil::randomize(model->params(), rng, 1.0);
  for (std::size_t k = 0; k < 2; ++k) model->params().value(as<CinModel>(model).kernel(k)).fill(0.0);
  const double bias = model->params().value(as<CinModel>(model).head_bias())[0];
  for (const auto& row : testutil::random_rows(model->spec(), 4, rng)) CHECK(model->logit(row) == bias);
}

TEST_CASE("CIN single-row all-ones layers equal brute-force pairwise sums") {
  std::mt19937_64 rng(3);
  for (std::size_t m = 2; m <= 4; ++m) {
    const std::size_t d = 2;
    auto model = make_model(cin_spec(m, d, {1, 1}), 3);
    for (std::size_t k = 0; k < 2; ++k) model->params().value(as<CinModel>(model).kernel(k)).fill(1.0);
    const Vec x0 = random_vec(rng, m * d);
    const auto maps = as<CinModel>(model).feature_maps(x0);

    Vec layer1(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t c = 0; c < d; ++c) layer1[c] += x0[i * d + c] * x0[j * d + c];
      }
    }
    Vec layer2(d, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t c = 0; c < d; ++c) layer2[c] += layer1[c] * x0[j * d + c];
    }
    for (std::size_t c = 0; c < d; ++c) {
      CHECK(maps[1][c] == doctest::Approx(layer1[c]).epsilon(1e-13));
      CHECK(maps[2][c] == doctest::Approx(layer2[c]).epsilon(1e-13));
    }
  }
}

TEST_CASE("CIN layer sizes") {
  auto defaults = make_model(testutil::spec_of(ModelKind::cin, 3, 2, 3), 1);
  CHECK(as<CinModel>(defaults).layer_sizes() == std::vector<std::size_t>{200, 200, 200});
  auto model = make_model(cin_spec(3, 2, {4, 6}), 1);
  CHECK(model->params().value(as<CinModel>(model).kernel(1)).shape() == Shape{6, 4, 3});
  CHECK(model->params().value(as<CinModel>(model).head_weight()).size() == 10);
  ModelSpec bad = cin_spec(3, 2, {4, 0});
  CHECK_THROWS_AS(make_model(bad, 1), ConfigError);
}

TEST_CASE("CrossNet one identity layer on [1, 2]") {
  auto model = make_model(testutil::spec_of(ModelKind::crossnet, 2, 1, 1), 1);
  Tensor& W = model->params().value(as<CrossNetModel>(model).weight(0));
  W = Tensor({2, 2}, Vec{1, 0, 0, 1});
  CHECK(as<CrossNetModel>(model).cross(Vec{1, 2}) == Vec{2, 6});
  CHECK_THROWS_AS(as<CrossNetModel>(model).cross(Vec{1, 2, 3}), ConfigError);
}

TEST_CASE("CrossNet with zero weights keeps x0 at every depth") {
  std::mt19937_64 rng(4);
  for (std::size_t depth = 1; depth <= 4; ++depth) {
    auto model = make_model(testutil::spec_of(ModelKind::crossnet, 3, 2, depth), depth);
    for (std::size_t t = 0; t < depth; ++t) model->params().value(as<CrossNetModel>(model).weight(t)).fill(0.0);
    const Vec x0 = random_vec(rng, 6);
    CHECK(as<CrossNetModel>(model).cross(x0) == x0);
  }
}

TEST_CASE("CrossNet depth 1 with W = I equals x0 * x0 + x0") {
  std::mt19937_64 rng(5);
  const std::size_t n = 8;
  auto model = make_model(testutil::spec_of(ModelKind::crossnet, 4, 2, 1), 5);
  Tensor& W = model->params().value(as<CrossNetModel>(model).weight(0));
  W.fill(0.0);
  for (std::size_t r = 0; r < n; ++r) W[r * n + r] = 1.0;
  const Vec x0 = random_vec(rng, n);
  const Vec out = as<CrossNetModel>(model).cross(x0);
  for (std::size_t r = 0; r < n; ++r) CHECK(out[r] == x0[r] * x0[r] + x0[r]);
}

TEST_CASE("CrossNet output is a polynomial of degree depth + 1 in the input scale") {
  std::mt19937_64 rng(6);
  for (std::size_t depth = 1; depth <= 3; ++depth) {
    auto model = make_model(testutil::spec_of(ModelKind::crossnet, 2, 2, depth), 10 + depth);
    testutil::randomize(model->params(), rng, 0.5);
    const Vec x0 = random_vec(rng, 4);
    const Vec v = random_vec(rng, 4);
    // f(s) = v . x_L(s x0) sampled at s = 1..depth+3
    Vec f;
    for (std::size_t s = 1; s <= depth + 3; ++s) {
      Vec x = x0;
      for (double& e : x) e *= static_cast<double>(s);
      const Vec out = as<CrossNetModel>(model).cross(x);
      double dot = 0.0;
      for (std::size_t r = 0; r < 4; ++r) dot += v[r] * out[r];
      f.push_back(dot);
    }
    double scale = 0.0;
    for (double y : f) scale = std::max(scale, std::abs(y));
    // Forward differences: order depth+1 is the constant (depth+1)! * leading
    // coefficient, order depth+2 vanishes for a degree-(depth+1) polynomial.
    Vec diff = f;
    for (std::size_t order = 1; order <= depth + 1; ++order) {
      for (std::size_t k = 0; k + order < f.size(); ++k) diff[k] = diff[k + 1] - diff[k];
    }
    const double lead_a = diff[0], lead_b = diff[1];
    CHECK(std::abs(lead_a) > 1e-6 * scale);
    CHECK(std::abs(lead_b - lead_a) <= 1e-9 * scale);

    // The leading coefficient is the homogeneous top-degree part: with the
    // biases zeroed it is what remains of f(s) / s^{depth+1} as s grows,
    // and it does not depend on the biases at all.
    double factorial = 1.0;
    for (std::size_t k = 2; k <= depth + 1; ++k) factorial *= static_cast<double>(k);
    auto no_bias = make_model(model->spec(), 0);
    no_bias->params() = model->params();
    for (std::size_t t = 0; t < depth; ++t) no_bias->params().value(as<CrossNetModel>(no_bias).bias(t)).fill(0.0);
    Vec big = x0;
    for (double& e : big) e *= 1e4;
    const Vec out = as<CrossNetModel>(no_bias).cross(big);
    double dot = 0.0;
    for (std::size_t r = 0; r < 4; ++r) dot += v[r] * out[r];
    const double limit = dot / std::pow(1e4, static_cast<double>(depth + 1));
    CHECK(lead_a / factorial == doctest::Approx(limit).epsilon(1e-3));
  }
}

TEST_CASE("FwFM pairwise term and FmFM degeneracy") {
  auto fwfm = make_model(testutil::spec_of(ModelKind::fwfm, 2, 1, 1, InteractionFn::inner, 1), 1);
  testutil::set_embedding_rows(*fwfm, {2, 3});
  CHECK(fwfm->logit(std::vector<FieldIndex>{0, 0}) == 6.0);
  CHECK(as<PairwiseFmModel>(fwfm).pairs().size() == 1);

  std::mt19937_64 rng(7);
  const ModelSpec ws = testutil::spec_of(ModelKind::fwfm, 5, 3, 1, InteractionFn::inner, 4);
  ModelSpec ms = ws;
  ms.kind = ModelKind::fmfm;
  auto w = make_model(ws, 2);
  auto k = make_model(ms, 2);
  testutil::randomize(w->params(), rng, 1.0);
  w->params().value(as<PairwiseFmModel>(w).pair_weight()).fill(1.0);
  for (std::size_t f = 0; f < 5; ++f) {
    k->params().value(k->embeddings().handle(f)) = w->params().value(w->embeddings().handle(f));
  }
  k->params().value(as<PairwiseFmModel>(k).linear_weight()) = w->params().value(as<PairwiseFmModel>(w).linear_weight());
  k->params().value(as<PairwiseFmModel>(k).bias()) = w->params().value(as<PairwiseFmModel>(w).bias());
  for (const auto& row : testutil::random_rows(ws, 10, rng)) {
    CHECK(k->logit(row) == doctest::Approx(w->logit(row)).epsilon(1e-13));
  }
}

TEST_CASE("tiny MLP") {
  auto model = make_model(testutil::spec_of(ModelKind::tiny_mlp, 3, 2, 1), 1);
  CHECK(model->spec().mlp_hidden == std::vector<std::size_t>{128, 128, 128});
  ParamStore& store = model->params();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const std::string& name = store.name(ParamHandle{i});
    if (name.rfind("mlp.", 0) == 0) store.value(ParamHandle{i}).fill(0.0);
  }
  store.value(store.at("mlp.3.bias")).fill(0.25);
  std::mt19937_64 rng(8);
  for (const auto& row : testutil::random_rows(model->spec(), 3, rng)) CHECK(model->logit(row) == 0.25);
}

TEST_CASE("teacher constructors reject the wrong kind") {
  std::mt19937_64 rng(9);
  const ModelSpec dag = testutil::spec_of(ModelKind::dagfm, 3, 2, 1);
  CHECK_THROWS_AS(CinModel(dag, rng), ConfigError);
  CHECK_THROWS_AS(CrossNetModel(dag, rng), ConfigError);
  CHECK_THROWS_AS(PairwiseFmModel(dag, rng), ConfigError);
  CHECK_THROWS_AS(TinyMlpModel(dag, rng), ConfigError);
  ModelSpec s = testutil::spec_of(ModelKind::crossnet, 3, 2, 0);
  CHECK_THROWS_AS(make_model(s, 1), ConfigError);
}

TEST_CASE("teacher and baseline gradients match finite differences") {
  CHECK(max_grad_error(cin_spec(3, 2, {2, 2}, 3), 11) < 1e-4);
  CHECK(max_grad_error(cin_spec(3, 2, {2}, 3), 12) < 1e-4);
  CHECK(max_grad_error(testutil::spec_of(ModelKind::crossnet, 3, 2, 2), 13) < 1e-4);
  CHECK(max_grad_error(testutil::spec_of(ModelKind::crossnet, 2, 3, 3), 14) < 1e-4);
  CHECK(max_grad_error(testutil::spec_of(ModelKind::fwfm, 4, 3, 1), 15) < 1e-4);
  CHECK(max_grad_error(testutil::spec_of(ModelKind::fmfm, 4, 3, 1), 16) < 1e-4);
  ModelSpec mlp = testutil::spec_of(ModelKind::tiny_mlp, 3, 2, 1);
  mlp.mlp_hidden = {6, 5};
  CHECK(max_grad_error(mlp, 17) < 1e-4);
}
