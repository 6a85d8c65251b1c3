#include <algorithm>
#include <cmath>
#include <random>

#include "dagfm/interactions/dagfm.hpp"
#include "dagfm/model_factory.hpp"
#include "dagfm/numcore/adam.hpp"
#include "dagfm/numcore/counted.hpp"
#include "dagfm/numcore/errors.hpp"
#include "dagfm/numcore/grad_check.hpp"
#include "dagfm/numcore/mlp.hpp"
#include "dagfm/numcore/param_store.hpp"
#include "dagfm/numcore/tensor.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dagfm;

TEST_CASE("tensor shape invariants") {
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  CHECK(t(1, 2) == 1.5);
  CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  Tensor u({2, 2}, std::vector<double>{1, 2, 3, 4});
  CHECK(u(1, 0) == 3.0);
  CHECK(u.all_finite());
  u[2] = std::nan("");
  CHECK_FALSE(u.all_finite());
}

TEST_CASE("param store names, freezing and snapshots") {
  ParamStore store;
  const ParamHandle a = store.add("layer.a", Tensor({2}, 1.0));
  const ParamHandle b = store.add("layer.b", Tensor({3}, 2.0));
  store.add("other", Tensor({1}));
  CHECK_THROWS_AS(store.add("layer.a", Tensor({1})), ConfigError);
  CHECK(store.at("layer.b").index == b.index);
  CHECK_THROWS_AS(store.at("missing"), LookupError);
  CHECK(store.total_elements() == 6);
  CHECK(store.total_elements_with_prefix("layer.") == 5);
  CHECK(store.set_trainable_prefix("layer.", false) == 2);
  CHECK_FALSE(store.trainable(a));
  CHECK(store.adam(a).first_moment.shape() == store.value(a).shape());

  const auto snap = store.snapshot();
  store.value(a).fill(9.0);
  store.restore(snap);
  CHECK(store.value(a)[0] == 1.0);
  auto bad = snap;
  bad[0] = Tensor({5});
  CHECK_THROWS(store.restore(bad));
}

TEST_CASE("adam first step moves by -lr * sign") {
  ParamStore store;
  const ParamHandle p = store.add("p", Tensor({1}, 0.0));
  Gradients g = store.zero_gradients();
  g[p][0] = 1.0;
  adam_step(store, g, 1e-3);
  // m_hat = 1, v_hat = 1, step = lr / (1 + eps)
  CHECK(store.value(p)[0] == doctest::Approx(-1e-3).epsilon(1e-9));
  CHECK(store.adam(p).step == 1);
}

TEST_CASE("adam with zero gradients leaves parameters and counts the step") {
  ParamStore store;
  const ParamHandle p = store.add("p", Tensor({3}, std::vector<double>{0.5, -1.0, 2.0}));
  const Tensor before = store.value(p);
  Gradients g = store.zero_gradients();
  adam_step(store, g, 1e-2);
  CHECK(store.value(p) == before);
  CHECK(store.adam(p).step == 1);
}

TEST_CASE("adam leaves frozen parameters bitwise unchanged") {
  ParamStore store;
  const ParamHandle frozen = store.add("frozen", Tensor({2}, 0.25), false);
  const ParamHandle live = store.add("live", Tensor({2}, 0.25));
  Gradients g = store.zero_gradients();
  g[frozen].fill(1.0);
  g[live].fill(1.0);
  for (int k = 0; k < 5; ++k) adam_step(store, g, 1e-1);
  CHECK(store.value(frozen) == Tensor({2}, 0.25));
  CHECK(store.adam(frozen).step == 0);
  CHECK(store.value(live)[0] < 0.25);
}

TEST_CASE("adam with lr = 0 is the identity") {
  ParamStore store;
  const ParamHandle p = store.add("p", Tensor({4}, std::vector<double>{1e-3, -7.0, 3.25, 0.0}));
  const Tensor before = store.value(p);
  Gradients g = store.zero_gradients();
  g[p] = Tensor({4}, std::vector<double>{1.0, -2.0, 1e3, 5.0});
  for (int k = 0; k < 3; ++k) adam_step(store, g, 0.0);
  CHECK(store.value(p) == before);
}

TEST_CASE("adam errors") {
  ParamStore store;
  const ParamHandle p = store.add("weights", Tensor({2}));
  Gradients wrong(std::vector<Tensor>{Tensor({3})});
  CHECK_THROWS_AS(adam_step(store, wrong, 1e-3), ConfigError);
  Gradients g = store.zero_gradients();
  g[p][1] = std::numeric_limits<double>::infinity();
  try {
    adam_step(store, g, 1e-3);
    FAIL("expected a divergence error");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("weights") != std::string::npos);
  }
  CHECK(store.value(p) == Tensor({2}));
  CHECK_THROWS_AS(adam_step(store, store.zero_gradients(), -1.0), ConfigError);
}

TEST_CASE("l2 penalty touches trainable parameters only") {
  ParamStore store;
  const ParamHandle a = store.add("a", Tensor({1}, 2.0));
  const ParamHandle b = store.add("b", Tensor({1}, 2.0), false);
  Gradients g = store.zero_gradients();
  add_l2_penalty(store, g, 0.5);
  CHECK(g[a][0] == 1.0);
  CHECK(g[b][0] == 0.0);
}

TEST_CASE("grad_check on x squared") {
  ParamStore store;
  const ParamHandle x = store.add("x", Tensor({1}, 1.0));
  LossFunction f = [&](Gradients* g) {
    const double v = store.value(x)[0];
    if (g) (*g)[x][0] += 2.0 * v;
    return v * v;
  };
  const GradCheckResult r = grad_check(f, store, 1e-5);
  CHECK(r.max_relative_error < 1e-6);
  CHECK(r.coords_checked == 1);
}

TEST_CASE("grad_check with extrapolation and kink detection") {
  ParamStore store;
  const ParamHandle x = store.add("x", Tensor({2}, std::vector<double>{0.7, 2e-4}));
  // exp on the first coordinate, ReLU on the second: the second sits inside
  // a step of 1e-3 from its kink at 0.
  LossFunction f = [&](Gradients* g) {
    const double a = store.value(x)[0], b = store.value(x)[1];
    if (g) {
      (*g)[x][0] += std::exp(a);
      (*g)[x][1] += b > 0.0 ? 1.0 : 0.0;
    }
    return std::exp(a) + std::max(b, 0.0);
  };
  const GradCheckResult plain = grad_check(f, store, 1e-3, {0, 0});
  CHECK(plain.worst_index == 1);
  CHECK(plain.max_relative_error > 0.1);

  const GradCheckResult r = grad_check(f, store, 1e-3, {0, 0, true, true});
  CHECK(r.coords_checked == 1);
  CHECK(r.coords_skipped == 1);
  CHECK(r.worst_index == 0);
  CHECK(r.max_relative_error < 1e-10);
  CHECK(r.worst_analytic == std::exp(0.7));
}

TEST_CASE("grad_check reports a wrong gradient and rejects non-finite losses") {
  ParamStore store;
  const ParamHandle x = store.add("x", Tensor({1}, 1.0));
  LossFunction wrong = [&](Gradients* g) {
    const double v = store.value(x)[0];
    if (g) (*g)[x][0] += 3.0 * v;
    return v * v;
  };
  const GradCheckResult r = grad_check(wrong, store, 1e-5);
  CHECK(r.max_relative_error == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.worst_param == "x");
  LossFunction bad = [](Gradients*) { return std::nan(""); };
  CHECK_THROWS_AS(grad_check(bad, store, 1e-5), EvaluationError);
}

TEST_CASE("grad_check on a DAGFM-inner loss, m=3 d=2") {
  std::mt19937_64 rng(3);
  auto model = make_model(testutil::spec_of(ModelKind::dagfm, 3, 2, 2, InteractionFn::inner), 11);
  testutil::randomize(model->params(), rng, 0.6);
  const auto rows = testutil::random_rows(model->spec(), 4, rng);
  const std::vector<double> labels{1, 0, 0, 1};
  const auto r = grad_check(testutil::batch_logloss(*model, rows, labels), model->params(), 1e-5, {0, 1});
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("grad_check on a CrossNet loss, m=2 d=2") {
  std::mt19937_64 rng(4);
  auto model = make_model(testutil::spec_of(ModelKind::crossnet, 2, 2, 2), 12);
  testutil::randomize(model->params(), rng, 0.6);
  const auto rows = testutil::random_rows(model->spec(), 4, rng);
  const std::vector<double> labels{0, 1, 1, 0};
  const auto r = grad_check(testutil::batch_logloss(*model, rows, labels), model->params(), 1e-5, {0, 1});
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("forward passes are deterministic") {
  auto a = make_model(testutil::spec_of(ModelKind::cin, 3, 2, 2), 5);
  auto b = make_model(testutil::spec_of(ModelKind::cin, 3, 2, 2), 5);
  const std::vector<FieldIndex> row{0, 1, 2};
  CHECK(a->logit(row) == b->logit(row));
  CHECK(a->logit(row) == a->logit(row));
}

TEST_CASE("counted scalars tally each multiplication and addition") {
  FlopScope scope;
  Counted a(2.0), b(3.0);
  Counted c = a * b + a;  // 1 mult, 1 add
  c += b;                 // 1 add
  c *= a;                 // 1 mult
  CHECK(value_of(c) == 22.0);
  CHECK(scope.count().mults == 2);
  CHECK(scope.count().adds == 2);
}

TEST_CASE("mlp forward matches a hand computation and its gradient checks") {
  ParamStore store;
  std::mt19937_64 rng(1);
  Mlp mlp(store, "t", 2, {2}, 1, rng);
  // Hidden: relu([1, -1; 2, 0] x + [0, 1]); output: [1, 3] h + 0.5
  store.value(store.at("t.0.weight")) = Tensor({2, 2}, std::vector<double>{1, -1, 2, 0});
  store.value(store.at("t.0.bias")) = Tensor({2}, std::vector<double>{0, 1});
  store.value(store.at("t.1.weight")) = Tensor({1, 2}, std::vector<double>{1, 3});
  store.value(store.at("t.1.bias")) = Tensor({1}, 0.5);
  const std::vector<double> x{1.0, 2.0};
  MlpTrace<double> trace;
  mlp.forward<double>(store, x, trace);
  // h = relu([-1, 3]) = [0, 3]; y = 9 + 0.5
  CHECK(trace.output()[0] == 9.5);

  std::vector<double> in{0.3, -0.7};
  testutil::randomize(store, rng, 0.8);
  LossFunction f = [&](Gradients* g) {
    MlpTrace<double> t;
    mlp.forward<double>(store, in, t);
    const double y = t.output()[0];
    if (g) {
      const double up[1] = {2.0 * y};
      std::vector<double> gin(2, 0.0);
      mlp.backward(store, t, up, *g, gin);
    }
    return y * y;
  };
  CHECK(grad_check(f, store, 1e-6, {0, 0}).max_relative_error < 1e-4);
  std::vector<double> wrong{1.0};
  CHECK_THROWS_AS(mlp.forward<double>(store, wrong, trace), ShapeError);
}
