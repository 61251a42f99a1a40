#include <doctest.h>

#include <cmath>

#include "amcnn/errors.hpp"
#include "amcnn/gradcheck.hpp"
#include "amcnn/optim.hpp"
#include "support.hpp"

using namespace amcnn;

namespace {

std::vector<NamedTensor> one_param(double value) {
  return {{"w", Tensor::scalar(value), ParamKind::weight}};
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("zero gradient leaves parameters unchanged") {
  auto params = one_param(0.7);
  AdamState state;
  for (int i = 0; i < 3; ++i) adam_step(params, {{0.0}}, state, {});
  CHECK(params[0].tensor.item() == 0.7);
  CHECK(state.step == 3);
}

TEST_CASE("first step moves by the learning rate") {
  auto params = one_param(1.0);
  AdamState state;
  const AdamOptions opt;
  adam_step(params, {{1.0}}, state, opt);
  const double delta = 1.0 - params[0].tensor.item();
  CHECK(std::abs(delta - opt.learning_rate) <= opt.epsilon * opt.learning_rate);
  CHECK(state.step == 1);
}

TEST_CASE("matches a hand-rolled Adam over several steps") {
  auto rng = amcnn::test::engine(71);
  auto params = one_param(0.3);
  AdamState state;
  AdamOptions opt;
  opt.learning_rate = 0.01;
  double w = 0.3, m = 0.0, v = 0.0;
  for (int t = 1; t <= 20; ++t) {
    const double g = amcnn::test::uniform(1, rng)[0];
    adam_step(params, {{g}}, state, opt);
    m = 0.9 * m + (1 - 0.9) * g;
    v = 0.999 * v + (1 - 0.999) * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    w -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(std::abs(params[0].tensor.item() - w) <= 1e-14);
  }
}

TEST_CASE("ten steps on w^2 decrease it monotonically") {
  auto params = one_param(1.0);
  AdamState state;
  double previous = 1.0;
  for (int i = 0; i < 10; ++i) {
    const double w = params[0].tensor.item();
    adam_step(params, {{2 * w}}, state, {});
    const double f = std::pow(params[0].tensor.item(), 2);
    CHECK(f < previous);
    previous = f;
  }
}

TEST_CASE("shape mismatches") {
  auto params = one_param(1.0);
  AdamState state;
  CHECK_THROWS_AS(adam_step(params, {}, state, {}), DimensionError);
  CHECK_THROWS_AS(adam_step(params, {{1.0, 2.0}}, state, {}), DimensionError);
  adam_step(params, {{1.0}}, state, {});
  std::vector<NamedTensor> two{params[0], {"b", Tensor::scalar(0.0), ParamKind::bias}};
  CHECK_THROWS_AS(adam_step(two, {{1.0}, {1.0}}, state, {}), DimensionError);
}

TEST_CASE("loss on a fixed batch falls over the first Adam steps") {
  const ModelConfig c = tiny_config();
  Rng rng(72);
  std::uniform_real_distribution<double> dist(-0.25, 0.25);
  std::vector<double> table(12 * c.embedding_dim);
  for (double& v : table) v = dist(rng);
  ModelParams p = ModelParams::init(c, Tensor::matrix(12, c.embedding_dim, table), SeedStream(2));
  const EncodedBatch batch = random_batch(8, 7, 12, 3, SeedStream(3));
  auto named = p.named();
  AdamState state;
  Gradients g;
  double previous = loss_and_gradients(batch, p, c, SeedStream(0), false, g);
  for (int step = 0; step < 5; ++step) {
    adam_step(named, g, state, {});
    const double loss = loss_and_gradients(batch, p, c, SeedStream(0), false, g);
    CHECK(loss < previous);
    previous = loss;
  }
}

}  // TEST_SUITE
