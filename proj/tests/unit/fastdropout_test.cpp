#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "paddy/fastdropout.hpp"

using namespace paddy;

namespace {

std::pair<Matrix, std::vector<std::size_t>> five_blobs(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.25);
  Matrix x(per_class * 5, 11);
  std::vector<std::size_t> y(per_class * 5);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    y[r] = r % 5;
    for (std::size_t c = 0; c < 11; ++c) x(r, c) = (c % 5 == y[r] ? 2.0 : 0.0) + noise(rng);
  }
  return {x, y};
}

}  // namespace

TEST_CASE("fd_moments") {
  const std::vector<double> ones{1, 1};
  const auto m = fd_moments(ones, 0.0, ones, 0.5);
  CHECK(m.mean == 1.0);
  CHECK(m.variance == 0.5);

  const std::vector<double> w{0.3, -1.2, 2.0}, x{1.5, 0.25, -0.5};
  const auto full = fd_moments(w, 0.7, x, 1.0);
  CHECK(full.mean == doctest::Approx(0.7 + 0.45 - 0.3 - 1.0).epsilon(1e-15));
  CHECK(full.variance == 0.0);
}

TEST_CASE("fd_moments agrees with sampled masks") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const auto w = oracle::random_vector(11, rng);
    const auto x = oracle::random_vector(11, rng, -2, 2);
    const double b = 0.3 * trial;
    const auto m = fd_moments(w, b, x, 0.5);
    const auto mc = oracle::sampled_dropout_moments(w, b, x, 0.5, 200'000, 100 + trial);
    CHECK(std::abs(m.mean - mc.mean) < 3 * mc.std_error);
    CHECK(std::abs(m.variance - mc.variance) < 3 * mc.var_std_error);
  }
}

TEST_CASE("fd_expected_sigmoid") {
  for (double mu : {-3.0, -0.4, 0.0, 1.7}) CHECK(fd_expected_sigmoid({mu, 0.0}) == oracle::sigmoid(mu));
  for (double var : {0.0, 0.5, 3.0, 10.0}) CHECK(fd_expected_sigmoid({0.0, var}) == 0.5);

  const double expected = oracle::sigmoid(1.0 / std::sqrt(1.0 + std::numbers::pi / 16.0));
  CHECK(fd_expected_sigmoid({1.0, 0.5}) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(expected == doctest::Approx(0.71388).epsilon(1e-4));
  CHECK(std::abs(fd_expected_sigmoid({1.0, 0.5}) - oracle::sampled_expected_sigmoid(1.0, 0.5, 200'000, 7)) < 0.01);
}

TEST_CASE("fd loss at p = 1 is the logistic loss") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto w = oracle::random_vector(6, rng);
    const auto x = oracle::random_vector(6, rng, -2, 2);
    const double b = 0.1 * trial - 2.5;
    const double y = trial % 2;
    const auto g = fd_loss_and_gradient(w, b, x, y, 1.0);
    CHECK(g.loss == doctest::Approx(oracle::logistic_loss(w, b, x, y)).epsilon(1e-13));
    const double q = fd_expected_sigmoid(fd_moments(w, b, x, 1.0));
    for (std::size_t i = 0; i < 6; ++i) CHECK(g.grad_w[i] == (q - y) * x[i]);
    CHECK(g.grad_b == q - y);
  }
  const std::vector<double> w{0.0}, x{1.0};
  CHECK(fd_loss_and_gradient(w, 0.0, x, 1.0, 1.0).loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("fast dropout tracks sampled dropout on a fixed model") {
  std::mt19937_64 rng(17);
  double total = 0.0;
  const int models = 10;
  for (int k = 0; k < models; ++k) {
    const auto w = oracle::random_vector(11, rng);
    const auto x = oracle::random_vector(11, rng, -1.5, 1.5);
    const double p = 0.8;
    std::bernoulli_distribution keep(p);
    long double sum = 0.0L;
    const int draws = 100'000;
    for (int i = 0; i < draws; ++i) {
      double h = 0.1;
      for (std::size_t j = 0; j < 11; ++j)
        if (keep(rng)) h += w[j] * x[j];
      sum += oracle::sigmoid(h);
    }
    total += std::abs(static_cast<double>(sum / draws) - fd_expected_sigmoid(fd_moments(w, 0.1, x, p)));
  }
  CHECK(total / models < 0.02);
}

TEST_CASE("fd_train") {
  auto [x, y] = five_blobs(60, 1);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.05;
  cfg.seed = 4;

  SUBCASE("separable blobs, p = 0.8") {
    auto [tx, ty] = five_blobs(40, 2);
    const auto model = fd_train(x, y, 0.8, cfg).model;
    std::size_t hit = 0;
    for (std::size_t r = 0; r < tx.rows(); ++r) hit += fd_predict(model, tx.row(r)).label == ty[r];
    CHECK(static_cast<double>(hit) / tx.rows() >= 0.95);
  }
  SUBCASE("p = 1 follows plain LR exactly") {
    const auto fd = fd_train(x, y, 1.0, cfg);
    const auto lr = train_logistic_ovr(x, y, cfg);
    CHECK(fd.model.weights == lr.model.weights);
    CHECK(fd.model.bias == lr.model.bias);
    CHECK(fd.trace == lr.trace);
  }
  SUBCASE("deterministic per seed") {
    const auto a = fd_train(x, y, 0.7, cfg);
    const auto b = fd_train(x, y, 0.7, cfg);
    CHECK(a.model.weights == b.model.weights);
    CHECK(a.trace == b.trace);
  }
  SUBCASE("bad keep probability") {
    CHECK_THROWS(fd_train(x, y, 0.0, cfg));
    CHECK_THROWS(fd_train(x, y, 1.5, cfg));
  }
}

TEST_CASE("fd_predict") {
  FastDropoutModel m;
  m.weights = Matrix(kStageCount, 3);
  m.keep_prob = 0.9;
  const std::vector<double> x{0.2, 0.4, 0.6};
  CHECK(fd_predict(m, x).label == 0);

  m.bias = {-2.2, -2.2, 2.2, -2.2, -2.2};  // sigmoid(2.2) ~ 0.9, sigmoid(-2.2) ~ 0.1
  const auto p = fd_predict(m, x);
  CHECK(p.label == 2);
  CHECK(p.scores[2] == doctest::Approx(0.9).epsilon(0.01));

  // p = 1 scores are the logistic outputs of the same weights.
  std::mt19937_64 rng(2);
  m.weights = oracle::random_matrix(kStageCount, 3, rng);
  m.keep_prob = 1.0;
  const auto q = fd_predict(m, x);
  for (std::size_t c = 0; c < kStageCount; ++c) {
    double z = m.bias[c];
    for (std::size_t i = 0; i < 3; ++i) z += m.weights(c, i) * x[i];
    CHECK(q.scores[c] == doctest::Approx(oracle::sigmoid(z)).epsilon(1e-15));
  }
}
