#include "paddy/fastdropout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "paddy/error.hpp"

namespace paddy {

namespace {

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

constexpr double kLogFloor = 1e-12;

double binary_cross_entropy(double q, double y) {
  return -(y * std::log(std::max(q, kLogFloor)) + (1.0 - y) * std::log(std::max(1.0 - q, kLogFloor)));
}

void check_keep_prob(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("keep_prob must lie in (0,1]");
}

void check_sizes(std::span<const double> w, std::span<const double> x) {
  if (w.size() != x.size()) throw std::invalid_argument("fast dropout: weight/input length mismatch");
}

}  // namespace

GaussianMoments fd_moments(std::span<const double> w, double b, std::span<const double> x,
                           double keep_prob) {
  check_sizes(w, x);
  check_keep_prob(keep_prob);
  double dot = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    dot += w[i] * x[i];
    sq += w[i] * w[i] * x[i] * x[i];
  }
  return {b + keep_prob * dot, keep_prob * (1.0 - keep_prob) * sq};
}

double fd_expected_sigmoid(const GaussianMoments& m) {
  const double kappa = 1.0 / std::sqrt(1.0 + std::numbers::pi * m.variance / 8.0);
  return sigmoid(kappa * m.mean);
}

FdLossGrad fd_loss_and_gradient(std::span<const double> w, double b, std::span<const double> x,
                                double y, double keep_prob) {
  const auto m = fd_moments(w, b, x, keep_prob);
  const double kappa = 1.0 / std::sqrt(1.0 + std::numbers::pi * m.variance / 8.0);
  const double q = sigmoid(kappa * m.mean);
  // d loss / d (kappa * mean) for the logistic link.
  const double delta = q - y;
  const double dkappa_dvar = -(std::numbers::pi / 16.0) * kappa * kappa * kappa;
  const double var_scale = 2.0 * keep_prob * (1.0 - keep_prob);

  FdLossGrad out;
  out.loss = binary_cross_entropy(q, y);
  out.grad_w.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    out.grad_w[i] =
        delta * (kappa * keep_prob * x[i] + m.mean * dkappa_dvar * var_scale * w[i] * x[i] * x[i]);
  out.grad_b = delta * kappa;
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> epoch_orders(std::size_t n, const TrainConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> orders;
  orders.reserve(cfg.epochs);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    orders.push_back(order);
  }
  return orders;
}

void check_training_inputs(const Matrix& x, std::span<const std::size_t> labels,
                           const TrainConfig& cfg) {
  validate(cfg);
  if (x.rows() == 0) throw std::invalid_argument("training set is empty");
  if (labels.size() != x.rows()) throw std::invalid_argument("label count mismatch");
  for (auto l : labels)
    if (l >= kStageCount) throw std::invalid_argument("label out of range");
}

// Per-sample loss and gradient of one binary problem.
using BinaryObjective = FdLossGrad (*)(std::span<const double> w, double b,
                                        std::span<const double> x, double y, double keep_prob);

FdLossGrad plain_logistic(std::span<const double> w, double b, std::span<const double> x,
                          double y, double /*keep_prob*/) {
  double z = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * x[i];
  z = b + z;
  const double q = sigmoid(z);
  FdLossGrad out;
  out.loss = binary_cross_entropy(q, y);
  out.grad_w.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out.grad_w[i] = (q - y) * x[i];
  out.grad_b = q - y;
  return out;
}

FdTrainResult train_ovr(const Matrix& x, std::span<const std::size_t> labels, double keep_prob,
                        const TrainConfig& cfg, BinaryObjective objective) {
  check_training_inputs(x, labels, cfg);
  check_keep_prob(keep_prob);
  const std::size_t d = x.cols();
  const auto orders = epoch_orders(x.rows(), cfg);

  FdTrainResult result;
  result.model.weights = Matrix(kStageCount, d);
  result.model.keep_prob = keep_prob;
  result.trace.assign(cfg.epochs, {});
  bool diverged[kStageCount] = {};

  // The binary problems share nothing but the read-only data.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cls = 0; cls < static_cast<std::ptrdiff_t>(kStageCount); ++cls) {
    auto w = result.model.weights.row(cls);
    double& b = result.model.bias[cls];
    std::vector<double> vel_w(d, 0.0);
    double vel_b = 0.0;
    std::vector<double> gw(d);
    for (std::size_t e = 0; e < cfg.epochs && !diverged[cls]; ++e) {
      const auto& order = orders[e];
      double loss_sum = 0.0;
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t k = start; k < stop; ++k) {
          const std::size_t r = order[k];
          const double y = labels[r] == static_cast<std::size_t>(cls) ? 1.0 : 0.0;
          const auto lg = objective(w, b, x.row(r), y, keep_prob);
          loss_sum += lg.loss;
          for (std::size_t i = 0; i < d; ++i) gw[i] += lg.grad_w[i];
          gb += lg.grad_b;
        }
        const double inv = 1.0 / static_cast<double>(stop - start);
        for (auto& g : gw) g *= inv;
        gb *= inv;
        sgd_step(w, gw, vel_w, cfg);
        sgd_step(std::span<double>(&b, 1), std::span<const double>(&gb, 1),
                 std::span<double>(&vel_b, 1), cfg);
      }
      const double mean_loss = loss_sum / static_cast<double>(order.size());
      if (!std::isfinite(mean_loss)) diverged[cls] = true;
      result.trace[e][cls] = mean_loss;
    }
  }
  for (std::size_t cls = 0; cls < kStageCount; ++cls)
    if (diverged[cls])
      throw NumericError("fast-dropout training diverged for stage " +
                         std::string(to_string(stage_from_index(cls))));
  return result;
}

}  // namespace

FdTrainResult fd_train(const Matrix& x, std::span<const std::size_t> labels, double keep_prob,
                       const TrainConfig& cfg) {
  return train_ovr(x, labels, keep_prob, cfg, &fd_loss_and_gradient);
}

FdTrainResult train_logistic_ovr(const Matrix& x, std::span<const std::size_t> labels,
                                 const TrainConfig& cfg) {
  return train_ovr(x, labels, 1.0, cfg, &plain_logistic);
}

FdPrediction fd_predict(const FastDropoutModel& model, std::span<const double> x) {
  if (x.size() != model.feature_width())
    throw std::invalid_argument("fd_predict: feature width mismatch");
  FdPrediction p;
  for (std::size_t c = 0; c < kStageCount; ++c)
    p.scores[c] = fd_expected_sigmoid(fd_moments(model.weights.row(c), model.bias[c], x, model.keep_prob));
  p.label = 0;
  for (std::size_t c = 1; c < kStageCount; ++c)
    if (p.scores[c] > p.scores[p.label]) p.label = c;
  return p;
}

}  // namespace paddy
