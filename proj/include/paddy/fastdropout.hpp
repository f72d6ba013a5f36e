#pragma once

// Fast dropout for logistic regression: instead of sampling Bernoulli masks on
// the inputs, the pre-activation h = sum_i w_i nu_i x_i + b is replaced by a
// Gaussian with its exact mean and variance, and the expected sigmoid is taken
// in closed form (probit approximation).

#include <array>
#include <span>
#include <vector>

#include "paddy/matrix.hpp"
#include "paddy/optim.hpp"
#include "paddy/stage.hpp"

namespace paddy {

struct GaussianMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact moments of h under independent Bernoulli(keep_prob) input indicators:
/// mean = b + p sum w_i x_i,  variance = p (1 - p) sum w_i^2 x_i^2.
GaussianMoments fd_moments(std::span<const double> w, double b, std::span<const double> x,
                           double keep_prob);

/// E[sigmoid(h)] for h ~ N(mean, variance), approximated by
/// sigmoid(mean / sqrt(1 + pi variance / 8)).
double fd_expected_sigmoid(const GaussianMoments& m);

struct FdLossGrad {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};

/// Binary cross-entropy of the expected sigmoid, with the gradient taken
/// through both the mean and the variance. Log arguments are clamped at 1e-12.
FdLossGrad fd_loss_and_gradient(std::span<const double> w, double b, std::span<const double> x,
                                double y, double keep_prob);

/// One-vs-rest fast-dropout logistic regression over the growth stages.
struct FastDropoutModel {
  Matrix weights{kStageCount, 0};  // stage x feature
  std::vector<double> bias = std::vector<double>(kStageCount, 0.0);
  double keep_prob = 1.0;

  std::size_t feature_width() const { return weights.cols(); }
};

struct FdTrainResult {
  FastDropoutModel model;
  /// trace[epoch][stage] = mean expected loss of that binary problem.
  std::vector<std::array<double, kStageCount>> trace;
};

/// Trains the five binary problems by minibatch momentum SGD from zero
/// weights. All problems visit the samples in the same seeded order.
FdTrainResult fd_train(const Matrix& x, std::span<const std::size_t> labels, double keep_prob,
                       const TrainConfig& cfg);

/// Plain one-vs-rest logistic regression with the same batching as fd_train;
/// the keep_prob = 1 reference.
FdTrainResult train_logistic_ovr(const Matrix& x, std::span<const std::size_t> labels,
                                 const TrainConfig& cfg);

struct FdPrediction {
  std::size_t label = 0;
  std::array<double, kStageCount> scores{};
};

FdPrediction fd_predict(const FastDropoutModel& model, std::span<const double> x);

}  // namespace paddy
