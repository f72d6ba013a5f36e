#pragma once

// Layer zoo for the feedforward engine. Batches are Matrix rows; convolutional
// signals are flattened channel-major (column = channel * length + position).

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "paddy/kernels.hpp"
#include "paddy/matrix.hpp"

namespace paddy {

enum class Mode { train, infer };
enum class LayerKind { dense, conv1d, batchnorm, activation, dropout, softmax };
enum class ActivationFn { relu, sigmoid };

std::string_view to_string(LayerKind k);
std::string_view to_string(ActivationFn f);

/// A trainable tensor and its gradient buffer (same length).
struct ParamView {
  std::string_view name;
  std::span<double> value;
  std::span<double> grad;
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual std::size_t in_width() const = 0;
  virtual std::size_t out_width() const = 0;

  /// Train-mode calls cache whatever backward() needs; infer-mode calls
  /// delegate to infer().
  virtual Matrix forward(const Matrix& x, Mode mode) = 0;
  /// Inference; touches no layer state, so it is safe to share across threads.
  virtual Matrix infer(const Matrix& x) const = 0;
  /// Returns d(loss)/d(input) and overwrites the parameter gradients.
  virtual Matrix backward(const Matrix& dy) = 0;

  virtual std::vector<ParamView> params() { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;
};

// ---------------------------------------------------------------------------

class DenseLayer final : public Layer {
 public:
  DenseLayer(std::size_t in, std::size_t out, bool has_bias = true);

  /// Zero-mean uniform weights in +-1/sqrt(fan_in); bias zero.
  void init(std::mt19937_64& rng);

  LayerKind kind() const override { return LayerKind::dense; }
  std::size_t in_width() const override { return weights.cols(); }
  std::size_t out_width() const override { return weights.rows(); }
  Matrix forward(const Matrix& x, Mode mode) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const Matrix& dy) override;
  std::vector<ParamView> params() override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<DenseLayer>(*this); }

  bool has_bias() const { return has_bias_; }

  Matrix weights;             // out x in
  std::vector<double> bias;   // out; all zero and frozen when !has_bias()
  Matrix weight_grad;
  std::vector<double> bias_grad;

 private:
  bool has_bias_;
  Matrix input_;
};

Matrix dense_forward(const DenseLayer& layer, const Matrix& x);

// ---------------------------------------------------------------------------

class Conv1DLayer final : public Layer {
 public:
  Conv1DLayer(std::size_t in_channels, std::size_t in_length, std::size_t filters,
              std::size_t width, std::size_t stride = 1, bool has_bias = true);

  void init(std::mt19937_64& rng);

  LayerKind kind() const override { return LayerKind::conv1d; }
  std::size_t in_width() const override { return shape_.in_cols(); }
  std::size_t out_width() const override { return shape_.out_cols(); }
  Matrix forward(const Matrix& x, Mode mode) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const Matrix& dy) override;
  std::vector<ParamView> params() override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1DLayer>(*this); }

  const kernels::ConvShape& shape() const { return shape_; }
  bool has_bias() const { return has_bias_; }

  std::vector<double> kernel;  // [filter][channel][tap]
  std::vector<double> bias;    // per filter
  std::vector<double> kernel_grad;
  std::vector<double> bias_grad;

 private:
  kernels::ConvShape shape_;
  bool has_bias_;
  Matrix input_;
};

Matrix conv1d_forward(const Conv1DLayer& layer, const Matrix& x);

// ---------------------------------------------------------------------------

/// Saved by a train-mode batch-norm forward for the backward pass.
struct BatchNormCache {
  Matrix normalized;             // x-hat
  std::vector<double> mean;      // per channel
  std::vector<double> variance;  // biased (divisor = rows * spatial)
  std::vector<double> inv_std;   // 1 / sqrt(variance + eps)
  std::vector<double> gamma;
  std::size_t spatial = 1;
};

struct BatchNormGrads {
  Matrix input;
  std::vector<double> gamma;
  std::vector<double> beta;
};

/// Per-channel batch normalization. With spatial == 1 every column is its own
/// feature; with spatial > 1 (after a convolution) each channel's statistics
/// pool over the batch and the positions.
class BatchNormLayer final : public Layer {
 public:
  explicit BatchNormLayer(std::size_t channels, std::size_t spatial = 1, double eps = 1e-5,
                          double momentum = 0.9);

  LayerKind kind() const override { return LayerKind::batchnorm; }
  std::size_t in_width() const override { return channels() * spatial_; }
  std::size_t out_width() const override { return in_width(); }
  Matrix forward(const Matrix& x, Mode mode) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const Matrix& dy) override;
  std::vector<ParamView> params() override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNormLayer>(*this); }

  std::size_t channels() const { return gamma.size(); }
  std::size_t spatial() const { return spatial_; }
  double eps() const { return eps_; }
  double momentum() const { return momentum_; }

  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  /// False until a train-mode forward has populated the running statistics.
  bool has_running_stats = false;
  std::vector<double> gamma_grad;
  std::vector<double> beta_grad;

 private:
  std::size_t spatial_;
  double eps_;
  double momentum_;
  BatchNormCache cache_;
};

struct BatchNormForward {
  Matrix output;
  BatchNormCache cache;
};

BatchNormForward batchnorm_forward_train(BatchNormLayer& layer, const Matrix& x);
Matrix batchnorm_forward_infer(const BatchNormLayer& layer, const Matrix& x);
BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const Matrix& dy);

// ---------------------------------------------------------------------------

class ActivationLayer final : public Layer {
 public:
  ActivationLayer(ActivationFn fn, std::size_t width) : fn_(fn), width_(width) {}

  LayerKind kind() const override { return LayerKind::activation; }
  std::size_t in_width() const override { return width_; }
  std::size_t out_width() const override { return width_; }
  Matrix forward(const Matrix& x, Mode mode) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const Matrix& dy) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<ActivationLayer>(*this);
  }

  ActivationFn fn() const { return fn_; }

 private:
  ActivationFn fn_;
  std::size_t width_;
  Matrix input_;
  Matrix output_;
};

// ---------------------------------------------------------------------------

/// Inverted dropout: survivors are scaled by 1/(1-rate) during training, so
/// inference is the identity.
class DropoutLayer final : public Layer {
 public:
  DropoutLayer(double rate, std::size_t width, std::uint64_t seed = 0);

  void reseed(std::uint64_t seed) { rng_.seed(seed); }

  LayerKind kind() const override { return LayerKind::dropout; }
  std::size_t in_width() const override { return width_; }
  std::size_t out_width() const override { return width_; }
  Matrix forward(const Matrix& x, Mode mode) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const Matrix& dy) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<DropoutLayer>(*this); }

  double rate() const { return rate_; }
  /// Forces the mask used by the next backward() (entries 0 or 1).
  void set_mask(Matrix mask) { mask_ = std::move(mask); }
  const Matrix& mask() const { return mask_; }

  std::mt19937_64& rng() { return rng_; }

 private:
  double rate_;
  std::size_t width_;
  std::mt19937_64 rng_;
  Matrix mask_;
};

struct DropoutForward {
  Matrix output;
  Matrix mask;  // 1 = kept, 0 = dropped
};

DropoutForward dropout_forward(DropoutLayer& layer, const Matrix& x, Mode mode = Mode::train);
/// Applies a given mask with inverted scaling.
Matrix dropout_apply(const Matrix& x, const Matrix& mask, double rate);

// ---------------------------------------------------------------------------

/// Terminal layer: row-wise softmax. Training bypasses it and feeds the logits
/// to softmax_cross_entropy.
class SoftmaxLayer final : public Layer {
 public:
  explicit SoftmaxLayer(std::size_t width) : width_(width) {}

  LayerKind kind() const override { return LayerKind::softmax; }
  std::size_t in_width() const override { return width_; }
  std::size_t out_width() const override { return width_; }
  Matrix forward(const Matrix& x, Mode mode) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const Matrix& dy) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<SoftmaxLayer>(*this); }

 private:
  std::size_t width_;
  Matrix output_;
};

Matrix softmax(const Matrix& logits);

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;
};

/// Mean cross-entropy of softmax(logits) against integer labels; the gradient
/// is (softmax - onehot) / batch.
LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels);

}  // namespace paddy
