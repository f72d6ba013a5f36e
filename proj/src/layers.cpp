#include "paddy/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "paddy/optim.hpp"

namespace paddy {

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::activation: return "activation";
    case LayerKind::dropout: return "dropout";
    case LayerKind::softmax: return "softmax";
  }
  return "?";
}

std::string_view to_string(ActivationFn f) { return f == ActivationFn::relu ? "relu" : "sigmoid"; }

namespace {

void require_width(const Matrix& x, std::size_t width, const char* layer) {
  if (x.cols() != width)
    throw std::invalid_argument(std::string(layer) + ": expected input width " +
                                std::to_string(width) + ", got " + std::to_string(x.cols()));
}

void init_uniform(std::span<double> values, std::size_t fan_in, std::mt19937_64& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : values) v = dist(rng);
}

}  // namespace

// --- dense -----------------------------------------------------------------

DenseLayer::DenseLayer(std::size_t in, std::size_t out, bool has_bias)
    : weights(out, in), bias(out, 0.0), weight_grad(out, in), bias_grad(out, 0.0),
      has_bias_(has_bias) {
  if (in == 0 || out == 0) throw std::invalid_argument("dense: zero-sized layer");
}

void DenseLayer::init(std::mt19937_64& rng) {
  init_uniform(weights.flat(), weights.cols(), rng);
  std::fill(bias.begin(), bias.end(), 0.0);
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
  require_width(x, layer.in_width(), "dense");
  Matrix y;
  kernels::parallel::affine(x, layer.weights, layer.bias, y);
  return y;
}

Matrix DenseLayer::forward(const Matrix& x, Mode mode) {
  if (mode == Mode::train) input_ = x;
  return dense_forward(*this, x);
}

Matrix DenseLayer::infer(const Matrix& x) const { return dense_forward(*this, x); }

Matrix DenseLayer::backward(const Matrix& dy) {
  require_shape(dy, input_.rows(), out_width(), "dense backward");
  std::span<double> db = has_bias_ ? std::span<double>(bias_grad) : std::span<double>{};
  kernels::parallel::affine_param_grad(dy, input_, weight_grad, db);
  Matrix dx;
  kernels::parallel::affine_input_grad(dy, weights, dx);
  return dx;
}

std::vector<ParamView> DenseLayer::params() {
  std::vector<ParamView> p{{"W", weights.flat(), weight_grad.flat()}};
  if (has_bias_) p.push_back({"b", bias, bias_grad});
  return p;
}

// --- conv1d ----------------------------------------------------------------

Conv1DLayer::Conv1DLayer(std::size_t in_channels, std::size_t in_length, std::size_t filters,
                         std::size_t width, std::size_t stride, bool has_bias)
    : shape_{in_channels, in_length, filters, width, stride}, has_bias_(has_bias) {
  if (in_channels == 0 || filters == 0 || width == 0)
    throw std::invalid_argument("conv1d: zero-sized layer");
  if (stride == 0) throw std::invalid_argument("conv1d: stride must be >= 1");
  if (width > in_length)
    throw std::invalid_argument("conv1d: kernel width " + std::to_string(width) +
                                " exceeds input length " + std::to_string(in_length));
  kernel.assign(shape_.kernel_size(), 0.0);
  kernel_grad.assign(shape_.kernel_size(), 0.0);
  bias.assign(filters, 0.0);
  bias_grad.assign(filters, 0.0);
}

void Conv1DLayer::init(std::mt19937_64& rng) {
  init_uniform(kernel, shape_.in_channels * shape_.width, rng);
  std::fill(bias.begin(), bias.end(), 0.0);
}

Matrix conv1d_forward(const Conv1DLayer& layer, const Matrix& x) {
  require_width(x, layer.in_width(), "conv1d");
  Matrix y;
  kernels::parallel::conv1d(x, layer.kernel, layer.bias, layer.shape(), y);
  return y;
}

Matrix Conv1DLayer::forward(const Matrix& x, Mode mode) {
  if (mode == Mode::train) input_ = x;
  return conv1d_forward(*this, x);
}

Matrix Conv1DLayer::infer(const Matrix& x) const { return conv1d_forward(*this, x); }

Matrix Conv1DLayer::backward(const Matrix& dy) {
  require_shape(dy, input_.rows(), out_width(), "conv1d backward");
  std::span<double> db = has_bias_ ? std::span<double>(bias_grad) : std::span<double>{};
  kernels::parallel::conv1d_param_grad(dy, input_, shape_, kernel_grad, db);
  Matrix dx;
  kernels::parallel::conv1d_input_grad(dy, kernel, shape_, dx);
  return dx;
}

std::vector<ParamView> Conv1DLayer::params() {
  std::vector<ParamView> p{{"K", kernel, kernel_grad}};
  if (has_bias_) p.push_back({"b", bias, bias_grad});
  return p;
}

// --- batch norm ------------------------------------------------------------

BatchNormLayer::BatchNormLayer(std::size_t channels, std::size_t spatial, double eps,
                               double momentum)
    : gamma(channels, 1.0), beta(channels, 0.0), running_mean(channels, 0.0),
      running_var(channels, 1.0), gamma_grad(channels, 0.0), beta_grad(channels, 0.0),
      spatial_(spatial), eps_(eps), momentum_(momentum) {
  if (channels == 0 || spatial == 0) throw std::invalid_argument("batchnorm: zero-sized layer");
  if (!(eps > 0.0)) throw std::invalid_argument("batchnorm: eps must be > 0");
  if (!(momentum > 0.0 && momentum < 1.0))
    throw std::invalid_argument("batchnorm: momentum must lie in (0,1)");
}

BatchNormForward batchnorm_forward_train(BatchNormLayer& layer, const Matrix& x) {
  require_width(x, layer.in_width(), "batchnorm");
  const std::size_t n = x.rows();
  if (n < 2) throw std::invalid_argument("batchnorm: training needs a batch of at least 2 rows");
  const std::size_t channels = layer.channels();
  const std::size_t spatial = layer.spatial();
  const double m = static_cast<double>(n * spatial);

  BatchNormForward out;
  auto& cache = out.cache;
  cache.spatial = spatial;
  cache.gamma = layer.gamma;
  cache.mean.assign(channels, 0.0);
  cache.variance.assign(channels, 0.0);
  cache.inv_std.assign(channels, 0.0);
  cache.normalized = Matrix(n, x.cols());
  out.output = Matrix(n, x.cols());

  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t t = 0; t < spatial; ++t) sum += x(r, c * spatial + t);
    const double mean = sum / m;
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t t = 0; t < spatial; ++t) {
        const double d = x(r, c * spatial + t) - mean;
        ss += d * d;
      }
    const double var = ss / m;
    const double inv_std = 1.0 / std::sqrt(var + layer.eps());
    cache.mean[c] = mean;
    cache.variance[c] = var;
    cache.inv_std[c] = inv_std;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t t = 0; t < spatial; ++t) {
        const std::size_t j = c * spatial + t;
        const double xhat = (x(r, j) - mean) * inv_std;
        cache.normalized(r, j) = xhat;
        out.output(r, j) = layer.gamma[c] * xhat + layer.beta[c];
      }
    layer.running_mean[c] = layer.momentum() * layer.running_mean[c] + (1.0 - layer.momentum()) * mean;
    layer.running_var[c] = layer.momentum() * layer.running_var[c] + (1.0 - layer.momentum()) * var;
  }
  layer.has_running_stats = true;
  return out;
}

Matrix batchnorm_forward_infer(const BatchNormLayer& layer, const Matrix& x) {
  require_width(x, layer.in_width(), "batchnorm");
  if (!layer.has_running_stats)
    throw std::logic_error("batchnorm: inference on a layer that was never trained");
  const std::size_t spatial = layer.spatial();
  Matrix y(x.rows(), x.cols());
  for (std::size_t c = 0; c < layer.channels(); ++c) {
    const double inv_std = 1.0 / std::sqrt(layer.running_var[c] + layer.eps());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t t = 0; t < spatial; ++t) {
        const std::size_t j = c * spatial + t;
        y(r, j) = layer.gamma[c] * ((x(r, j) - layer.running_mean[c]) * inv_std) + layer.beta[c];
      }
  }
  return y;
}

BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const Matrix& dy) {
  const std::size_t channels = cache.gamma.size();
  const std::size_t spatial = cache.spatial;
  require_shape(dy, cache.normalized.rows(), cache.normalized.cols(), "batchnorm backward");
  const std::size_t n = dy.rows();
  const double m = static_cast<double>(n * spatial);

  BatchNormGrads g;
  g.input = Matrix(n, dy.cols());
  g.gamma.assign(channels, 0.0);
  g.beta.assign(channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t t = 0; t < spatial; ++t) {
        const std::size_t j = c * spatial + t;
        sum_dy += dy(r, j);
        sum_dy_xhat += dy(r, j) * cache.normalized(r, j);
      }
    g.beta[c] = sum_dy;
    g.gamma[c] = sum_dy_xhat;
    // dx = gamma * inv_std / m * (m dy - sum(dy) - xhat * sum(dy xhat))
    const double scale = cache.gamma[c] * cache.inv_std[c] / m;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t t = 0; t < spatial; ++t) {
        const std::size_t j = c * spatial + t;
        g.input(r, j) = scale * (m * dy(r, j) - sum_dy - cache.normalized(r, j) * sum_dy_xhat);
      }
  }
  return g;
}

Matrix BatchNormLayer::forward(const Matrix& x, Mode mode) {
  if (mode == Mode::infer) return batchnorm_forward_infer(*this, x);
  auto result = batchnorm_forward_train(*this, x);
  cache_ = std::move(result.cache);
  return std::move(result.output);
}

Matrix BatchNormLayer::infer(const Matrix& x) const { return batchnorm_forward_infer(*this, x); }

Matrix BatchNormLayer::backward(const Matrix& dy) {
  auto g = batchnorm_backward(cache_, dy);
  gamma_grad.assign(g.gamma.begin(), g.gamma.end());
  beta_grad.assign(g.beta.begin(), g.beta.end());
  return std::move(g.input);
}

std::vector<ParamView> BatchNormLayer::params() {
  return {{"gamma", gamma, gamma_grad}, {"beta", beta, beta_grad}};
}

// --- activation ------------------------------------------------------------

namespace {

Matrix activate(ActivationFn fn, const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  auto in = x.flat();
  auto out = y.flat();
  if (fn == ActivationFn::relu) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  } else {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-in[i]));
  }
  return y;
}

}  // namespace

Matrix ActivationLayer::infer(const Matrix& x) const {
  require_width(x, width_, "activation");
  return activate(fn_, x);
}

Matrix ActivationLayer::forward(const Matrix& x, Mode mode) {
  Matrix y = infer(x);
  if (mode == Mode::train) {
    input_ = x;
    output_ = y;
  }
  return y;
}

Matrix ActivationLayer::backward(const Matrix& dy) {
  require_shape(dy, input_.rows(), width_, "activation backward");
  Matrix dx(dy.rows(), dy.cols());
  auto g = dy.flat();
  auto out = dx.flat();
  if (fn_ == ActivationFn::relu) {
    auto in = input_.flat();
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = in[i] > 0.0 ? g[i] : 0.0;
  } else {
    auto y = output_.flat();
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] * y[i] * (1.0 - y[i]);
  }
  return dx;
}

// --- dropout ---------------------------------------------------------------

DropoutLayer::DropoutLayer(double rate, std::size_t width, std::uint64_t seed)
    : rate_(rate), width_(width), rng_(seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must lie in [0,1)");
}

Matrix dropout_apply(const Matrix& x, const Matrix& mask, double rate) {
  require_shape(mask, x.rows(), x.cols(), "dropout mask");
  const double scale = 1.0 / (1.0 - rate);
  Matrix y(x.rows(), x.cols());
  auto in = x.flat();
  auto m = mask.flat();
  auto out = y.flat();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = m[i] != 0.0 ? in[i] * scale : 0.0;
  return y;
}

DropoutForward dropout_forward(DropoutLayer& layer, const Matrix& x, Mode mode) {
  require_width(x, layer.in_width(), "dropout");
  DropoutForward out;
  out.mask = Matrix(x.rows(), x.cols(), 1.0);
  if (mode == Mode::infer || layer.rate() == 0.0) {
    out.output = x;
    return out;
  }
  std::bernoulli_distribution keep(1.0 - layer.rate());
  for (auto& m : out.mask.flat()) m = keep(layer.rng()) ? 1.0 : 0.0;
  out.output = dropout_apply(x, out.mask, layer.rate());
  return out;
}

Matrix DropoutLayer::forward(const Matrix& x, Mode mode) {
  auto result = dropout_forward(*this, x, mode);
  if (mode == Mode::train) mask_ = std::move(result.mask);
  return std::move(result.output);
}

Matrix DropoutLayer::infer(const Matrix& x) const {
  require_width(x, width_, "dropout");
  return x;
}

Matrix DropoutLayer::backward(const Matrix& dy) { return dropout_apply(dy, mask_, rate_); }

// --- softmax / loss --------------------------------------------------------

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto z = logits.row(r);
    auto out = p.row(r);
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      out[k] = std::exp(z[k] - mx);
      sum += out[k];
    }
    for (auto& v : out) v /= sum;
  }
  return p;
}

Matrix SoftmaxLayer::infer(const Matrix& x) const {
  require_width(x, width_, "softmax");
  return softmax(x);
}

Matrix SoftmaxLayer::forward(const Matrix& x, Mode mode) {
  Matrix y = infer(x);
  if (mode == Mode::train) output_ = y;
  return y;
}

Matrix SoftmaxLayer::backward(const Matrix& dy) {
  require_shape(dy, output_.rows(), width_, "softmax backward");
  Matrix dx(dy.rows(), dy.cols());
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    const auto y = output_.row(r);
    const auto g = dy.row(r);
    double dot = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) dot += g[k] * y[k];
    for (std::size_t k = 0; k < g.size(); ++k) dx(r, k) = y[k] * (g[k] - dot);
  }
  return dx;
}

LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels) {
  if (labels.size() != logits.rows())
    throw std::invalid_argument("softmax_cross_entropy: label count does not match batch");
  if (logits.rows() == 0) throw std::invalid_argument("softmax_cross_entropy: empty batch");
  const double n = static_cast<double>(logits.rows());
  LossAndGrad out;
  out.grad = Matrix(logits.rows(), logits.cols());
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (labels[r] >= logits.cols())
      throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(labels[r]) +
                                  " out of range");
    const auto z = logits.row(r);
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double log_sum = std::log(sum);
    total += -(z[labels[r]] - mx - log_sum);
    auto g = out.grad.row(r);
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double p = std::exp(z[k] - mx - log_sum);
      g[k] = (p - (k == labels[r] ? 1.0 : 0.0)) / n;
    }
  }
  out.loss = total / n;
  return out;
}

// --- optimizer ---------------------------------------------------------------

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw std::invalid_argument("momentum must lie in [0,1)");
  if (cfg.batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
}

void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
              const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != velocity.size())
    throw std::invalid_argument("sgd_step: parameter/gradient/velocity length mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = cfg.momentum * velocity[i] - cfg.learning_rate * grads[i];
    params[i] += velocity[i];
  }
}

}  // namespace paddy
