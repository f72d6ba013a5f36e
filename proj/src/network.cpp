#include "paddy/network.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "paddy/error.hpp"
#include "paddy/stage.hpp"

namespace paddy {

Network::Network(const Network& other) : mode_(other.mode_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Layer& Network::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  return *layers_.back();
}

std::size_t Network::in_width() const { return layers_.empty() ? 0 : layers_.front()->in_width(); }
std::size_t Network::out_width() const { return layers_.empty() ? 0 : layers_.back()->out_width(); }

namespace {

bool is_linear(LayerKind k) { return k == LayerKind::dense || k == LayerKind::conv1d; }

bool linear_has_bias(const Layer& l) {
  if (auto* d = dynamic_cast<const DenseLayer*>(&l)) return d->has_bias();
  if (auto* c = dynamic_cast<const Conv1DLayer*>(&l)) return c->has_bias();
  return false;
}

}  // namespace

void Network::validate() const {
  auto fail = [](std::size_t i, const std::string& msg) {
    throw std::invalid_argument("network layer " + std::to_string(i) + ": " + msg);
  };
  if (layers_.empty()) throw std::invalid_argument("network has no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = *layers_[i];
    if (i > 0 && layers_[i - 1]->out_width() != l.in_width())
      fail(i, "input width " + std::to_string(l.in_width()) + " does not match previous output " +
                  std::to_string(layers_[i - 1]->out_width()));
    const bool last = i + 1 == layers_.size();
    if (l.kind() == LayerKind::softmax && !last) fail(i, "softmax must be the final layer");
    if (l.kind() == LayerKind::batchnorm && i > 0) {
      const Layer& prev = *layers_[i - 1];
      if (!is_linear(prev.kind())) fail(i, "batch norm must follow a dense or conv1d layer");
      if (linear_has_bias(prev)) fail(i, "the linear map feeding batch norm must have no bias");
      if (last || layers_[i + 1]->kind() != LayerKind::activation)
        fail(i, "batch norm must be followed by an activation");
    }
    if (l.kind() == LayerKind::dropout && i > 0 &&
        layers_[i - 1]->kind() != LayerKind::activation)
      fail(i, "dropout must follow an activation");
  }
  const Layer& tail = *layers_.back();
  if (tail.kind() != LayerKind::softmax) throw std::invalid_argument("network must end in softmax");
  if (tail.out_width() != kStageCount)
    throw std::invalid_argument("softmax output width must be " + std::to_string(kStageCount));
}

Matrix Network::logits(const Matrix& x) {
  if (mode_ == Mode::infer) return infer_logits(x);
  Matrix h = x;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) h = layers_[i]->forward(h, Mode::train);
  return h;
}

Matrix Network::infer_logits(const Matrix& x) const {
  Matrix h = x;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) h = layers_[i]->infer(h);
  return h;
}

Matrix Network::probabilities(const Matrix& x) const {
  return layers_.back()->infer(infer_logits(x));
}

void Network::backward(const Matrix& dlogits) {
  Matrix g = dlogits;
  for (std::size_t i = layers_.size() - 1; i-- > 0;) g = layers_[i]->backward(g);
}

std::vector<ParamView> Network::params() {
  std::vector<ParamView> all;
  for (auto& l : layers_) {
    auto p = l->params();
    all.insert(all.end(), p.begin(), p.end());
  }
  return all;
}

std::size_t Network::parameter_count() {
  std::size_t n = 0;
  for (const auto& p : params()) n += p.value.size();
  return n;
}

void Network::reseed_dropout(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (auto* d = dynamic_cast<DropoutLayer*>(layers_[i].get())) {
      std::seed_seq seq{seed, static_cast<std::uint64_t>(i), std::uint64_t{0xd5}};
      std::mt19937_64 mix(seq);
      d->reseed(mix());
    }
}

std::string Network::describe() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = *layers_[i];
    if (i) out << ' ';
    switch (l.kind()) {
      case LayerKind::dense: {
        const auto& d = static_cast<const DenseLayer&>(l);
        out << "dense(" << d.in_width() << '>' << d.out_width() << (d.has_bias() ? "" : ",nobias")
            << ')';
        break;
      }
      case LayerKind::conv1d: {
        const auto& c = static_cast<const Conv1DLayer&>(l);
        const auto& s = c.shape();
        out << "conv1d(" << s.in_channels << 'x' << s.in_length << '>' << s.filters << 'x'
            << s.out_length() << ",w" << s.width << ",s" << s.stride
            << (c.has_bias() ? "" : ",nobias") << ')';
        break;
      }
      case LayerKind::batchnorm: {
        const auto& b = static_cast<const BatchNormLayer&>(l);
        out << "bn(" << b.channels();
        if (b.spatial() > 1) out << 'x' << b.spatial();
        out << ')';
        break;
      }
      case LayerKind::activation:
        out << to_string(static_cast<const ActivationLayer&>(l).fn());
        break;
      case LayerKind::dropout:
        out << "dropout(" << static_cast<const DropoutLayer&>(l).rate() << ')';
        break;
      case LayerKind::softmax:
        out << "softmax(" << l.out_width() << ')';
        break;
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------

Network build_network(const ArchSpec& arch, std::size_t input_width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Network net;
  std::size_t width = input_width;
  if (arch.input_batchnorm) net.emplace<BatchNormLayer>(width);

  auto regularized_tail = [&](std::size_t channels, std::size_t spatial, bool with_bn,
                              bool with_dropout) {
    if (with_bn) net.emplace<BatchNormLayer>(channels, spatial);
    net.emplace<ActivationLayer>(ActivationFn::relu, channels * spatial);
    if (with_dropout) net.emplace<DropoutLayer>(arch.dropout_rate, channels * spatial);
  };

  switch (arch.family) {
    case Family::linear:
      break;
    case Family::dense:
      for (std::size_t h : arch.hidden) {
        net.emplace<DenseLayer>(width, h, !arch.batchnorm).init(rng);
        regularized_tail(h, 1, arch.batchnorm, arch.dropout);
        width = h;
      }
      break;
    case Family::conv: {
      std::size_t channels = 1;
      std::size_t length = width;
      for (std::size_t k = 0; k < arch.conv_filters.size(); ++k) {
        // Regularizers go on every conv block except the last.
        const bool regularize = k + 1 < arch.conv_filters.size();
        const bool bn = arch.batchnorm && regularize;
        auto& conv = net.emplace<Conv1DLayer>(channels, length, arch.conv_filters[k],
                                              arch.kernel_width, 1, !bn);
        conv.init(rng);
        channels = conv.shape().filters;
        length = conv.shape().out_length();
        regularized_tail(channels, length, bn, arch.dropout && regularize);
      }
      width = channels * length;
      break;
    }
  }
  net.emplace<DenseLayer>(width, kStageCount, true).init(rng);
  net.emplace<SoftmaxLayer>(kStageCount);
  net.validate();
  return net;
}

// ---------------------------------------------------------------------------

namespace {

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = x.row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best]) best = k;
  return best;
}

TrainResult train(Network net, const Matrix& x, std::span<const std::size_t> labels,
                  const TrainConfig& cfg) {
  validate(cfg);
  net.validate();
  if (x.rows() == 0) throw std::invalid_argument("train: empty training set");
  if (labels.size() != x.rows()) throw std::invalid_argument("train: label count mismatch");
  if (x.cols() != net.in_width())
    throw std::invalid_argument("train: feature width " + std::to_string(x.cols()) +
                                " does not match network input " + std::to_string(net.in_width()));

  TrainResult result;
  net.set_mode(Mode::train);
  net.reseed_dropout(cfg.seed);
  std::mt19937_64 rng(cfg.seed);

  auto params = net.params();
  std::vector<std::vector<double>> velocity;
  velocity.reserve(params.size());
  for (const auto& p : params) velocity.emplace_back(p.value.size(), 0.0);

  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});

  // Batch boundaries; a trailing single row joins the previous batch.
  std::vector<std::size_t> bounds;
  for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) bounds.push_back(b);
  if (bounds.size() > 1 && order.size() - bounds.back() == 1) bounds.pop_back();
  bounds.push_back(order.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      const std::span<const std::size_t> idx(order.data() + bounds[b], bounds[b + 1] - bounds[b]);
      const Matrix batch = gather_rows(x, idx);
      std::vector<std::size_t> batch_labels(idx.size());
      for (std::size_t r = 0; r < idx.size(); ++r) batch_labels[r] = labels[idx[r]];

      const Matrix z = net.logits(batch);
      auto lg = softmax_cross_entropy(z, batch_labels);
      if (!std::isfinite(lg.loss))
        throw NumericError("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch + 1) + ", batch " + std::to_string(b + 1));
      loss_sum += lg.loss * static_cast<double>(idx.size());
      for (std::size_t r = 0; r < idx.size(); ++r)
        if (argmax(z.row(r)) == batch_labels[r]) ++correct;

      net.backward(lg.grad);
      for (std::size_t p = 0; p < params.size(); ++p)
        sgd_step(params[p].value, params[p].grad, velocity[p], cfg);
    }
    const double n = static_cast<double>(x.rows());
    result.trace.push_back({loss_sum / n, static_cast<double>(correct) / n});
  }
  net.set_mode(Mode::infer);
  result.network = std::move(net);
  return result;
}

Prediction predict(const Network& net, const Matrix& x) {
  if (net.mode() != Mode::infer) throw std::logic_error("predict requires a network in infer mode");
  if (x.cols() != net.in_width())
    throw DataError("feature width " + std::to_string(x.cols()) +
                    " does not match model input width " + std::to_string(net.in_width()));
  Prediction p;
  p.probabilities = net.probabilities(x);
  p.labels.resize(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) p.labels[r] = argmax(p.probabilities.row(r));
  return p;
}

double network_loss(Network& net, const Matrix& x, std::span<const std::size_t> labels,
                    Mode mode) {
  const Mode saved = net.mode();
  net.set_mode(mode);
  const Matrix z = net.logits(x);
  net.set_mode(saved);
  return softmax_cross_entropy(z, labels).loss;
}

}  // namespace paddy
