#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "paddy/layers.hpp"
#include "paddy/optim.hpp"

namespace paddy {

/// Ordered layer stack ending in a softmax over the growth stages.
///
/// Composition rules checked by validate():
///   * widths chain from layer to layer;
///   * exactly one softmax, last, of width 5;
///   * batch norm sits at the input or right after a linear map (dense/conv),
///     and in the latter case is followed by an activation; the linear map
///     before it carries no bias;
///   * dropout sits at the input or right after an activation.
class Network {
 public:
  Network() = default;
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  Layer& add(std::unique_ptr<Layer> layer);
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    return static_cast<L&>(add(std::make_unique<L>(std::forward<Args>(args)...)));
  }

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  std::size_t in_width() const;
  std::size_t out_width() const;

  /// Throws std::invalid_argument naming the first violated rule.
  void validate() const;

  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }

  /// Pre-softmax scores. Train mode caches activations for backward().
  Matrix logits(const Matrix& x);
  Matrix infer_logits(const Matrix& x) const;
  /// Class probabilities (inference path).
  Matrix probabilities(const Matrix& x) const;
  /// Backpropagates d(loss)/d(logits); fills every layer's parameter gradients.
  void backward(const Matrix& dlogits);

  std::vector<ParamView> params();
  std::size_t parameter_count();

  /// Reseeds every dropout layer from one seed (layer position mixed in).
  void reseed_dropout(std::uint64_t seed);

  /// One-line composition, e.g. "dense(11>64,nobias) bn(64) relu dropout(0.5) ...".
  std::string describe() const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  Mode mode_ = Mode::train;
};

enum class Family { linear, dense, conv };

/// Architecture recipe for the method families.
struct ArchSpec {
  Family family = Family::dense;
  std::vector<std::size_t> hidden{64, 32};       // dense family
  std::vector<std::size_t> conv_filters{16, 16};  // conv family
  std::size_t kernel_width = 3;
  bool batchnorm = false;
  bool dropout = false;
  double dropout_rate = 0.5;
  bool input_batchnorm = false;
};

/// Builds and initializes (seeded) a network for `input_width` features.
Network build_network(const ArchSpec& arch, std::size_t input_width, std::uint64_t seed);

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;  // train-mode accuracy accumulated over the epoch's batches

  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct TrainResult {
  Network network;  // left in infer mode
  std::vector<EpochStats> trace;
};

/// Shuffled minibatch momentum SGD on softmax cross-entropy.
/// A trailing batch of one row is merged into the previous batch so batch
/// norm always sees at least two rows.
/// Throws NumericError naming epoch and batch if the loss stops being finite.
TrainResult train(Network net, const Matrix& x, std::span<const std::size_t> labels,
                  const TrainConfig& cfg);

struct Prediction {
  std::vector<std::size_t> labels;
  Matrix probabilities;
};

/// Requires infer mode. Ties go to the lowest class index.
Prediction predict(const Network& net, const Matrix& x);

/// Index of the largest entry; the first one on ties.
std::size_t argmax(std::span<const double> values);

/// Mean softmax cross-entropy of the network on (x, labels) in the given mode.
double network_loss(Network& net, const Matrix& x, std::span<const std::size_t> labels, Mode mode);

}  // namespace paddy
