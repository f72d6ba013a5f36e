#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace paddy {

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

/// Momentum SGD: v <- momentum * v - lr * g;  p <- p + v.
void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
              const TrainConfig& cfg);

}  // namespace paddy
