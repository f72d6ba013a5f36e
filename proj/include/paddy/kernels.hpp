#pragma once

// Hot loops of the network, in two builds:
//   serial::   single-threaded reference implementation, kept for testing;
//   parallel:: OpenMP implementation used by the layers.
// Both compute every output element with the same summation order, so their
// results are bitwise identical for any thread count.

#include <cstddef>
#include <span>

#include "paddy/matrix.hpp"

namespace paddy::kernels {

/// Shape of a 1-D convolution over a channel-major signal (cols = channels * length).
struct ConvShape {
  std::size_t in_channels = 1;
  std::size_t in_length = 0;
  std::size_t filters = 1;
  std::size_t width = 1;
  std::size_t stride = 1;

  std::size_t out_length() const { return (in_length - width) / stride + 1; }
  std::size_t in_cols() const { return in_channels * in_length; }
  std::size_t out_cols() const { return filters * out_length(); }
  std::size_t kernel_size() const { return filters * in_channels * width; }
};

#define PADDY_KERNEL_DECLS                                                                     \
  /* y(n x out) = x(n x in) * w(out x in)^T + bias (bias may be empty) */                      \
  void affine(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y);      \
  /* dx(n x in) = dy(n x out) * w(out x in) */                                                 \
  void affine_input_grad(const Matrix& dy, const Matrix& w, Matrix& dx);                       \
  /* dw(out x in) = dy^T * x;  dbias = column sums of dy (skipped when empty) */               \
  void affine_param_grad(const Matrix& dy, const Matrix& x, Matrix& dw,                        \
                         std::span<double> dbias);                                             \
  /* valid cross-correlation; kernel laid out [filter][channel][tap] */                        \
  void conv1d(const Matrix& x, std::span<const double> kernel, std::span<const double> bias,   \
              const ConvShape& s, Matrix& y);                                                  \
  void conv1d_input_grad(const Matrix& dy, std::span<const double> kernel, const ConvShape& s, \
                         Matrix& dx);                                                          \
  void conv1d_param_grad(const Matrix& dy, const Matrix& x, const ConvShape& s,                \
                         std::span<double> dkernel, std::span<double> dbias);

namespace serial {
PADDY_KERNEL_DECLS
}  // namespace serial

namespace parallel {
PADDY_KERNEL_DECLS
/// Threads OpenMP would use for the kernels (1 when built without OpenMP).
int max_threads();
}  // namespace parallel

#undef PADDY_KERNEL_DECLS

}  // namespace paddy::kernels
