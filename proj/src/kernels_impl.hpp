#pragma once

// Per-row / per-output-slice bodies shared by the serial and OpenMP kernels.
// Keeping the inner loops in one place fixes the summation order for both.

#include <algorithm>
#include <span>

#include "paddy/kernels.hpp"

namespace paddy::kernels::detail {

inline void check_affine(const Matrix& x, const Matrix& w, std::span<const double> bias,
                         Matrix& y) {
  if (x.cols() != w.cols()) throw std::invalid_argument("affine: input width mismatch");
  if (!bias.empty() && bias.size() != w.rows())
    throw std::invalid_argument("affine: bias length mismatch");
  if (y.rows() != x.rows() || y.cols() != w.rows()) y = Matrix(x.rows(), w.rows());
}

inline void affine_row(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y,
                       std::size_t r) {
  const auto xr = x.row(r);
  auto yr = y.row(r);
  for (std::size_t o = 0; o < w.rows(); ++o) {
    const auto wo = w.row(o);
    double acc = 0.0;
    for (std::size_t i = 0; i < xr.size(); ++i) acc += xr[i] * wo[i];
    yr[o] = bias.empty() ? acc : acc + bias[o];
  }
}

inline void check_affine_input_grad(const Matrix& dy, const Matrix& w, Matrix& dx) {
  if (dy.cols() != w.rows()) throw std::invalid_argument("affine_input_grad: width mismatch");
  if (dx.rows() != dy.rows() || dx.cols() != w.cols()) dx = Matrix(dy.rows(), w.cols());
}

inline void affine_input_grad_row(const Matrix& dy, const Matrix& w, Matrix& dx, std::size_t r) {
  auto dxr = dx.row(r);
  std::fill(dxr.begin(), dxr.end(), 0.0);
  const auto dyr = dy.row(r);
  for (std::size_t o = 0; o < w.rows(); ++o) {
    const double g = dyr[o];
    const auto wo = w.row(o);
    for (std::size_t i = 0; i < dxr.size(); ++i) dxr[i] += g * wo[i];
  }
}

inline void check_affine_param_grad(const Matrix& dy, const Matrix& x, Matrix& dw,
                                    std::span<double> dbias) {
  if (dy.rows() != x.rows()) throw std::invalid_argument("affine_param_grad: batch mismatch");
  if (!dbias.empty() && dbias.size() != dy.cols())
    throw std::invalid_argument("affine_param_grad: bias length mismatch");
  if (dw.rows() != dy.cols() || dw.cols() != x.cols()) dw = Matrix(dy.cols(), x.cols());
}

inline void affine_param_grad_out(const Matrix& dy, const Matrix& x, Matrix& dw,
                                  std::span<double> dbias, std::size_t o) {
  auto dwo = dw.row(o);
  std::fill(dwo.begin(), dwo.end(), 0.0);
  double db = 0.0;
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    const double g = dy(r, o);
    const auto xr = x.row(r);
    for (std::size_t i = 0; i < dwo.size(); ++i) dwo[i] += g * xr[i];
    db += g;
  }
  if (!dbias.empty()) dbias[o] = db;
}

inline void check_conv(const Matrix& x, std::span<const double> kernel,
                       std::span<const double> bias, const ConvShape& s, Matrix& y) {
  if (s.stride == 0 || s.width == 0 || s.width > s.in_length)
    throw std::invalid_argument("conv1d: kernel width/stride incompatible with input length");
  if (x.cols() != s.in_cols()) throw std::invalid_argument("conv1d: input width mismatch");
  if (kernel.size() != s.kernel_size()) throw std::invalid_argument("conv1d: kernel size mismatch");
  if (!bias.empty() && bias.size() != s.filters)
    throw std::invalid_argument("conv1d: bias length mismatch");
  if (y.rows() != x.rows() || y.cols() != s.out_cols()) y = Matrix(x.rows(), s.out_cols());
}

inline void conv1d_row(const Matrix& x, std::span<const double> kernel,
                       std::span<const double> bias, const ConvShape& s, Matrix& y,
                       std::size_t r) {
  const auto xr = x.row(r);
  auto yr = y.row(r);
  const std::size_t lo = s.out_length();
  for (std::size_t f = 0; f < s.filters; ++f) {
    for (std::size_t t = 0; t < lo; ++t) {
      double acc = 0.0;
      for (std::size_t c = 0; c < s.in_channels; ++c) {
        const double* k = kernel.data() + (f * s.in_channels + c) * s.width;
        const double* in = xr.data() + c * s.in_length + t * s.stride;
        for (std::size_t j = 0; j < s.width; ++j) acc += k[j] * in[j];
      }
      yr[f * lo + t] = bias.empty() ? acc : acc + bias[f];
    }
  }
}

inline void check_conv_input_grad(const Matrix& dy, std::span<const double> kernel,
                                  const ConvShape& s, Matrix& dx) {
  if (dy.cols() != s.out_cols()) throw std::invalid_argument("conv1d_input_grad: width mismatch");
  if (kernel.size() != s.kernel_size())
    throw std::invalid_argument("conv1d_input_grad: kernel size mismatch");
  if (dx.rows() != dy.rows() || dx.cols() != s.in_cols()) dx = Matrix(dy.rows(), s.in_cols());
}

inline void conv1d_input_grad_row(const Matrix& dy, std::span<const double> kernel,
                                  const ConvShape& s, Matrix& dx, std::size_t r) {
  auto dxr = dx.row(r);
  std::fill(dxr.begin(), dxr.end(), 0.0);
  const auto dyr = dy.row(r);
  const std::size_t lo = s.out_length();
  for (std::size_t f = 0; f < s.filters; ++f) {
    for (std::size_t t = 0; t < lo; ++t) {
      const double g = dyr[f * lo + t];
      for (std::size_t c = 0; c < s.in_channels; ++c) {
        const double* k = kernel.data() + (f * s.in_channels + c) * s.width;
        double* out = dxr.data() + c * s.in_length + t * s.stride;
        for (std::size_t j = 0; j < s.width; ++j) out[j] += g * k[j];
      }
    }
  }
}

inline void check_conv_param_grad(const Matrix& dy, const Matrix& x, const ConvShape& s,
                                  std::span<double> dkernel, std::span<double> dbias) {
  if (dy.rows() != x.rows() || dy.cols() != s.out_cols() || x.cols() != s.in_cols())
    throw std::invalid_argument("conv1d_param_grad: shape mismatch");
  if (dkernel.size() != s.kernel_size() || (!dbias.empty() && dbias.size() != s.filters))
    throw std::invalid_argument("conv1d_param_grad: gradient buffer size mismatch");
}

inline void conv1d_param_grad_filter(const Matrix& dy, const Matrix& x, const ConvShape& s,
                                     std::span<double> dkernel, std::span<double> dbias,
                                     std::size_t f) {
  double* dk = dkernel.data() + f * s.in_channels * s.width;
  std::fill(dk, dk + s.in_channels * s.width, 0.0);
  double db = 0.0;
  const std::size_t lo = s.out_length();
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    const auto xr = x.row(r);
    const auto dyr = dy.row(r);
    for (std::size_t t = 0; t < lo; ++t) {
      const double g = dyr[f * lo + t];
      db += g;
      for (std::size_t c = 0; c < s.in_channels; ++c) {
        const double* in = xr.data() + c * s.in_length + t * s.stride;
        double* k = dk + c * s.width;
        for (std::size_t j = 0; j < s.width; ++j) k[j] += g * in[j];
      }
    }
  }
  if (!dbias.empty()) dbias[f] = db;
}

}  // namespace paddy::kernels::detail
