#include "kernels_impl.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace paddy::kernels::parallel {

namespace {
// Below this many rows the fork/join overhead dominates.
constexpr std::ptrdiff_t kMinParallelRows = 64;
}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void affine(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y) {
  detail::check_affine(x, w, bias, y);
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::ptrdiff_t r = 0; r < n; ++r) detail::affine_row(x, w, bias, y, r);
}

void affine_input_grad(const Matrix& dy, const Matrix& w, Matrix& dx) {
  detail::check_affine_input_grad(dy, w, dx);
  const auto n = static_cast<std::ptrdiff_t>(dy.rows());
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::ptrdiff_t r = 0; r < n; ++r) detail::affine_input_grad_row(dy, w, dx, r);
}

void affine_param_grad(const Matrix& dy, const Matrix& x, Matrix& dw, std::span<double> dbias) {
  detail::check_affine_param_grad(dy, x, dw, dbias);
  const auto outs = static_cast<std::ptrdiff_t>(dy.cols());
  const bool big = static_cast<std::ptrdiff_t>(dy.rows()) >= kMinParallelRows;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t o = 0; o < outs; ++o) detail::affine_param_grad_out(dy, x, dw, dbias, o);
}

void conv1d(const Matrix& x, std::span<const double> kernel, std::span<const double> bias,
            const ConvShape& s, Matrix& y) {
  detail::check_conv(x, kernel, bias, s, y);
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::ptrdiff_t r = 0; r < n; ++r) detail::conv1d_row(x, kernel, bias, s, y, r);
}

void conv1d_input_grad(const Matrix& dy, std::span<const double> kernel, const ConvShape& s,
                       Matrix& dx) {
  detail::check_conv_input_grad(dy, kernel, s, dx);
  const auto n = static_cast<std::ptrdiff_t>(dy.rows());
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::ptrdiff_t r = 0; r < n; ++r) detail::conv1d_input_grad_row(dy, kernel, s, dx, r);
}

void conv1d_param_grad(const Matrix& dy, const Matrix& x, const ConvShape& s,
                       std::span<double> dkernel, std::span<double> dbias) {
  detail::check_conv_param_grad(dy, x, s, dkernel, dbias);
  const auto filters = static_cast<std::ptrdiff_t>(s.filters);
  const bool big = static_cast<std::ptrdiff_t>(dy.rows()) >= kMinParallelRows;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t f = 0; f < filters; ++f)
    detail::conv1d_param_grad_filter(dy, x, s, dkernel, dbias, f);
}

}  // namespace paddy::kernels::parallel
