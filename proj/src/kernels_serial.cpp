#include "kernels_impl.hpp"

namespace paddy::kernels::serial {

void affine(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y) {
  detail::check_affine(x, w, bias, y);
  for (std::size_t r = 0; r < x.rows(); ++r) detail::affine_row(x, w, bias, y, r);
}

void affine_input_grad(const Matrix& dy, const Matrix& w, Matrix& dx) {
  detail::check_affine_input_grad(dy, w, dx);
  for (std::size_t r = 0; r < dy.rows(); ++r) detail::affine_input_grad_row(dy, w, dx, r);
}

void affine_param_grad(const Matrix& dy, const Matrix& x, Matrix& dw, std::span<double> dbias) {
  detail::check_affine_param_grad(dy, x, dw, dbias);
  for (std::size_t o = 0; o < dy.cols(); ++o) detail::affine_param_grad_out(dy, x, dw, dbias, o);
}

void conv1d(const Matrix& x, std::span<const double> kernel, std::span<const double> bias,
            const ConvShape& s, Matrix& y) {
  detail::check_conv(x, kernel, bias, s, y);
  for (std::size_t r = 0; r < x.rows(); ++r) detail::conv1d_row(x, kernel, bias, s, y, r);
}

void conv1d_input_grad(const Matrix& dy, std::span<const double> kernel, const ConvShape& s,
                       Matrix& dx) {
  detail::check_conv_input_grad(dy, kernel, s, dx);
  for (std::size_t r = 0; r < dy.rows(); ++r) detail::conv1d_input_grad_row(dy, kernel, s, dx, r);
}

void conv1d_param_grad(const Matrix& dy, const Matrix& x, const ConvShape& s,
                       std::span<double> dkernel, std::span<double> dbias) {
  detail::check_conv_param_grad(dy, x, s, dkernel, dbias);
  for (std::size_t f = 0; f < s.filters; ++f)
    detail::conv1d_param_grad_filter(dy, x, s, dkernel, dbias, f);
}

}  // namespace paddy::kernels::serial
