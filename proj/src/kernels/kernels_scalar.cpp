#include <cmath>

#include "glocal/kernels.hpp"

namespace glocal::kernels {
namespace {

void dense_nt_scalar(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                     const double* bias, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* br = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      c[i * n + j] = bias ? s + bias[j] : s;
    }
  }
}

void accum_nn_scalar(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                     double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* cr = c + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = a[i * n + j];
      if (s == 0.0) continue;
      const double* br = b + j * k;
      for (std::size_t q = 0; q < k; ++q) cr[q] += s * br[q];
    }
  }
}

void accum_tn_scalar(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                     double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* br = b + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = a[i * n + j];
      if (s == 0.0) continue;
      double* cr = c + j * k;
      for (std::size_t q = 0; q < k; ++q) cr[q] += s * br[q];
    }
  }
}

void adam_scalar(std::size_t n, double* theta, const double* grad, double* m, double* v,
                 const AdamCoefficients& coef) {
  const double one_minus_b1 = 1.0 - coef.beta1;
  const double one_minus_b2 = 1.0 - coef.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = coef.beta1 * m[i] + one_minus_b1 * g;
    v[i] = coef.beta2 * v[i] + one_minus_b2 * (g * g);
    const double m_hat = m[i] / coef.bias_correction1;
    const double v_hat = v[i] / coef.bias_correction2;
    theta[i] -= (coef.lr * m_hat) / (std::sqrt(v_hat) + coef.eps);
  }
}

}  // namespace

const KernelSet& scalar() {
  static const KernelSet set{"scalar", dense_nt_scalar, accum_nn_scalar, accum_tn_scalar,
                             adam_scalar};
  return set;
}

}  // namespace glocal::kernels
