#pragma once

#include <cstddef>
#include <string_view>

namespace glocal::kernels {

// Dense float64 inner loops used by the network and the optimizer. Every
// matrix argument is row-major and tightly packed (leading dimension == cols).
//
// A kernel set guarantees that each output element of `dense_nt` is computed by
// the same sequence of floating-point operations no matter how many rows are
// in the batch or where the row sits, so predictions are bitwise
// row-independent within one kernel set.

/// C[m x n] = A[m x k] * B[n x k]^T + bias[n]   (bias may be null)
using DenseNtFn = void (*)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                           const double* b, const double* bias, double* c);

/// C[m x k] += A[m x n] * B[n x k]
using AccumNnFn = void (*)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                           const double* b, double* c);

/// C[n x k] += A[m x n]^T * B[m x k]
using AccumTnFn = void (*)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                           const double* b, double* c);

struct AdamCoefficients {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

/// One elementwise Adam update over n coordinates. Bitwise identical across
/// kernel sets (no fused multiply-add).
using AdamFn = void (*)(std::size_t n, double* theta, const double* grad, double* m, double* v,
                        const AdamCoefficients& coef);

struct KernelSet {
  std::string_view name;
  DenseNtFn dense_nt;
  AccumNnFn accum_nn;
  AccumTnFn accum_tn;
  AdamFn adam;
};

const KernelSet& scalar();

/// AVX2+FMA kernels, or nullptr when the build or the CPU lacks them.
const KernelSet* avx2();

/// The kernel set chosen at first use: AVX2 when available, scalar otherwise.
/// Setting GLOCAL_KERNELS=scalar in the environment forces the scalar set.
const KernelSet& active();

}  // namespace glocal::kernels
