#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "glocal/kernels.hpp"
#include "test_support.hpp"

using namespace glocal;
namespace k = glocal::kernels;

namespace {

// Naive reference independent of both kernel sets.
Matrix reference_dense_nt(const Matrix& a, const Matrix& b, const std::vector<double>& bias) {
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      long double s = bias.empty() ? 0.0L : bias[j];
      for (std::size_t p = 0; p < a.cols(); ++p) s += static_cast<long double>(a(i, p)) * b(j, p);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

void require_close(const Matrix& x, const Matrix& y, double tol) {
  REQUIRE(x.rows() == y.rows());
  REQUIRE(x.cols() == y.cols());
  for (std::size_t i = 0; i < x.size(); ++i)
    REQUIRE(std::abs(x.data()[i] - y.data()[i]) <= tol * (1.0 + std::abs(y.data()[i])));
}

std::vector<const k::KernelSet*> kernel_sets() {
  std::vector<const k::KernelSet*> sets{&k::scalar()};
  if (k::avx2()) sets.push_back(k::avx2());
  return sets;
}

}  // namespace

TEST_CASE("active kernel set is one of the available sets") {
  const k::KernelSet& a = k::active();
  const bool known = &a == &k::scalar() || &a == k::avx2();
  CHECK(known);
  if (const char* env = std::getenv("GLOCAL_KERNELS"); env && std::string_view(env) == "scalar")
    CHECK(&a == &k::scalar());
}

TEST_CASE("dense_nt matches the reference for awkward shapes") {
  std::mt19937_64 rng(11);
  for (const k::KernelSet* set : kernel_sets()) {
    CAPTURE(set->name);
    for (std::size_t m : {1u, 3u, 4u, 5u, 9u})
      for (std::size_t n : {1u, 2u, 3u, 7u})
        for (std::size_t kk : {1u, 3u, 4u, 5u, 17u, 67u}) {
          const Matrix a = test::random_matrix(m, kk, rng);
          const Matrix b = test::random_matrix(n, kk, rng);
          std::vector<double> bias(n);
          for (double& v : bias) v = std::uniform_real_distribution<double>(-1, 1)(rng);
          Matrix c(m, n);
          set->dense_nt(m, n, kk, a.data(), b.data(), bias.data(), c.data());
          require_close(c, reference_dense_nt(a, b, bias), 1e-13);
          Matrix c0(m, n);
          set->dense_nt(m, n, kk, a.data(), b.data(), nullptr, c0.data());
          require_close(c0, reference_dense_nt(a, b, {}), 1e-13);
        }
  }
}

TEST_CASE("dense_nt rows are bitwise independent of batch composition") {
  std::mt19937_64 rng(12);
  for (const k::KernelSet* set : kernel_sets()) {
    CAPTURE(set->name);
    const std::size_t m = 11, n = 13, kk = 37;
    const Matrix a = test::random_matrix(m, kk, rng);
    const Matrix b = test::random_matrix(n, kk, rng);
    const Matrix bias = test::random_matrix(1, n, rng);
    Matrix full(m, n);
    set->dense_nt(m, n, kk, a.data(), b.data(), bias.data(), full.data());
    for (std::size_t i = 0; i < m; ++i) {
      Matrix one(1, n);
      set->dense_nt(1, n, kk, a.data() + i * kk, b.data(), bias.data(), one.data());
      for (std::size_t j = 0; j < n; ++j) REQUIRE(one(0, j) == full(i, j));
    }
  }
}

TEST_CASE("accumulating products agree across kernel sets") {
  std::mt19937_64 rng(13);
  for (std::size_t m : {1u, 4u, 7u, 40u})
    for (std::size_t n : {1u, 3u, 6u})
      for (std::size_t kk : {1u, 5u, 8u, 33u}) {
        const Matrix a = test::random_matrix(m, n, rng);
        const Matrix b = test::random_matrix(n, kk, rng);
        const Matrix c0 = test::random_matrix(m, kk, rng);
        Matrix expect = c0;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < kk; ++p) expect(i, p) += a(i, j) * b(j, p);

        const Matrix bt = test::random_matrix(m, kk, rng);
        const Matrix d0 = test::random_matrix(n, kk, rng);
        Matrix expect_t = d0;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < kk; ++p) expect_t(j, p) += a(i, j) * bt(i, p);

        for (const k::KernelSet* set : kernel_sets()) {
          CAPTURE(set->name);
          Matrix c = c0;
          set->accum_nn(m, n, kk, a.data(), b.data(), c.data());
          require_close(c, expect, 1e-12);
          Matrix d = d0;
          set->accum_tn(m, n, kk, a.data(), bt.data(), d.data());
          require_close(d, expect_t, 1e-12);
        }
      }
}

TEST_CASE("adam kernel is bitwise identical across kernel sets") {
  if (!k::avx2()) return;
  std::mt19937_64 rng(14);
  const std::size_t n = 1003;
  const Matrix theta0 = test::random_matrix(1, n, rng);
  const Matrix grad = test::random_matrix(1, n, rng);
  const Matrix m0 = test::random_matrix(1, n, rng, -0.1, 0.1);
  const Matrix v0 = test::random_matrix(1, n, rng, 0.0, 0.1);
  const k::AdamCoefficients coef{1e-3, 0.9, 0.999, 1e-8, 1.0 - std::pow(0.9, 7),
                                 1.0 - std::pow(0.999, 7)};
  Matrix ts = theta0, ms = m0, vs = v0, tv = theta0, mv = m0, vv = v0;
  k::scalar().adam(n, ts.data(), grad.data(), ms.data(), vs.data(), coef);
  k::avx2()->adam(n, tv.data(), grad.data(), mv.data(), vv.data(), coef);
  CHECK(ts == tv);
  CHECK(ms == mv);
  CHECK(vs == vv);
}

TEST_CASE("adam kernel applies the bias-corrected update") {
  // Step 1 from zero moments: m_hat = g, v_hat = g^2, so theta moves by lr*g/(|g|+eps).
  const k::AdamCoefficients coef{0.01, 0.9, 0.999, 1e-8, 1.0 - 0.9, 1.0 - 0.999};
  for (const k::KernelSet* set : kernel_sets()) {
    double theta[3] = {1.0, -2.0, 0.5};
    const double grad[3] = {0.5, -4.0, 0.0};
    double m[3] = {}, v[3] = {};
    set->adam(3, theta, grad, m, v, coef);
    CHECK(theta[0] == doctest::Approx(1.0 - 0.01 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
    CHECK(theta[1] == doctest::Approx(-2.0 + 0.01 * 4.0 / (4.0 + 1e-8)).epsilon(1e-12));
    CHECK(theta[2] == 0.5);
    CHECK(m[0] == doctest::Approx(0.05));
    CHECK(v[1] == doctest::Approx(0.016));
  }
}
