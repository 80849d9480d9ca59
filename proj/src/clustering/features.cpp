#include <algorithm>
#include <cmath>
#include <string>

#include "glocal/clustering.hpp"
#include "glocal/errors.hpp"

namespace glocal {
namespace {

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

// Ordinary least squares of values on t = 0..n-1.
LineFit fit_line(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double t_mean = (n - 1.0) / 2.0;
  double x_mean = 0.0;
  for (double v : x) x_mean += v;
  x_mean /= n;
  double sxt = 0.0, stt = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    sxt += dt * (x[t] - x_mean);
    stt += dt * dt;
  }
  LineFit fit;
  fit.slope = stt > 0.0 ? sxt / stt : 0.0;
  fit.intercept = x_mean - fit.slope * t_mean;
  return fit;
}

double population_variance(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size());
}

}  // namespace

double seasonal_strength(std::span<const double> x, std::size_t period) {
  if (x.size() < 2 * period || period == 0) return 0.0;
  const LineFit line = fit_line(x);
  std::vector<double> detrended(x.size());
  for (std::size_t t = 0; t < x.size(); ++t)
    detrended[t] = x[t] - (line.intercept + line.slope * static_cast<double>(t));

  std::vector<double> phase_sum(period, 0.0);
  std::vector<std::size_t> phase_count(period, 0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    phase_sum[t % period] += detrended[t];
    ++phase_count[t % period];
  }
  std::vector<double> remainder(x.size());
  for (std::size_t t = 0; t < x.size(); ++t)
    remainder[t] = detrended[t] - phase_sum[t % period] / static_cast<double>(phase_count[t % period]);

  const double var_detrended = population_variance(detrended);
  if (!(var_detrended > 0.0)) return 0.0;
  return std::clamp(1.0 - population_variance(remainder) / var_detrended, 0.0, 1.0);
}

FeatureVector extract_features(std::span<const double> x) {
  if (x.size() < 2 * kStepsPerWeek)
    throw InsufficientDataError("feature extraction needs at least " +
                                std::to_string(2 * kStepsPerWeek) + " values, got " +
                                std::to_string(x.size()));
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);

  double ss = 0.0, lag1 = 0.0, sxt = 0.0, stt = 0.0;
  const double t_mean = (static_cast<double>(n) - 1.0) / 2.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double d = x[t] - mean;
    const double dt = static_cast<double>(t) - t_mean;
    ss += d * d;
    sxt += d * dt;
    stt += dt * dt;
    if (t + 1 < n) lag1 += d * (x[t + 1] - mean);
  }
  const double variance = ss / static_cast<double>(n);

  FeatureVector f{};
  f[0] = mean;
  f[1] = variance;
  if (!(ss > 0.0)) return f;  // constant window: every shape feature is 0

  const double sd = std::sqrt(variance);
  f[2] = lag1 / ss;
  f[3] = (sxt * sxt) / (ss * stt);
  // Coefficient of the unit-norm linear orthogonal polynomial when regressing
  // the z-scored series on a quadratic basis.
  f[4] = (sxt / sd) / std::sqrt(stt);
  f[5] = seasonal_strength(x, kStepsPerDay);
  f[6] = seasonal_strength(x, kStepsPerWeek);
  f[7] = mean != 0.0 ? sd / std::abs(mean) : 0.0;
  return f;
}

FeatureVector extract_features(const Series& s, std::size_t begin, std::size_t end) {
  if (begin > end || end > s.size()) throw ShapeError("feature range outside series");
  return extract_features(std::span<const double>(s.values).subspan(begin, end - begin));
}

Matrix standardize(const Matrix& features, Standardization* params) {
  const std::size_t n = features.rows(), d = features.cols();
  Standardization st;
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += features(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (features(i, j) - mean) * (features(i, j) - mean);
    st.mean[j] = mean;
    st.stddev[j] = std::sqrt(ss / static_cast<double>(n));
  }
  Matrix z(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      z(i, j) = st.stddev[j] > 0.0 ? (features(i, j) - st.mean[j]) / st.stddev[j] : 0.0;
  if (params) *params = std::move(st);
  return z;
}

}  // namespace glocal
