#include <limits>

#include "glocal/clustering.hpp"
#include "glocal/errors.hpp"

namespace glocal {
namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

std::size_t nearest(std::span<const double> point, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(point, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Every empty cluster seizes the point farthest from its current centroid
// (lowest index on ties), taken from a cluster that keeps at least one member.
void repair_empty(const Matrix& points, const Matrix& centroids, std::vector<std::size_t>& assign) {
  const std::size_t k = centroids.rows();
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t a : assign) ++counts[a];
  for (std::size_t e = 0; e < k; ++e) {
    if (counts[e] != 0) continue;
    std::size_t victim = assign.size();
    double far = -1.0;
    for (std::size_t i = 0; i < assign.size(); ++i) {
      if (counts[assign[i]] < 2) continue;
      const double d = squared_distance(points.row(i), centroids.row(assign[i]));
      if (d > far) {
        far = d;
        victim = i;
      }
    }
    if (victim == assign.size()) break;  // fewer points than clusters
    --counts[assign[victim]];
    assign[victim] = e;
    ++counts[e];
  }
}

Matrix cluster_means(const Matrix& points, std::span<const std::size_t> assign, std::size_t k,
                     const Matrix& fallback) {
  Matrix means(k, points.cols());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < assign.size(); ++i) {
    ++counts[assign[i]];
    auto dst = means.row(assign[i]);
    auto src = points.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    auto row = means.row(c);
    if (counts[c] == 0) {
      auto keep = fallback.row(c);
      std::copy(keep.begin(), keep.end(), row.begin());
      continue;
    }
    for (double& v : row) v /= static_cast<double>(counts[c]);
  }
  return means;
}

}  // namespace

double sum_squared_error(const Matrix& points, std::span<const std::size_t> assignments,
                         const Matrix& centroids) {
  double sse = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i)
    sse += squared_distance(points.row(i), centroids.row(assignments[i]));
  return sse;
}

KMeansResult kmeans_refine(const Matrix& points, const Matrix& initial) {
  const std::size_t n = points.rows(), k = initial.rows();
  if (k == 0) throw CardinalityError("k-means needs at least one centroid");
  if (k > n) throw CardinalityError("more centroids than points");
  if (initial.cols() != points.cols()) throw ShapeError("centroid dimension differs from points");

  KMeansResult r;
  r.centroids = initial;
  r.assignments.assign(n, k);  // k marks "unassigned"
  std::vector<std::size_t> next(n);
  for (std::size_t it = 1; it <= kMaxLloydIterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) next[i] = nearest(points.row(i), r.centroids);
    repair_empty(points, r.centroids, next);
    const bool changed = next != r.assignments;
    r.assignments = next;
    r.centroids = cluster_means(points, r.assignments, k, r.centroids);
    r.iterations = it;
    if (!changed) break;
  }
  r.sse = sum_squared_error(points, r.assignments, r.centroids);
  return r;
}

}  // namespace glocal
