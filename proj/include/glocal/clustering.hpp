#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glocal/data.hpp"
#include "glocal/matrix.hpp"

namespace glocal {

inline constexpr std::size_t kFeatureCount = 8;

/// mean, variance, lag-1 autocorrelation, trend (R² of a linear fit),
/// linearity, seasonal strength at 48 and at 336, coefficient of variation.
using FeatureVector = std::array<double, kFeatureCount>;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "mean", "variance", "acf1", "trend", "linearity", "seasonal_48", "seasonal_336", "cov"};

/// Features of `values[begin, end)`. Variance-dependent features are 0 for a
/// constant window. Throws InsufficientDataError when the window is shorter
/// than two weeks.
FeatureVector extract_features(std::span<const double> values);
FeatureVector extract_features(const Series& s, std::size_t begin, std::size_t end);

/// Seasonal strength at period P: 1 - Var(remainder) / Var(detrended), where
/// the seasonal part is the per-phase mean of the linearly detrended series.
double seasonal_strength(std::span<const double> values, std::size_t period);

struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // population; 0 marks a constant column
};

/// Column z-scores; a zero-variance column maps to all zeros.
Matrix standardize(const Matrix& features, Standardization* params = nullptr);

struct KMeansResult {
  std::vector<std::size_t> assignments;
  Matrix centroids;
  double sse = 0.0;
  std::size_t iterations = 0;
};

inline constexpr std::size_t kMaxLloydIterations = 300;

/// Lloyd refinement from the given centroids until assignments stop changing
/// (or 300 iterations). Ties go to the lowest centroid index; an empty
/// cluster takes over the point farthest from its current centroid.
KMeansResult kmeans_refine(const Matrix& points, const Matrix& centroids);

/// Sum of squared distances of each point to the centroid of its cluster.
double sum_squared_error(const Matrix& points, std::span<const std::size_t> assignments,
                         const Matrix& centroids);

/// k clusters grown from one by repeated splitting: the highest-SSE cluster's
/// centroid c becomes c - eps e_j and a new centroid c + eps e_j (j = its
/// highest-variance feature), then all centroids are refined by Lloyd.
KMeansResult lbg_kmeans(const Matrix& points, std::size_t k, double epsilon);

struct HierarchyLevel {
  std::size_t level = 0;  // partition into level + 1 clusters
  std::vector<std::size_t> assignments;
  Matrix centroids;
  double sse = 0.0;
};

/// Nested sequence of partitions, levels 1..C-1, built by repeatedly
/// splitting the highest-SSE cluster and refining all centroids.
struct ClusterHierarchy {
  std::uint64_t seed = 0;
  double epsilon = 0.05;
  std::size_t n_clusters = 0;  // C
  std::vector<std::string> series_ids;
  Standardization standardization;
  std::vector<HierarchyLevel> levels;  // levels[l - 1] describes level l

  std::size_t n_series() const noexcept { return series_ids.size(); }
  const HierarchyLevel& level(std::size_t l) const;
  /// Cluster of series `index` at level `l`; level 0 is the single global cluster.
  std::size_t cluster_of(std::size_t l, std::size_t index) const;
  /// Membership mask of cluster `i` at level `l`.
  std::vector<bool> members(std::size_t l, std::size_t i) const;
};

/// `features` is N x 8 raw (unstandardized). Throws CardinalityError unless 2 <= C <= N.
ClusterHierarchy build_hierarchy(const Matrix& features, std::size_t n_clusters,
                                 std::uint64_t seed, double epsilon,
                                 std::vector<std::string> series_ids = {});

void save_hierarchy(const ClusterHierarchy& h, const std::filesystem::path& path);
ClusterHierarchy load_hierarchy(const std::filesystem::path& path);

}  // namespace glocal
