#include <fstream>
#include <limits>

#include <json.hpp>

#include "glocal/clustering.hpp"
#include "glocal/errors.hpp"

namespace glocal {
namespace {

using nlohmann::json;

constexpr const char* kHierarchyFormat = "glocal-hierarchy";
constexpr int kHierarchyVersion = 1;

std::size_t largest_sse_cluster(const Matrix& z, std::span<const std::size_t> assign,
                                const Matrix& centroids) {
  std::vector<double> sse(centroids.rows(), 0.0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto p = z.row(i);
    auto c = centroids.row(assign[i]);
    for (std::size_t j = 0; j < p.size(); ++j) sse[assign[i]] += (p[j] - c[j]) * (p[j] - c[j]);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < sse.size(); ++c)
    if (sse[c] > sse[best]) best = c;
  return best;
}

std::size_t widest_feature(const Matrix& z, std::span<const std::size_t> assign,
                           std::size_t cluster, std::span<const double> centroid) {
  std::vector<double> spread(z.cols(), 0.0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (assign[i] != cluster) continue;
    for (std::size_t j = 0; j < z.cols(); ++j)
      spread[j] += (z(i, j) - centroid[j]) * (z(i, j) - centroid[j]);
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < spread.size(); ++j)
    if (spread[j] > spread[best]) best = j;
  return best;
}

// Fallback seed: split the chosen cluster by the hyperplane between its two
// perturbed centroids, keep every other assignment, and restart Lloyd from
// the resulting means. The first assignment step of that restart cannot
// raise the SSE of the parent partition, so neither can the refinement.
KMeansResult hyperplane_restart(const Matrix& z, std::vector<std::size_t> assign,
                                const Matrix& parent_centroids, std::size_t cluster,
                                std::size_t feature) {
  const std::size_t k = parent_centroids.rows() + 1;
  const double cut = parent_centroids(cluster, feature);
  std::size_t moved = 0;
  for (std::size_t i = 0; i < z.rows(); ++i)
    if (assign[i] == cluster && z(i, feature) > cut) {
      assign[i] = k - 1;
      ++moved;
    }
  if (moved == 0) {
    // All members sit on one side: hand the farthest member to the new cluster.
    std::size_t victim = z.rows();
    double far = -1.0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
      if (assign[i] != cluster) continue;
      double d = 0.0;
      for (std::size_t j = 0; j < z.cols(); ++j)
        d += (z(i, j) - parent_centroids(cluster, j)) * (z(i, j) - parent_centroids(cluster, j));
      if (d > far) {
        far = d;
        victim = i;
      }
    }
    if (victim < z.rows()) assign[victim] = k - 1;
  }
  Matrix means(k, z.cols());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    ++counts[assign[i]];
    for (std::size_t j = 0; j < z.cols(); ++j) means(assign[i], j) += z(i, j);
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < z.cols(); ++j)
      means(c, j) = counts[c] ? means(c, j) / static_cast<double>(counts[c])
                              : parent_centroids(cluster, j);
  return kmeans_refine(z, means);
}

KMeansResult single_cluster(const Matrix& z) {
  KMeansResult r;
  r.assignments.assign(z.rows(), 0);
  r.centroids.resize(1, z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) r.centroids(0, j) += z(i, j);
  for (std::size_t j = 0; j < z.cols(); ++j) r.centroids(0, j) /= static_cast<double>(z.rows());
  r.sse = sum_squared_error(z, r.assignments, r.centroids);
  return r;
}

KMeansResult split_and_refine(const Matrix& z, const KMeansResult& parent, double epsilon) {
  const Matrix& centroids = parent.centroids;
  const std::size_t k = centroids.rows();
  const std::size_t target = largest_sse_cluster(z, parent.assignments, centroids);
  const std::size_t feature = widest_feature(z, parent.assignments, target, centroids.row(target));

  Matrix seeds(k + 1, z.cols());
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < z.cols(); ++j) seeds(c, j) = centroids(c, j);
  for (std::size_t j = 0; j < z.cols(); ++j) seeds(k, j) = centroids(target, j);
  seeds(target, feature) -= epsilon;
  seeds(k, feature) += epsilon;

  KMeansResult r = kmeans_refine(z, seeds);
  if (r.sse > parent.sse) {
    KMeansResult alt = hyperplane_restart(z, parent.assignments, centroids, target, feature);
    if (alt.sse < r.sse) r = std::move(alt);
  }
  return r;
}

}  // namespace

KMeansResult lbg_kmeans(const Matrix& points, std::size_t k, double epsilon) {
  if (k == 0 || k > points.rows())
    throw CardinalityError("cluster count must lie in [1, " + std::to_string(points.rows()) + "]");
  if (!(epsilon > 0.0)) throw ConfigError("split perturbation must be positive");
  KMeansResult r = single_cluster(points);
  while (r.centroids.rows() < k) r = split_and_refine(points, r, epsilon);
  return r;
}

const HierarchyLevel& ClusterHierarchy::level(std::size_t l) const {
  if (l == 0 || l > levels.size())
    throw ValueError("hierarchy has no level " + std::to_string(l));
  return levels[l - 1];
}

std::size_t ClusterHierarchy::cluster_of(std::size_t l, std::size_t index) const {
  if (index >= n_series()) throw ValueError("series index out of range");
  if (l == 0) return 0;
  return level(l).assignments[index];
}

std::vector<bool> ClusterHierarchy::members(std::size_t l, std::size_t i) const {
  std::vector<bool> mask(n_series(), false);
  for (std::size_t s = 0; s < n_series(); ++s) mask[s] = cluster_of(l, s) == i;
  return mask;
}

ClusterHierarchy build_hierarchy(const Matrix& features, std::size_t n_clusters,
                                 std::uint64_t seed, double epsilon,
                                 std::vector<std::string> series_ids) {
  const std::size_t n = features.rows();
  if (n_clusters < 2 || n_clusters > n)
    throw CardinalityError("cluster count must lie in [2, " + std::to_string(n) + "], got " +
                           std::to_string(n_clusters));
  if (!(epsilon > 0.0)) throw ConfigError("split perturbation must be positive");
  if (series_ids.empty())
    for (std::size_t i = 0; i < n; ++i) series_ids.push_back(std::to_string(i));
  if (series_ids.size() != n) throw ShapeError("one id per feature row expected");

  ClusterHierarchy h;
  h.seed = seed;
  h.epsilon = epsilon;
  h.n_clusters = n_clusters;
  h.series_ids = std::move(series_ids);
  const Matrix z = standardize(features, &h.standardization);

  KMeansResult current = single_cluster(z);
  for (std::size_t l = 1; l < n_clusters; ++l) {
    current = split_and_refine(z, current, epsilon);
    h.levels.push_back({l, current.assignments, current.centroids, current.sse});
  }
  return h;
}

void save_hierarchy(const ClusterHierarchy& h, const std::filesystem::path& path) {
  json j;
  j["format"] = kHierarchyFormat;
  j["version"] = kHierarchyVersion;
  j["seed"] = h.seed;
  j["epsilon"] = h.epsilon;
  j["n_clusters"] = h.n_clusters;
  j["series_ids"] = h.series_ids;
  j["feature_names"] = json::array();
  for (auto name : kFeatureNames) j["feature_names"].push_back(std::string(name));
  j["standardization"] = {{"mean", h.standardization.mean},
                          {"stddev", h.standardization.stddev}};
  j["levels"] = json::array();
  for (const HierarchyLevel& lv : h.levels) {
    json centroids = json::array();
    for (std::size_t c = 0; c < lv.centroids.rows(); ++c) {
      auto row = lv.centroids.row(c);
      centroids.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["levels"].push_back({{"level", lv.level},
                           {"assignments", lv.assignments},
                           {"centroids", std::move(centroids)},
                           {"sse", lv.sse}});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IOError("failed writing '" + path.string() + "'");
}

ClusterHierarchy load_hierarchy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open '" + path.string() + "'");
  ClusterHierarchy h;
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != kHierarchyFormat ||
        j.at("version").get<int>() != kHierarchyVersion)
      throw ValueError("'" + path.string() + "' is not a supported hierarchy file");
    h.seed = j.at("seed").get<std::uint64_t>();
    h.epsilon = j.at("epsilon").get<double>();
    h.n_clusters = j.at("n_clusters").get<std::size_t>();
    h.series_ids = j.at("series_ids").get<std::vector<std::string>>();
    h.standardization.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    h.standardization.stddev = j.at("standardization").at("stddev").get<std::vector<double>>();
    for (const json& lv : j.at("levels")) {
      HierarchyLevel level;
      level.level = lv.at("level").get<std::size_t>();
      level.assignments = lv.at("assignments").get<std::vector<std::size_t>>();
      level.sse = lv.at("sse").get<double>();
      for (const json& row : lv.at("centroids"))
        level.centroids.push_row(row.get<std::vector<double>>());
      if (level.assignments.size() != h.series_ids.size() ||
          level.centroids.rows() != level.level + 1)
        throw ShapeError("hierarchy level " + std::to_string(level.level) + " is malformed");
      h.levels.push_back(std::move(level));
    }
  } catch (const json::exception& e) {
    throw ValueError("malformed hierarchy '" + path.string() + "': " + e.what());
  }
  if (h.levels.size() + 1 != h.n_clusters) throw ShapeError("hierarchy level count mismatch");
  return h;
}

}  // namespace glocal
