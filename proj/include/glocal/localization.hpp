#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>

#include "glocal/clustering.hpp"
#include "glocal/model.hpp"
#include "glocal/training.hpp"

namespace glocal {

/// Global model (level 0) plus one fine-tuned model per cluster of every
/// hierarchy level 1..C-1.
struct LocalizedModelStore {
  ModelParams global;
  std::map<std::pair<std::size_t, std::size_t>, ModelParams> localized;  // (level, cluster)
  ClusterHierarchy hierarchy;

  /// Levels 0..C-1 are available.
  std::size_t n_levels() const noexcept { return hierarchy.n_clusters; }
  /// Model of cluster `i` at level `l`; (0, 0) is the global model.
  const ModelParams& model(std::size_t l, std::size_t i) const;
};

/// File name of the container for cluster `i` at level `l`.
std::string model_file_name(std::size_t l, std::size_t i);

struct LocalizeOptions {
  std::size_t jobs = 1;
  /// When set, every finished model is written here as it completes.
  std::filesystem::path checkpoint_dir;
  /// Reuse containers already present in `checkpoint_dir` instead of retraining.
  bool resume = false;
  /// Called once per trained (not resumed) job, from the thread that ran it.
  std::function<void(std::size_t l, std::size_t i, const TrainReport&)> on_trained;
};

/// Fine-tunes a fresh copy of `global` on the training and validation rows of
/// every cluster (l, i). The result does not depend on `jobs` or on job order.
/// Throws EmptyInputError naming (l, i) when a cluster has no training rows.
LocalizedModelStore localize_hierarchy(const ModelParams& global, const ClusterHierarchy& h,
                                       const DatasetSplit& data, const TrainConfig& tc,
                                       const LocalizeOptions& options = {});

/// Each row is forecast by the model of the cluster holding its series at
/// level `l`. Throws UnknownSeriesError for a series outside the hierarchy.
Matrix localized_predict(const LocalizedModelStore& store, std::size_t l, const WindowedDataset& d);

/// `<workdir>/hierarchy.json` plus `<workdir>/models/model_l{l}_c{i}`.
void save_store(const LocalizedModelStore& store, const std::filesystem::path& workdir);
LocalizedModelStore load_store(const std::filesystem::path& workdir);

}  // namespace glocal
