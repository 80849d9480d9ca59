#include <atomic>
#include <exception>
#include <optional>
#include <thread>

#include "glocal/errors.hpp"
#include "glocal/localization.hpp"

namespace glocal {

const ModelParams& LocalizedModelStore::model(std::size_t l, std::size_t i) const {
  if (l == 0) return global;
  auto it = localized.find({l, i});
  if (it == localized.end())
    throw ValueError("store has no model for level " + std::to_string(l) + ", cluster " +
                     std::to_string(i));
  return it->second;
}

std::string model_file_name(std::size_t l, std::size_t i) {
  return "model_l" + std::to_string(l) + "_c" + std::to_string(i);
}

namespace {

struct Job {
  std::size_t level;
  std::size_t cluster;
};

TrainConfig job_config(const TrainConfig& tc, const Job& job) {
  TrainConfig out = tc;
  out.seed = tc.seed + 1000003ull * job.level + job.cluster;
  return out;
}

ModelParams run_job(const ModelParams& global, const ClusterHierarchy& h, const DatasetSplit& data,
                    const TrainConfig& tc, const LocalizeOptions& options, const Job& job) {
  const std::filesystem::path file =
      options.checkpoint_dir.empty() ? std::filesystem::path{}
                                     : options.checkpoint_dir / model_file_name(job.level, job.cluster);
  if (options.resume && !file.empty() && std::filesystem::exists(file)) {
    ModelParams p = load_model(file);
    if (!(p.config == global.config))
      throw ConfigError("'" + file.string() + "' was trained with a different model config");
    return p;
  }

  const std::vector<bool> members = h.members(job.level, job.cluster);
  DatasetSplit local;
  local.plan = data.plan;
  local.train = restrict_to_series(data.train, members);
  local.validation = restrict_to_series(data.validation, members);
  const std::string tag =
      "level " + std::to_string(job.level) + ", cluster " + std::to_string(job.cluster);
  if (local.train.empty()) throw EmptyInputError(tag + ": no training rows");
  if (local.validation.empty()) throw EmptyInputError(tag + ": no validation rows");

  TrainResult r = fine_tune(global, local, job_config(tc, job));
  if (!file.empty()) save_model(r.params, file);
  if (options.on_trained) options.on_trained(job.level, job.cluster, r.report);
  return std::move(r.params);
}

}  // namespace

LocalizedModelStore localize_hierarchy(const ModelParams& global, const ClusterHierarchy& h,
                                       const DatasetSplit& data, const TrainConfig& tc,
                                       const LocalizeOptions& options) {
  for (std::size_t s : data.train.sample_series_index)
    if (s >= h.n_series()) throw UnknownSeriesError("training row of a series outside the hierarchy");
  for (std::size_t s : data.validation.sample_series_index)
    if (s >= h.n_series())
      throw UnknownSeriesError("validation row of a series outside the hierarchy");
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  std::vector<Job> jobs;
  for (std::size_t l = 1; l < h.n_clusters; ++l)
    for (std::size_t i = 0; i <= l; ++i) jobs.push_back({l, i});

  std::vector<std::optional<ModelParams>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        results[k] = run_job(global, h, data, tc, options, jobs[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(options.jobs, jobs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  // Report the first failure in job order so the error is independent of scheduling.
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  LocalizedModelStore store;
  store.global = global;
  store.hierarchy = h;
  for (std::size_t k = 0; k < jobs.size(); ++k)
    store.localized.emplace(std::pair{jobs[k].level, jobs[k].cluster}, std::move(*results[k]));
  return store;
}

Matrix localized_predict(const LocalizedModelStore& store, std::size_t l, const WindowedDataset& d) {
  if (l >= std::max<std::size_t>(1, store.n_levels()))
    throw ValueError("store has no level " + std::to_string(l));
  for (std::size_t s : d.sample_series_index)
    if (s >= store.hierarchy.n_series() && l != 0)
      throw UnknownSeriesError("series index " + std::to_string(s) + " is not in the hierarchy");
  if (l == 0) return predict(store.global, d);

  // Gate: every row goes to exactly one cluster model at this level.
  std::vector<std::vector<std::size_t>> rows(l + 1);
  for (std::size_t r = 0; r < d.rows(); ++r)
    rows[store.hierarchy.cluster_of(l, d.sample_series_index[r])].push_back(r);
  Matrix out(d.rows(), d.horizon);
  for (std::size_t i = 0; i <= l; ++i) {
    if (rows[i].empty()) continue;
    const Matrix part = predict(store.model(l, i), select_rows(d, rows[i]));
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      auto src = part.row(k);
      std::copy(src.begin(), src.end(), out.row(rows[i][k]).begin());
    }
  }
  return out;
}

void save_store(const LocalizedModelStore& store, const std::filesystem::path& workdir) {
  const auto models = workdir / "models";
  std::filesystem::create_directories(models);
  save_hierarchy(store.hierarchy, workdir / "hierarchy.json");
  save_model(store.global, models / model_file_name(0, 0));
  for (const auto& [key, params] : store.localized)
    save_model(params, models / model_file_name(key.first, key.second));
}

LocalizedModelStore load_store(const std::filesystem::path& workdir) {
  LocalizedModelStore store;
  store.hierarchy = load_hierarchy(workdir / "hierarchy.json");
  const auto models = workdir / "models";
  store.global = load_model(models / model_file_name(0, 0));
  for (std::size_t l = 1; l < store.hierarchy.n_clusters; ++l)
    for (std::size_t i = 0; i <= l; ++i) {
      ModelParams p = load_model(models / model_file_name(l, i));
      if (!(p.config == store.global.config))
        throw ConfigError("localized model " + model_file_name(l, i) +
                          " does not match the global model config");
      store.localized.emplace(std::pair{l, i}, std::move(p));
    }
  return store;
}

}  // namespace glocal
