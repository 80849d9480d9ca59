#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "glocal/clustering.hpp"
#include "glocal/data.hpp"
#include "glocal/ensemble.hpp"
#include "glocal/localization.hpp"
#include "glocal/metrics.hpp"
#include "glocal/model.hpp"
#include "glocal/training.hpp"

namespace glocal {

/// Everything a pipeline command needs. Workdir layout:
///   data/series.csv, data/manifest.json   (generate)
///   models/model_l0_c0                    (train-global)
///   models/model_l{l}_c{i}, hierarchy.json (localize)
///   selections.json                       (ensemble)
///   reports/*.csv                         (every step)
struct PipelineConfig {
  std::filesystem::path workdir = "work";
  std::filesystem::path data;  // empty: <workdir>/data/series.csv

  std::uint64_t data_seed = 1;
  std::size_t per_type = 10;
  std::size_t weeks = 77;  // 52/12/12 weeks of targets plus one week of lags

  SplitOptions split;
  ModelConfig model;  // lags and horizon are taken from `split`
  TrainConfig global_train = TrainConfig::global_defaults();
  TrainConfig fine_tune = TrainConfig::fine_tune_defaults();

  std::size_t n_clusters = 20;
  std::uint64_t cluster_seed = 1;
  double epsilon = 0.05;

  std::size_t jobs = 1;
  bool resume = false;

  std::function<void(std::string_view)> log;

  std::filesystem::path data_path() const;
  std::filesystem::path models_dir() const { return workdir / "models"; }
  std::filesystem::path reports_dir() const { return workdir / "reports"; }
  ModelConfig effective_model() const;
  /// Throws ConfigError on values no module accepts.
  void validate() const;
};

/// Loaded data, its per-series scale divisors and the windowed split of the
/// rescaled series.
struct PreparedData {
  SeriesSet raw;
  std::vector<double> scales;
  SeriesSet scaled;
  DatasetSplit split;
};
PreparedData prepare_data(const PipelineConfig& cfg);

void cmd_generate(const PipelineConfig& cfg);
TrainReport cmd_train_global(const PipelineConfig& cfg);
LocalizedModelStore cmd_localize(const PipelineConfig& cfg);
EnsembleSelection cmd_ensemble(const PipelineConfig& cfg);

struct EvaluationSummary {
  EvalResult all;
  EvalResult best;
  EvalResult ens;
  EvalResult global;
  EvalResult naive;
};
EvaluationSummary cmd_evaluate(const PipelineConfig& cfg);

enum class ForecastSource { Global, All, Best, Ens };
ForecastSource parse_forecast_source(std::string_view text);

/// Forecasts the H steps after the end of every series, in the original
/// units, as `timestamp,id,forecast` rows.
void cmd_forecast(const PipelineConfig& cfg, ForecastSource source,
                  const std::filesystem::path& output);

}  // namespace glocal
