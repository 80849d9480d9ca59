#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "glocal/localization.hpp"
#include "glocal/metrics.hpp"

namespace glocal {

/// Candidate forecasts of one series: one matrix (windows x H) per level
/// 0..C-1, plus the actuals and naive forecasts that score them.
struct SeriesCandidates {
  std::vector<Matrix> forecasts;
  Matrix actual;
  Matrix naive;
};

/// Per-level MASE of every candidate; throws NumericError if any is undefined.
std::vector<double> candidate_errors(const SeriesCandidates& c);

/// Levels ordered by ascending error; ties go to the lower level.
std::vector<std::size_t> rank_candidates(std::span<const double> errors);

struct SeriesSelection {
  std::vector<std::size_t> levels;  // prefix of the ranking, in ranking order
  double validation_error = 0.0;
  std::vector<double> candidate_errors;
};

/// Unweighted mean of the listed per-level forecasts, summed in ascending
/// level order so the result does not depend on the order of `levels`.
Matrix average_levels(std::span<const Matrix> per_level, std::span<const std::size_t> levels);

/// Greedy forward selection: start from the best-ranked level and keep adding
/// the next one while the averaged forecast strictly lowers validation MASE.
SeriesSelection build_ensemble(const SeriesCandidates& c);

struct EnsembleSelection {
  std::vector<std::string> series_ids;
  std::vector<SeriesSelection> selections;  // aligned with series_ids
  std::size_t all_level = 0;                // level chosen by the ALL strategy

  const SeriesSelection& of(std::string_view id) const;
};

/// localized_predict for every level 0..C-1.
std::vector<Matrix> level_forecasts(const LocalizedModelStore& store, const WindowedDataset& d);

/// Splits per-level forecasts into per-series candidates (rows keep dataset order).
std::vector<SeriesCandidates> split_candidates(std::span<const Matrix> per_level,
                                               const WindowedDataset& d, const SeriesSet& set);

/// Row r is the mean over `per_series_levels[series(r)]` of the per-level forecasts.
Matrix combine_levels(std::span<const Matrix> per_level, const WindowedDataset& d,
                      std::span<const std::vector<std::size_t>> per_series_levels);

/// Level minimizing mean validation error over series (ties to the lower level).
std::size_t choose_all_level(std::span<const std::vector<double>> per_series_errors);

/// Builds one selection per series in `set` from validation candidates.
EnsembleSelection select_ensembles(std::span<const SeriesCandidates> validation,
                                   const SeriesSet& set);

enum class Strategy { All, Best, Ens };
std::string_view to_string(Strategy s);

/// Per-series level lists implied by a strategy (ALL: one shared level,
/// BEST: each series' top-ranked level, ENS: the greedy selection).
std::vector<std::vector<std::size_t>> strategy_levels(const EnsembleSelection& sel, Strategy s);

/// Forecasts `d` under `s`. Throws UnknownSeriesError when a row's series has no selection.
Matrix strategy_forecast(const EnsembleSelection& sel, Strategy s, const LocalizedModelStore& store,
                         const WindowedDataset& d, const SeriesSet& set);
Matrix ensemble_forecast(const EnsembleSelection& sel, const LocalizedModelStore& store,
                         const WindowedDataset& d, const SeriesSet& set);

void save_selections(const EnsembleSelection& sel, const std::filesystem::path& path);
EnsembleSelection load_selections(const std::filesystem::path& path);

}  // namespace glocal
