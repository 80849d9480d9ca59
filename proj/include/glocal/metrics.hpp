#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "glocal/data.hpp"
#include "glocal/matrix.hpp"

namespace glocal {

/// Seasonal period of the naive benchmark: one week of half-hours.
inline constexpr std::size_t kNaivePeriod = kStepsPerWeek;

/// y_hat[origin + h] = y[origin + h - S] for h in [0, H). Throws
/// InsufficientDataError when origin < S or the source runs past the series.
std::vector<double> naive_seasonal(const Series& s, std::size_t origin, std::size_t horizon,
                                   std::size_t period = kNaivePeriod);

double mean_absolute_error(std::span<const double> actual, std::span<const double> forecast);

/// MAE(actual, forecast) / MAE(actual, naive). Throws DegenerateWindow when the
/// naive error is 0.
double mase(std::span<const double> actual, std::span<const double> forecast,
            std::span<const double> naive);
double mase(const Series& s, std::size_t origin, std::span<const double> forecast,
            std::size_t period = kNaivePeriod);

/// Mean of |a - f| / |a| in percent. Throws ZeroActualError on any zero actual.
double mape(std::span<const double> actual, std::span<const double> forecast);

/// MAE divided by the mean actual of the window. Throws NormalizationError
/// when that mean is not positive.
double nmae(std::span<const double> actual, std::span<const double> forecast);

/// Mean MASE over the windows (rows) of one series; degenerate windows are
/// skipped and counted. `value` is NaN when every window is degenerate.
struct SeriesMase {
  double value = 0.0;
  std::size_t windows = 0;  // scored windows
  std::size_t degenerate = 0;
};
SeriesMase series_mase(const Matrix& actual, const Matrix& forecast, const Matrix& naive);

/// Naive forecasts aligned with the rows of `d`, taken from `set`.
Matrix naive_forecasts(const SeriesSet& set, const WindowedDataset& d,
                       std::size_t period = kNaivePeriod);

struct SeriesMetrics {
  std::string id;
  AggregateType aggregate_type = AggregateType::Single;
  double mase = 0.0;  // NaN when every window is degenerate
  double mape = 0.0;  // NaN when every window holds a zero actual
  double nmae = 0.0;  // NaN when no window has a positive mean
  std::vector<double> horizon_mase;  // per step: step MAE / full-window naive MAE
  std::size_t windows = 0;
  std::size_t degenerate_windows = 0;
  std::size_t zero_actual_windows = 0;
  std::size_t nonpositive_mean_windows = 0;
};

struct GroupMetrics {
  double mase = 0.0;
  double mape = 0.0;
  double nmae = 0.0;
  std::size_t series = 0;
};

struct EvalResult {
  std::vector<SeriesMetrics> series;          // series that have at least one window
  std::array<GroupMetrics, 4> by_type;        // indexed like kAggregateTypes
  GroupMetrics overall;
  std::vector<double> horizon_mase;           // mean over series, length H
  std::size_t degenerate_windows = 0;
  std::size_t zero_actual_windows = 0;
};

/// Scores `forecasts` (rows aligned with `d`) per series; group and overall
/// figures are unweighted means over series with a defined value.
EvalResult evaluate(const Matrix& forecasts, const WindowedDataset& d, const SeriesSet& set,
                    std::size_t period = kNaivePeriod);

/// `id,agg_type,mase,mape,nmae`; undefined values are left empty.
void write_series_csv(const EvalResult& r, const std::filesystem::path& path);
/// `step,mase_full_window_naive`.
void write_horizon_csv(const EvalResult& r, const std::filesystem::path& path);

struct NamedResult {
  std::string name;
  const EvalResult* result;
};
/// `strategy,group,mase,mape,nmae,series` with groups Single, sTS, mTS, lTS, overall.
void write_summary_csv(std::span<const NamedResult> results, const std::filesystem::path& path);

/// Per-series (MASE_a - MASE_b) * 100, sorted ascending, with the empirical
/// CDF position of each row: `id,agg_type,mase_a,mase_b,improvement,ecdf`.
struct ImprovementRow {
  std::string id;
  AggregateType aggregate_type = AggregateType::Single;
  double mase_a = 0.0;
  double mase_b = 0.0;
  double improvement = 0.0;
  double ecdf = 0.0;
};
std::vector<ImprovementRow> improvement(const EvalResult& a, const EvalResult& b);
void write_improvement_csv(std::span<const ImprovementRow> rows, const std::filesystem::path& path);

/// Shortest round-trip decimal, or an empty string for NaN.
std::string format_number(double v);

}  // namespace glocal
