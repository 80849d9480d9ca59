#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glocal/matrix.hpp"

namespace glocal {

using Timestamp = std::chrono::sys_seconds;

inline constexpr std::chrono::seconds kStep{1800};
inline constexpr std::size_t kStepsPerDay = 48;
inline constexpr std::size_t kStepsPerWeek = 336;

// Calendar one-hot layout: [month 0-11 | day of week 0-6, Monday = 0 | half-hour slot 0-47].
inline constexpr std::size_t kMonthOffset = 0;
inline constexpr std::size_t kWeekdayOffset = 12;
inline constexpr std::size_t kSlotOffset = 19;
inline constexpr std::size_t kCalendarDim = 67;

using CalendarVector = std::array<double, kCalendarDim>;

enum class AggregateType { Single, STS, MTS, LTS };

inline constexpr std::array<AggregateType, 4> kAggregateTypes = {
    AggregateType::Single, AggregateType::STS, AggregateType::MTS, AggregateType::LTS};

std::string_view to_string(AggregateType type);
/// Accepts `Single`, `sTS`, `mTS`, `lTS` (case-insensitive); throws ValueError otherwise.
AggregateType parse_aggregate_type(std::string_view text);

/// ISO-8601 UTC, e.g. `2010-01-04T00:30:00Z`.
std::string format_timestamp(Timestamp t);
/// Accepts `YYYY-MM-DDTHH:MM[:SS][Z]` with `T` or a space separator.
Timestamp parse_timestamp(std::string_view text);

/// One univariate load series on the uniform half-hour grid.
struct Series {
  std::string id;
  AggregateType aggregate_type = AggregateType::Single;
  Timestamp start{};
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  Timestamp time_at(std::size_t i) const {
    return start + kStep * static_cast<std::int64_t>(i);
  }
};

/// Aligned pool of series: shared start, step and length, unique ids.
struct SeriesSet {
  std::vector<Series> series;

  std::size_t size() const noexcept { return series.size(); }
  std::size_t length() const noexcept { return series.empty() ? 0 : series.front().size(); }
  std::optional<std::size_t> find(std::string_view id) const;

  /// Throws EmptyInputError, ShapeError, DuplicateError or ValueError.
  void validate() const;
};

/// Reads `timestamp,id,value[,agg]` rows (header required, column order free).
SeriesSet load_csv(const std::filesystem::path& path);

/// Writes `timestamp,id,value,agg` rows, series-major, 17 significant digits.
void write_csv(const SeriesSet& set, const std::filesystem::path& path);

/// Synthetic surrogate for household and transformer-station load.
SeriesSet generate_synthetic(std::uint64_t seed, std::size_t n_per_type, std::size_t n_weeks);

struct SyntheticDetail {
  SeriesSet set;
  /// For each series in `set`, the hidden consumer series that were summed to
  /// form it (a single series has itself as its only constituent).
  std::vector<std::vector<std::vector<double>>> constituents;
};

SyntheticDetail generate_synthetic_detailed(std::uint64_t seed, std::size_t n_per_type,
                                            std::size_t n_weeks, bool keep_constituents);

/// Throws GridError when `t` is not on the half-hour grid.
CalendarVector encode_calendar(Timestamp t);

/// Rolling-window samples stacked row-wise. Row j of every matrix belongs to
/// series `sample_series_index[j]`, whose first target value sits at position
/// `target_start[j]` of that series.
struct WindowedDataset {
  std::size_t lags = 0;     // K
  std::size_t horizon = 0;  // H
  Matrix x_lags;            // m x K
  Matrix x_exog;            // m x 67
  Matrix y;                 // m x H
  std::vector<std::size_t> sample_series_index;
  std::vector<std::size_t> target_start;

  std::size_t rows() const noexcept { return sample_series_index.size(); }
  bool empty() const noexcept { return sample_series_index.empty(); }
};

/// Windows whose first target step runs from K in steps of `stride`.
WindowedDataset make_windows(const Series& s, std::size_t lags, std::size_t horizon,
                             std::size_t stride, std::size_t series_index = 0);

/// Predicate on (series index, within-series rank) deciding whether a window is kept.
using RowFilter = std::function<bool(std::size_t series_index, std::size_t rank)>;

/// Windows whose targets lie entirely in [first_target, target_end), first
/// target advancing by `stride`. Lags may reach before `first_target`.
WindowedDataset make_windows_in_range(const Series& s, std::size_t lags, std::size_t horizon,
                                      std::size_t stride, std::size_t first_target,
                                      std::size_t target_end, std::size_t series_index,
                                      const RowFilter& keep = {});

WindowedDataset stack(std::span<const WindowedDataset> sets);

/// Target-position boundaries shared by every series in a split.
struct SplitPlan {
  std::size_t train_begin = 0;
  std::size_t validation_begin = 0;
  std::size_t test_begin = 0;
  std::size_t end = 0;
};

struct DatasetSplit {
  WindowedDataset train;
  WindowedDataset validation;
  WindowedDataset test;
  SplitPlan plan;
};

struct SplitOptions {
  std::size_t train_weeks = 52;
  std::size_t validation_weeks = 12;
  std::size_t test_weeks = 12;
  std::size_t lags = 336;
  std::size_t horizon = 48;
  std::size_t train_stride = 1;
  /// Stride of validation/test windows; 0 means one window per horizon (non-overlapping).
  std::size_t eval_stride = 0;
  /// Interleaved subsampling applied while building training windows (1 = keep all).
  std::size_t train_subsample = 1;
};

/// The three segments are the final weeks of the series, in order; targets
/// are time-disjoint across segments while lag windows may look back into the
/// preceding segment. Throws InsufficientDataError when the series cannot hold
/// all three segments plus K steps of history.
SplitPlan plan_split(std::size_t length, const SplitOptions& options);
DatasetSplit split_by_time(const SeriesSet& set, const SplitOptions& options);
DatasetSplit split_by_time(const SeriesSet& set, std::size_t train_weeks,
                           std::size_t validation_weeks, std::size_t test_weeks, std::size_t lags,
                           std::size_t horizon);

/// Maps a series index to the residue class kept by `subsample`.
using OffsetRule = std::function<std::size_t(std::size_t series_index)>;

/// Keeps rows whose within-series rank r satisfies r mod factor == offset(series index);
/// the default offset is `series_index mod factor`.
WindowedDataset subsample(const WindowedDataset& d, std::size_t factor,
                          const OffsetRule& offset = {});

/// Rows whose series index is flagged in `members`.
WindowedDataset restrict_to_series(const WindowedDataset& d, const std::vector<bool>& members);

/// Rows selected by index, in order.
WindowedDataset select_rows(const WindowedDataset& d, std::span<const std::size_t> rows);

/// Per-series divisor: mean of the training-segment values (1 when that mean is not positive).
std::vector<double> training_scales(const SeriesSet& set, const SplitPlan& plan);
SeriesSet rescaled(const SeriesSet& set, std::span<const double> divisors);

}  // namespace glocal
