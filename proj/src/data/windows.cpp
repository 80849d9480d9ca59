#include <algorithm>
#include <string>
#include <unordered_map>

#include "glocal/data.hpp"
#include "glocal/errors.hpp"

namespace glocal {
namespace {

WindowedDataset empty_dataset(std::size_t lags, std::size_t horizon) {
  WindowedDataset d;
  d.lags = lags;
  d.horizon = horizon;
  d.x_lags.resize(0, lags);
  d.x_exog.resize(0, kCalendarDim);
  d.y.resize(0, horizon);
  return d;
}

void append_window(WindowedDataset& d, const Series& s, std::size_t first_target,
                   std::size_t series_index) {
  const auto& v = s.values;
  d.x_lags.push_row(std::span<const double>(v.data() + first_target - d.lags, d.lags));
  d.y.push_row(std::span<const double>(v.data() + first_target, d.horizon));
  const CalendarVector cal = encode_calendar(s.time_at(first_target));
  d.x_exog.push_row(cal);
  d.sample_series_index.push_back(series_index);
  d.target_start.push_back(first_target);
}

}  // namespace

WindowedDataset make_windows_in_range(const Series& s, std::size_t lags, std::size_t horizon,
                                      std::size_t stride, std::size_t first_target,
                                      std::size_t target_end, std::size_t series_index,
                                      const RowFilter& keep) {
  if (stride < 1) throw ConfigError("stride must be at least 1");
  if (lags < 1 || horizon < 1) throw ConfigError("lags and horizon must be at least 1");
  if (first_target < lags || target_end > s.size() || target_end < first_target + horizon)
    throw InsufficientDataError("series '" + s.id + "' (length " + std::to_string(s.size()) +
                                ") cannot hold a window with K=" + std::to_string(lags) +
                                ", H=" + std::to_string(horizon) + " in the requested range");

  WindowedDataset d = empty_dataset(lags, horizon);
  std::size_t rank = 0;
  for (std::size_t t = first_target; t + horizon <= target_end; t += stride, ++rank)
    if (!keep || keep(series_index, rank)) append_window(d, s, t, series_index);
  return d;
}

WindowedDataset make_windows(const Series& s, std::size_t lags, std::size_t horizon,
                             std::size_t stride, std::size_t series_index) {
  if (s.size() < lags + horizon)
    throw InsufficientDataError("series '" + s.id + "' is shorter than K + H");
  return make_windows_in_range(s, lags, horizon, stride, lags, s.size(), series_index);
}

WindowedDataset stack(std::span<const WindowedDataset> sets) {
  if (sets.empty()) throw EmptyInputError("nothing to stack");
  WindowedDataset out = empty_dataset(sets.front().lags, sets.front().horizon);
  std::size_t total = 0;
  for (const WindowedDataset& d : sets) {
    if (d.lags != out.lags || d.horizon != out.horizon)
      throw ShapeError("cannot stack datasets with different K or H");
    total += d.rows();
  }
  out.sample_series_index.reserve(total);
  out.target_start.reserve(total);
  for (const WindowedDataset& d : sets) {
    out.x_lags.append_rows(d.x_lags);
    out.x_exog.append_rows(d.x_exog);
    out.y.append_rows(d.y);
    out.sample_series_index.insert(out.sample_series_index.end(), d.sample_series_index.begin(),
                                   d.sample_series_index.end());
    out.target_start.insert(out.target_start.end(), d.target_start.begin(), d.target_start.end());
  }
  return out;
}

SplitPlan plan_split(std::size_t length, const SplitOptions& o) {
  const std::size_t train = o.train_weeks * kStepsPerWeek;
  const std::size_t val = o.validation_weeks * kStepsPerWeek;
  const std::size_t test = o.test_weeks * kStepsPerWeek;
  const std::size_t needed = o.lags + train + val + test;
  if (length < needed)
    throw InsufficientDataError("split needs " + std::to_string(needed) + " steps (K=" +
                                std::to_string(o.lags) + " history plus " +
                                std::to_string(o.train_weeks + o.validation_weeks + o.test_weeks) +
                                " weeks of targets) but series have " + std::to_string(length));
  if (o.horizon > std::min({train, val, test}))
    throw InsufficientDataError("horizon longer than a split segment");
  SplitPlan plan;
  plan.end = length;
  plan.test_begin = length - test;
  plan.validation_begin = plan.test_begin - val;
  plan.train_begin = plan.validation_begin - train;
  return plan;
}

DatasetSplit split_by_time(const SeriesSet& set, const SplitOptions& o) {
  if (set.size() == 0) throw EmptyInputError("series set is empty");
  if (o.train_subsample < 1) throw ConfigError("subsample factor must be at least 1");
  DatasetSplit split;
  split.plan = plan_split(set.length(), o);
  const SplitPlan& p = split.plan;
  const std::size_t eval_stride = o.eval_stride == 0 ? o.horizon : o.eval_stride;
  const std::size_t factor = o.train_subsample;
  RowFilter keep;
  if (factor > 1)
    keep = [factor](std::size_t series, std::size_t rank) { return rank % factor == series % factor; };

  std::vector<WindowedDataset> train, val, test;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Series& s = set.series[i];
    train.push_back(make_windows_in_range(s, o.lags, o.horizon, o.train_stride, p.train_begin,
                                          p.validation_begin, i, keep));
    val.push_back(make_windows_in_range(s, o.lags, o.horizon, eval_stride, p.validation_begin,
                                        p.test_begin, i));
    test.push_back(
        make_windows_in_range(s, o.lags, o.horizon, eval_stride, p.test_begin, p.end, i));
  }
  split.train = stack(train);
  split.validation = stack(val);
  split.test = stack(test);
  return split;
}

DatasetSplit split_by_time(const SeriesSet& set, std::size_t train_weeks,
                           std::size_t validation_weeks, std::size_t test_weeks, std::size_t lags,
                           std::size_t horizon) {
  SplitOptions o;
  o.train_weeks = train_weeks;
  o.validation_weeks = validation_weeks;
  o.test_weeks = test_weeks;
  o.lags = lags;
  o.horizon = horizon;
  return split_by_time(set, o);
}

WindowedDataset select_rows(const WindowedDataset& d, std::span<const std::size_t> rows) {
  WindowedDataset out;
  out.lags = d.lags;
  out.horizon = d.horizon;
  out.x_lags = gather_rows(d.x_lags, rows);
  out.x_exog = gather_rows(d.x_exog, rows);
  out.y = gather_rows(d.y, rows);
  out.sample_series_index.reserve(rows.size());
  out.target_start.reserve(rows.size());
  for (std::size_t r : rows) {
    out.sample_series_index.push_back(d.sample_series_index[r]);
    out.target_start.push_back(d.target_start[r]);
  }
  return out;
}

WindowedDataset subsample(const WindowedDataset& d, std::size_t factor, const OffsetRule& offset) {
  if (factor < 1) throw ConfigError("subsample factor must be at least 1");
  std::unordered_map<std::size_t, std::size_t> rank;
  std::vector<std::size_t> keep;
  keep.reserve(d.rows() / factor + 1);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const std::size_t series = d.sample_series_index[r];
    const std::size_t target = offset ? offset(series) % factor : series % factor;
    if (rank[series]++ % factor == target) keep.push_back(r);
  }
  return select_rows(d, keep);
}

WindowedDataset restrict_to_series(const WindowedDataset& d, const std::vector<bool>& members) {
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const std::size_t series = d.sample_series_index[r];
    if (series < members.size() && members[series]) keep.push_back(r);
  }
  return select_rows(d, keep);
}

}  // namespace glocal
