#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "glocal/errors.hpp"
#include "glocal/metrics.hpp"

namespace glocal {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_same_size(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("actual and forecast lengths differ");
  if (a.empty()) throw EmptyInputError("empty evaluation window");
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write '" + path.string() + "'");
  return out;
}

// Unweighted mean over the defined (non-NaN) entries.
std::pair<double, std::size_t> defined_mean(const std::vector<double>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values)
    if (!std::isnan(v)) {
      sum += v;
      ++n;
    }
  return {n > 0 ? sum / static_cast<double>(n) : kNaN, n};
}

GroupMetrics group_of(const std::vector<const SeriesMetrics*>& members) {
  std::vector<double> mase, mape, nmae;
  for (const SeriesMetrics* m : members) {
    mase.push_back(m->mase);
    mape.push_back(m->mape);
    nmae.push_back(m->nmae);
  }
  GroupMetrics g;
  std::tie(g.mase, g.series) = defined_mean(mase);
  g.mape = defined_mean(mape).first;
  g.nmae = defined_mean(nmae).first;
  return g;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::vector<double> naive_seasonal(const Series& s, std::size_t origin, std::size_t horizon,
                                   std::size_t period) {
  if (period < 1) throw ConfigError("seasonal period must be at least 1");
  if (origin < period || origin + horizon > s.size() + period)
    throw InsufficientDataError("series '" + s.id + "' has no history " + std::to_string(period) +
                                " steps before position " + std::to_string(origin));
  std::vector<double> out(horizon);
  for (std::size_t h = 0; h < horizon; ++h) out[h] = s.values[origin + h - period];
  return out;
}

double mean_absolute_error(std::span<const double> actual, std::span<const double> forecast) {
  check_same_size(actual, forecast);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) sum += std::abs(actual[i] - forecast[i]);
  return sum / static_cast<double>(actual.size());
}

double mase(std::span<const double> actual, std::span<const double> forecast,
            std::span<const double> naive) {
  const double denom = mean_absolute_error(actual, naive);
  if (!(denom > 0.0)) throw DegenerateWindow("naive seasonal forecast is exact on this window");
  return mean_absolute_error(actual, forecast) / denom;
}

double mase(const Series& s, std::size_t origin, std::span<const double> forecast,
            std::size_t period) {
  if (origin + forecast.size() > s.size()) throw InsufficientDataError("window runs past the series");
  const std::vector<double> naive = naive_seasonal(s, origin, forecast.size(), period);
  return mase(std::span<const double>(s.values).subspan(origin, forecast.size()), forecast, naive);
}

double mape(std::span<const double> actual, std::span<const double> forecast) {
  check_same_size(actual, forecast);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) throw ZeroActualError("MAPE undefined for a zero actual");
    sum += std::abs(actual[i] - forecast[i]) / std::abs(actual[i]);
  }
  return sum / static_cast<double>(actual.size()) * 100.0;
}

double nmae(std::span<const double> actual, std::span<const double> forecast) {
  check_same_size(actual, forecast);
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  if (!(mean > 0.0)) throw NormalizationError("NMAE needs a positive mean actual");
  return mean_absolute_error(actual, forecast) / mean;
}

SeriesMase series_mase(const Matrix& actual, const Matrix& forecast, const Matrix& naive) {
  if (actual.rows() != forecast.rows() || actual.rows() != naive.rows() ||
      actual.cols() != forecast.cols() || actual.cols() != naive.cols())
    throw ShapeError("actual, forecast and naive matrices differ in shape");
  SeriesMase r;
  double sum = 0.0;
  for (std::size_t w = 0; w < actual.rows(); ++w) {
    try {
      sum += mase(actual.row(w), forecast.row(w), naive.row(w));
      ++r.windows;
    } catch (const DegenerateWindow&) {
      ++r.degenerate;
    }
  }
  r.value = r.windows > 0 ? sum / static_cast<double>(r.windows) : kNaN;
  return r;
}

Matrix naive_forecasts(const SeriesSet& set, const WindowedDataset& d, std::size_t period) {
  Matrix out(d.rows(), d.horizon);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (d.sample_series_index[r] >= set.size())
      throw UnknownSeriesError("window refers to series index " +
                               std::to_string(d.sample_series_index[r]));
    const auto naive =
        naive_seasonal(set.series[d.sample_series_index[r]], d.target_start[r], d.horizon, period);
    std::copy(naive.begin(), naive.end(), out.row(r).begin());
  }
  return out;
}

EvalResult evaluate(const Matrix& forecasts, const WindowedDataset& d, const SeriesSet& set,
                    std::size_t period) {
  if (forecasts.rows() != d.rows() || forecasts.cols() != d.horizon)
    throw ShapeError("forecasts are not aligned with the evaluation windows");
  const Matrix naive = naive_forecasts(set, d, period);
  const std::size_t H = d.horizon;

  struct Acc {
    double mase = 0.0, mape = 0.0, nmae = 0.0;
    std::size_t n_mase = 0, n_mape = 0, n_nmae = 0;
    std::vector<double> step;
    SeriesMetrics m;
  };
  std::map<std::size_t, Acc> acc;  // keyed by series index, so output follows set order
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const std::size_t s = d.sample_series_index[r];
    Acc& a = acc[s];
    if (a.step.empty()) a.step.assign(H, 0.0);
    ++a.m.windows;
    auto actual = d.y.row(r);
    auto forecast = forecasts.row(r);
    const double naive_mae = mean_absolute_error(actual, naive.row(r));
    if (naive_mae > 0.0) {
      a.mase += mean_absolute_error(actual, forecast) / naive_mae;
      for (std::size_t h = 0; h < H; ++h) a.step[h] += std::abs(actual[h] - forecast[h]) / naive_mae;
      ++a.n_mase;
    } else {
      ++a.m.degenerate_windows;
    }
    try {
      a.mape += mape(actual, forecast);
      ++a.n_mape;
    } catch (const ZeroActualError&) {
      ++a.m.zero_actual_windows;
    }
    try {
      a.nmae += nmae(actual, forecast);
      ++a.n_nmae;
    } catch (const NormalizationError&) {
      ++a.m.nonpositive_mean_windows;
    }
  }

  EvalResult result;
  for (auto& [s, a] : acc) {
    SeriesMetrics m = std::move(a.m);
    m.id = set.series[s].id;
    m.aggregate_type = set.series[s].aggregate_type;
    m.mase = a.n_mase ? a.mase / static_cast<double>(a.n_mase) : kNaN;
    m.mape = a.n_mape ? a.mape / static_cast<double>(a.n_mape) : kNaN;
    m.nmae = a.n_nmae ? a.nmae / static_cast<double>(a.n_nmae) : kNaN;
    m.horizon_mase.assign(H, kNaN);
    if (a.n_mase)
      for (std::size_t h = 0; h < H; ++h) m.horizon_mase[h] = a.step[h] / static_cast<double>(a.n_mase);
    result.degenerate_windows += m.degenerate_windows;
    result.zero_actual_windows += m.zero_actual_windows;
    result.series.push_back(std::move(m));
  }

  std::vector<const SeriesMetrics*> all;
  for (const SeriesMetrics& m : result.series) all.push_back(&m);
  result.overall = group_of(all);
  for (std::size_t t = 0; t < kAggregateTypes.size(); ++t) {
    std::vector<const SeriesMetrics*> members;
    for (const SeriesMetrics& m : result.series)
      if (m.aggregate_type == kAggregateTypes[t]) members.push_back(&m);
    result.by_type[t] = group_of(members);
  }
  result.horizon_mase.assign(H, kNaN);
  for (std::size_t h = 0; h < H; ++h) {
    std::vector<double> col;
    for (const SeriesMetrics& m : result.series) col.push_back(m.horizon_mase[h]);
    result.horizon_mase[h] = defined_mean(col).first;
  }
  return result;
}

void write_series_csv(const EvalResult& r, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "id,agg_type,mase,mape,nmae\n";
  for (const SeriesMetrics& m : r.series)
    out << m.id << ',' << to_string(m.aggregate_type) << ',' << format_number(m.mase) << ','
        << format_number(m.mape) << ',' << format_number(m.nmae) << '\n';
  if (!out) throw IOError("failed writing '" + path.string() + "'");
}

void write_horizon_csv(const EvalResult& r, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "step,mase_full_window_naive\n";
  for (std::size_t h = 0; h < r.horizon_mase.size(); ++h)
    out << h + 1 << ',' << format_number(r.horizon_mase[h]) << '\n';
  if (!out) throw IOError("failed writing '" + path.string() + "'");
}

void write_summary_csv(std::span<const NamedResult> results, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "strategy,group,mase,mape,nmae,series\n";
  auto row = [&out](const std::string& name, std::string_view group, const GroupMetrics& g) {
    out << name << ',' << group << ',' << format_number(g.mase) << ',' << format_number(g.mape)
        << ',' << format_number(g.nmae) << ',' << g.series << '\n';
  };
  for (const NamedResult& nr : results) {
    for (std::size_t t = 0; t < kAggregateTypes.size(); ++t)
      row(nr.name, to_string(kAggregateTypes[t]), nr.result->by_type[t]);
    row(nr.name, "overall", nr.result->overall);
  }
  if (!out) throw IOError("failed writing '" + path.string() + "'");
}

std::vector<ImprovementRow> improvement(const EvalResult& a, const EvalResult& b) {
  std::map<std::string, const SeriesMetrics*> lookup;
  for (const SeriesMetrics& m : b.series) lookup[m.id] = &m;
  std::vector<ImprovementRow> rows;
  for (const SeriesMetrics& m : a.series) {
    auto it = lookup.find(m.id);
    if (it == lookup.end()) throw UnknownSeriesError("series '" + m.id + "' missing from baseline");
    if (std::isnan(m.mase) || std::isnan(it->second->mase)) continue;
    rows.push_back({m.id, m.aggregate_type, m.mase, it->second->mase,
                    (m.mase - it->second->mase) * 100.0, 0.0});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ImprovementRow& x, const ImprovementRow& y) {
    return x.improvement < y.improvement;
  });
  for (std::size_t k = 0; k < rows.size(); ++k)
    rows[k].ecdf = static_cast<double>(k + 1) / static_cast<double>(rows.size());
  return rows;
}

void write_improvement_csv(std::span<const ImprovementRow> rows, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "id,agg_type,mase_a,mase_b,improvement,ecdf\n";
  for (const ImprovementRow& r : rows)
    out << r.id << ',' << to_string(r.aggregate_type) << ',' << format_number(r.mase_a) << ','
        << format_number(r.mase_b) << ',' << format_number(r.improvement) << ','
        << format_number(r.ecdf) << '\n';
  if (!out) throw IOError("failed writing '" + path.string() + "'");
}

}  // namespace glocal
