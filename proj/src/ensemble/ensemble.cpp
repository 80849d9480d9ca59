#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "glocal/ensemble.hpp"
#include "glocal/errors.hpp"

namespace glocal {
namespace {

using nlohmann::json;

constexpr const char* kSelectionsFormat = "glocal-selections";
constexpr int kSelectionsVersion = 1;

double error_of(const SeriesCandidates& c, const Matrix& forecast) {
  const SeriesMase m = series_mase(c.actual, forecast, c.naive);
  if (std::isnan(m.value)) throw NumericError("validation MASE undefined: every window is degenerate");
  return m.value;
}

}  // namespace

std::vector<double> candidate_errors(const SeriesCandidates& c) {
  if (c.forecasts.empty()) throw EmptyInputError("no candidate levels");
  std::vector<double> errors;
  errors.reserve(c.forecasts.size());
  for (const Matrix& f : c.forecasts) errors.push_back(error_of(c, f));
  return errors;
}

std::vector<std::size_t> rank_candidates(std::span<const double> errors) {
  std::vector<std::size_t> order(errors.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&errors](std::size_t a, std::size_t b) { return errors[a] < errors[b]; });
  return order;
}

Matrix average_levels(std::span<const Matrix> per_level, std::span<const std::size_t> levels) {
  if (levels.empty()) throw EmptyInputError("cannot average an empty selection");
  std::vector<std::size_t> sorted(levels.begin(), levels.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t l : sorted)
    if (l >= per_level.size()) throw ValueError("selection refers to missing level " + std::to_string(l));
  const Matrix& first = per_level[sorted.front()];
  Matrix out(first.rows(), first.cols());
  for (std::size_t l : sorted) {
    const Matrix& f = per_level[l];
    if (f.rows() != out.rows() || f.cols() != out.cols()) throw ShapeError("level forecasts differ in shape");
    for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] += f.data()[k];
  }
  if (sorted.size() > 1) {
    const double n = static_cast<double>(sorted.size());
    for (double& v : out.flat()) v /= n;
  }
  return out;
}

SeriesSelection build_ensemble(const SeriesCandidates& c) {
  SeriesSelection sel;
  sel.candidate_errors = candidate_errors(c);
  const std::vector<std::size_t> ranked = rank_candidates(sel.candidate_errors);
  sel.levels.push_back(ranked.front());
  sel.validation_error = sel.candidate_errors[ranked.front()];
  for (std::size_t k = 1; k < ranked.size(); ++k) {
    std::vector<std::size_t> trial = sel.levels;
    trial.push_back(ranked[k]);
    const double err = error_of(c, average_levels(c.forecasts, trial));
    if (err >= sel.validation_error) break;
    sel.levels = std::move(trial);
    sel.validation_error = err;
  }
  return sel;
}

const SeriesSelection& EnsembleSelection::of(std::string_view id) const {
  for (std::size_t s = 0; s < series_ids.size(); ++s)
    if (series_ids[s] == id) return selections[s];
  throw UnknownSeriesError("no ensemble selection for series '" + std::string(id) + "'");
}

std::vector<Matrix> level_forecasts(const LocalizedModelStore& store, const WindowedDataset& d) {
  std::vector<Matrix> out;
  const std::size_t levels = std::max<std::size_t>(1, store.n_levels());
  for (std::size_t l = 0; l < levels; ++l) out.push_back(localized_predict(store, l, d));
  return out;
}

std::vector<SeriesCandidates> split_candidates(std::span<const Matrix> per_level,
                                               const WindowedDataset& d, const SeriesSet& set) {
  std::vector<std::vector<std::size_t>> rows(set.size());
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (d.sample_series_index[r] >= set.size())
      throw UnknownSeriesError("window refers to series index " +
                               std::to_string(d.sample_series_index[r]));
    rows[d.sample_series_index[r]].push_back(r);
  }
  const Matrix naive = naive_forecasts(set, d);
  std::vector<SeriesCandidates> out(set.size());
  for (std::size_t s = 0; s < set.size(); ++s) {
    out[s].actual = gather_rows(d.y, rows[s]);
    out[s].naive = gather_rows(naive, rows[s]);
    for (const Matrix& f : per_level) out[s].forecasts.push_back(gather_rows(f, rows[s]));
  }
  return out;
}

Matrix combine_levels(std::span<const Matrix> per_level, const WindowedDataset& d,
                      std::span<const std::vector<std::size_t>> per_series_levels) {
  // Rows are averaged one series at a time with the same routine used while
  // selecting, so scores computed during selection are reproduced exactly.
  std::vector<std::vector<std::size_t>> rows(per_series_levels.size());
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const std::size_t s = d.sample_series_index[r];
    if (s >= per_series_levels.size() || per_series_levels[s].empty())
      throw UnknownSeriesError("no level selection for series index " + std::to_string(s));
    rows[s].push_back(r);
  }
  Matrix out(d.rows(), d.horizon);
  std::vector<Matrix> gathered;
  for (std::size_t s = 0; s < rows.size(); ++s) {
    if (rows[s].empty()) continue;
    gathered.clear();
    for (const Matrix& f : per_level) gathered.push_back(gather_rows(f, rows[s]));
    const Matrix avg = average_levels(gathered, per_series_levels[s]);
    for (std::size_t k = 0; k < rows[s].size(); ++k) {
      auto src = avg.row(k);
      std::copy(src.begin(), src.end(), out.row(rows[s][k]).begin());
    }
  }
  return out;
}

std::size_t choose_all_level(std::span<const std::vector<double>> per_series_errors) {
  if (per_series_errors.empty()) throw EmptyInputError("no series to choose a level for");
  const std::size_t levels = per_series_errors.front().size();
  std::size_t best = 0;
  double best_mean = 0.0;
  for (std::size_t l = 0; l < levels; ++l) {
    double sum = 0.0;
    for (const auto& e : per_series_errors) sum += e.at(l);
    const double mean = sum / static_cast<double>(per_series_errors.size());
    if (l == 0 || mean < best_mean) {
      best = l;
      best_mean = mean;
    }
  }
  return best;
}

EnsembleSelection select_ensembles(std::span<const SeriesCandidates> validation,
                                   const SeriesSet& set) {
  if (validation.size() != set.size()) throw ShapeError("one candidate set per series expected");
  EnsembleSelection out;
  std::vector<std::vector<double>> errors;
  for (std::size_t s = 0; s < set.size(); ++s) {
    if (validation[s].actual.rows() == 0)
      throw EmptyInputError("series '" + set.series[s].id + "' has no validation windows");
    out.series_ids.push_back(set.series[s].id);
    out.selections.push_back(build_ensemble(validation[s]));
    errors.push_back(out.selections.back().candidate_errors);
  }
  out.all_level = choose_all_level(errors);
  return out;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::All: return "all";
    case Strategy::Best: return "best";
    case Strategy::Ens: return "ens";
  }
  return "unknown";
}

std::vector<std::vector<std::size_t>> strategy_levels(const EnsembleSelection& sel, Strategy s) {
  std::vector<std::vector<std::size_t>> out;
  for (const SeriesSelection& ss : sel.selections) {
    switch (s) {
      case Strategy::All: out.push_back({sel.all_level}); break;
      case Strategy::Best: out.push_back({ss.levels.front()}); break;
      case Strategy::Ens: out.push_back(ss.levels); break;
    }
  }
  return out;
}

Matrix strategy_forecast(const EnsembleSelection& sel, Strategy s, const LocalizedModelStore& store,
                         const WindowedDataset& d, const SeriesSet& set) {
  const auto by_selection = strategy_levels(sel, s);
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t k = 0; k < sel.series_ids.size(); ++k) position[sel.series_ids[k]] = k;
  std::vector<std::vector<std::size_t>> by_series(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto it = position.find(set.series[i].id);
    if (it != position.end()) by_series[i] = by_selection[it->second];
  }
  std::size_t max_level = 0;
  for (const auto& levels : by_series)
    for (std::size_t l : levels) max_level = std::max(max_level, l);
  if (max_level >= std::max<std::size_t>(1, store.n_levels()))
    throw ValueError("selection refers to level " + std::to_string(max_level) +
                     " beyond the model store");
  return combine_levels(level_forecasts(store, d), d, by_series);
}

Matrix ensemble_forecast(const EnsembleSelection& sel, const LocalizedModelStore& store,
                         const WindowedDataset& d, const SeriesSet& set) {
  return strategy_forecast(sel, Strategy::Ens, store, d, set);
}

void save_selections(const EnsembleSelection& sel, const std::filesystem::path& path) {
  json j;
  j["format"] = kSelectionsFormat;
  j["version"] = kSelectionsVersion;
  j["all_level"] = sel.all_level;
  j["series"] = json::array();
  for (std::size_t s = 0; s < sel.series_ids.size(); ++s) {
    const SeriesSelection& ss = sel.selections[s];
    j["series"].push_back({{"id", sel.series_ids[s]},
                           {"levels", ss.levels},
                           {"validation_mase", ss.validation_error},
                           {"candidate_mase", ss.candidate_errors}});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IOError("failed writing '" + path.string() + "'");
}

EnsembleSelection load_selections(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open '" + path.string() + "'");
  EnsembleSelection sel;
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != kSelectionsFormat ||
        j.at("version").get<int>() != kSelectionsVersion)
      throw ValueError("'" + path.string() + "' is not a supported selections file");
    sel.all_level = j.at("all_level").get<std::size_t>();
    for (const json& s : j.at("series")) {
      sel.series_ids.push_back(s.at("id").get<std::string>());
      SeriesSelection ss;
      ss.levels = s.at("levels").get<std::vector<std::size_t>>();
      ss.validation_error = s.at("validation_mase").get<double>();
      ss.candidate_errors = s.at("candidate_mase").get<std::vector<double>>();
      if (ss.levels.empty()) throw ValueError("empty selection for '" + sel.series_ids.back() + "'");
      sel.selections.push_back(std::move(ss));
    }
  } catch (const json::exception& e) {
    throw ValueError("malformed selections '" + path.string() + "': " + e.what());
  }
  return sel;
}

}  // namespace glocal
