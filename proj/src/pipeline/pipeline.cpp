#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "glocal/errors.hpp"
#include "glocal/pipeline.hpp"

namespace glocal {
namespace {

void note(const PipelineConfig& cfg, const std::string& message) {
  if (cfg.log) cfg.log(message);
}

ModelParams load_global(const PipelineConfig& cfg) {
  const auto path = cfg.models_dir() / model_file_name(0, 0);
  if (!std::filesystem::exists(path))
    throw IOError("global model '" + path.string() + "' not found; run train-global first");
  ModelParams p = load_model(path);
  if (!(p.config == cfg.effective_model()))
    throw ConfigError("global model '" + path.string() + "' does not match the configured model");
  return p;
}

void write_validation_table(const EnsembleSelection& sel, const SeriesSet& set,
                            const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write '" + path.string() + "'");
  out << "id,agg_type,global,all,best,ens,levels\n";
  for (std::size_t s = 0; s < sel.series_ids.size(); ++s) {
    const SeriesSelection& ss = sel.selections[s];
    const auto idx = set.find(sel.series_ids[s]);
    out << sel.series_ids[s] << ',' << (idx ? to_string(set.series[*idx].aggregate_type) : "") << ','
        << format_number(ss.candidate_errors.front()) << ','
        << format_number(ss.candidate_errors.at(sel.all_level)) << ','
        << format_number(ss.candidate_errors.at(ss.levels.front())) << ','
        << format_number(ss.validation_error) << ',';
    for (std::size_t k = 0; k < ss.levels.size(); ++k) out << (k ? ";" : "") << ss.levels[k];
    out << '\n';
  }
  if (!out) throw IOError("failed writing '" + path.string() + "'");
}

void write_strategy_reports(const std::filesystem::path& dir, const std::string& prefix,
                            const std::string& name, const EvalResult& r) {
  write_series_csv(r, dir / (prefix + "_" + name + "_series.csv"));
  write_horizon_csv(r, dir / (prefix + "_" + name + "_horizon.csv"));
}

}  // namespace

std::filesystem::path PipelineConfig::data_path() const {
  return data.empty() ? workdir / "data" / "series.csv" : data;
}

ModelConfig PipelineConfig::effective_model() const {
  ModelConfig m = model;
  m.lags = split.lags;
  m.horizon = split.horizon;
  m.cat_dim = kCalendarDim;
  return m;
}

void PipelineConfig::validate() const {
  effective_model().validate();
  global_train.validate();
  fine_tune.validate();
  if (per_type < 1) throw ConfigError("per-type count must be at least 1");
  if (split.train_subsample < 1) throw ConfigError("subsample factor must be at least 1");
  if (n_clusters < 2) throw ConfigError("cluster count must be at least 2");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
}

PreparedData prepare_data(const PipelineConfig& cfg) {
  cfg.validate();
  PreparedData d;
  d.raw = load_csv(cfg.data_path());
  const SplitPlan plan = plan_split(d.raw.length(), cfg.split);
  d.scales = training_scales(d.raw, plan);
  d.scaled = rescaled(d.raw, d.scales);
  d.split = split_by_time(d.scaled, cfg.split);
  return d;
}

void cmd_generate(const PipelineConfig& cfg) {
  if (cfg.per_type < 1) throw ConfigError("per-type count must be at least 1");
  const SeriesSet set = generate_synthetic(cfg.data_seed, cfg.per_type, cfg.weeks);
  const auto path = cfg.data_path();
  write_csv(set, path);

  nlohmann::json manifest;
  manifest["generator"] = "glocal-synthetic";
  manifest["seed"] = cfg.data_seed;
  manifest["per_type"] = cfg.per_type;
  manifest["weeks"] = cfg.weeks;
  manifest["series"] = set.size();
  manifest["length"] = set.length();
  manifest["start"] = format_timestamp(set.series.front().start);
  manifest["file"] = path.filename().string();
  const auto manifest_path = path.parent_path() / "manifest.json";
  std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write '" + manifest_path.string() + "'");
  out << manifest.dump(2) << '\n';
  if (!out) throw IOError("failed writing '" + manifest_path.string() + "'");
  note(cfg, "wrote " + std::to_string(set.size()) + " series of " + std::to_string(set.length()) +
                " steps to " + path.string());
}

TrainReport cmd_train_global(const PipelineConfig& cfg) {
  const PreparedData d = prepare_data(cfg);
  note(cfg, "training rows: " + std::to_string(d.split.train.rows()) + " across " +
                std::to_string(d.raw.size()) + " series (subsample " +
                std::to_string(cfg.split.train_subsample) + ")");
  TrainResult r = train_global(d.split, cfg.effective_model(), cfg.global_train);
  std::filesystem::create_directories(cfg.models_dir());
  save_model(r.params, cfg.models_dir() / model_file_name(0, 0));
  write_report_csv(r.report, cfg.reports_dir() / "train_global.csv");
  note(cfg, "global model: " + std::to_string(r.report.epochs.size()) + " epochs, best epoch " +
                std::to_string(r.report.best_epoch) + ", validation MAE " +
                format_number(r.report.best_val_loss) + " (" +
                std::string(to_string(r.report.stop_reason)) + ")");
  return r.report;
}

LocalizedModelStore cmd_localize(const PipelineConfig& cfg) {
  const PreparedData d = prepare_data(cfg);
  const ModelParams global = load_global(cfg);

  Matrix features;
  std::vector<std::string> ids;
  for (const Series& s : d.raw.series) {
    const FeatureVector f = extract_features(s, d.split.plan.train_begin, d.split.plan.validation_begin);
    features.push_row(f);
    ids.push_back(s.id);
  }
  const ClusterHierarchy h =
      build_hierarchy(features, cfg.n_clusters, cfg.cluster_seed, cfg.epsilon, ids);
  save_hierarchy(h, cfg.workdir / "hierarchy.json");

  {
    const auto path = cfg.reports_dir() / "features.csv";
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot write '" + path.string() + "'");
    out << "id";
    for (auto name : kFeatureNames) out << ',' << name;
    out << '\n';
    for (std::size_t s = 0; s < ids.size(); ++s) {
      out << ids[s];
      for (std::size_t j = 0; j < kFeatureCount; ++j) out << ',' << format_number(features(s, j));
      out << '\n';
    }
  }

  LocalizeOptions options;
  options.jobs = cfg.jobs;
  options.checkpoint_dir = cfg.models_dir();
  options.resume = cfg.resume;
  const auto reports = cfg.reports_dir();
  options.on_trained = [&reports](std::size_t l, std::size_t i, const TrainReport& rep) {
    write_report_csv(rep, reports / ("finetune_" + model_file_name(l, i).substr(6) + ".csv"));
  };
  LocalizedModelStore store = localize_hierarchy(global, h, d.split, cfg.fine_tune, options);
  save_store(store, cfg.workdir);
  note(cfg, "localized " + std::to_string(store.localized.size()) + " models over " +
                std::to_string(cfg.n_clusters - 1) + " levels");
  return store;
}

EnsembleSelection cmd_ensemble(const PipelineConfig& cfg) {
  const PreparedData d = prepare_data(cfg);
  const LocalizedModelStore store = load_store(cfg.workdir);
  if (store.hierarchy.series_ids.size() != d.raw.size())
    throw ShapeError("hierarchy and data hold different series counts");
  for (std::size_t s = 0; s < d.raw.size(); ++s)
    if (store.hierarchy.series_ids[s] != d.raw.series[s].id)
      throw UnknownSeriesError("series '" + d.raw.series[s].id + "' is not in the hierarchy");

  const std::vector<Matrix> per_level = level_forecasts(store, d.split.validation);
  const auto candidates = split_candidates(per_level, d.split.validation, d.scaled);
  EnsembleSelection sel = select_ensembles(candidates, d.scaled);
  save_selections(sel, cfg.workdir / "selections.json");
  write_validation_table(sel, d.scaled, cfg.reports_dir() / "validation_series.csv");

  const EvalResult global = evaluate(per_level[0], d.split.validation, d.scaled);
  const EvalResult all = evaluate(
      combine_levels(per_level, d.split.validation, strategy_levels(sel, Strategy::All)),
      d.split.validation, d.scaled);
  const EvalResult best = evaluate(
      combine_levels(per_level, d.split.validation, strategy_levels(sel, Strategy::Best)),
      d.split.validation, d.scaled);
  const EvalResult ens = evaluate(
      combine_levels(per_level, d.split.validation, strategy_levels(sel, Strategy::Ens)),
      d.split.validation, d.scaled);
  const NamedResult rows[] = {{"global", &global}, {"all", &all}, {"best", &best}, {"ens", &ens}};
  write_summary_csv(rows, cfg.reports_dir() / "validation_summary.csv");
  note(cfg, "validation MASE: global " + format_number(global.overall.mase) + ", all (level " +
                std::to_string(sel.all_level) + ") " + format_number(all.overall.mase) +
                ", best " + format_number(best.overall.mase) + ", ens " +
                format_number(ens.overall.mase));
  return sel;
}

EvaluationSummary cmd_evaluate(const PipelineConfig& cfg) {
  const PreparedData d = prepare_data(cfg);
  const LocalizedModelStore store = load_store(cfg.workdir);
  const EnsembleSelection sel = load_selections(cfg.workdir / "selections.json");
  const WindowedDataset& test = d.split.test;

  auto by_series = [&](Strategy s) {
    const auto levels = strategy_levels(sel, s);
    std::vector<std::vector<std::size_t>> out(d.scaled.size());
    for (std::size_t k = 0; k < sel.series_ids.size(); ++k) {
      const auto idx = d.scaled.find(sel.series_ids[k]);
      if (!idx) throw UnknownSeriesError("selection for unknown series '" + sel.series_ids[k] + "'");
      out[*idx] = levels[k];
    }
    return out;
  };
  const std::vector<Matrix> per_level = level_forecasts(store, test);

  EvaluationSummary r;
  r.global = evaluate(per_level[0], test, d.scaled);
  r.all = evaluate(combine_levels(per_level, test, by_series(Strategy::All)), test, d.scaled);
  r.best = evaluate(combine_levels(per_level, test, by_series(Strategy::Best)), test, d.scaled);
  r.ens = evaluate(combine_levels(per_level, test, by_series(Strategy::Ens)), test, d.scaled);
  r.naive = evaluate(naive_forecasts(d.scaled, test), test, d.scaled);

  const auto dir = cfg.reports_dir();
  write_strategy_reports(dir, "test", "global", r.global);
  write_strategy_reports(dir, "test", "all", r.all);
  write_strategy_reports(dir, "test", "best", r.best);
  write_strategy_reports(dir, "test", "ens", r.ens);
  write_strategy_reports(dir, "test", "naive", r.naive);
  const NamedResult rows[] = {{"global", &r.global}, {"all", &r.all}, {"best", &r.best},
                              {"ens", &r.ens},       {"naive", &r.naive}};
  write_summary_csv(rows, dir / "test_summary.csv");
  write_improvement_csv(improvement(r.ens, r.global), dir / "improvement_ens_vs_global.csv");
  write_improvement_csv(improvement(r.all, r.global), dir / "improvement_all_vs_global.csv");
  write_improvement_csv(improvement(r.best, r.global), dir / "improvement_best_vs_global.csv");
  note(cfg, "test MASE: global " + format_number(r.global.overall.mase) + ", all " +
                format_number(r.all.overall.mase) + ", best " + format_number(r.best.overall.mase) +
                ", ens " + format_number(r.ens.overall.mase) + ", naive " +
                format_number(r.naive.overall.mase));
  if (r.global.degenerate_windows > 0)
    note(cfg, std::to_string(r.global.degenerate_windows) + " degenerate test windows excluded");
  return r;
}

ForecastSource parse_forecast_source(std::string_view text) {
  if (text == "global") return ForecastSource::Global;
  if (text == "all") return ForecastSource::All;
  if (text == "best") return ForecastSource::Best;
  if (text == "ens") return ForecastSource::Ens;
  throw ValueError("unknown forecast source '" + std::string(text) +
                   "' (expected global, all, best or ens)");
}

void cmd_forecast(const PipelineConfig& cfg, ForecastSource source,
                  const std::filesystem::path& output) {
  cfg.validate();
  const SeriesSet raw = load_csv(cfg.data_path());
  const SplitPlan plan = plan_split(raw.length(), cfg.split);
  const std::vector<double> scales = training_scales(raw, plan);
  const SeriesSet scaled = rescaled(raw, scales);
  const std::size_t K = cfg.split.lags, H = cfg.split.horizon;
  if (scaled.length() < K) throw InsufficientDataError("series shorter than the lag window");

  // One window per series whose targets start right after the last observation.
  WindowedDataset next;
  next.lags = K;
  next.horizon = H;
  next.y.resize(0, H);
  for (std::size_t s = 0; s < scaled.size(); ++s) {
    const Series& series = scaled.series[s];
    next.x_lags.push_row(std::span<const double>(series.values).subspan(series.size() - K, K));
    next.x_exog.push_row(encode_calendar(series.time_at(series.size())));
    next.y.push_row(std::vector<double>(H, 0.0));
    next.sample_series_index.push_back(s);
    next.target_start.push_back(series.size());
  }

  Matrix forecast;
  if (source == ForecastSource::Global) {
    forecast = predict(load_global(cfg), next);
  } else {
    const LocalizedModelStore store = load_store(cfg.workdir);
    const EnsembleSelection sel = load_selections(cfg.workdir / "selections.json");
    const Strategy strategy = source == ForecastSource::All    ? Strategy::All
                              : source == ForecastSource::Best ? Strategy::Best
                                                               : Strategy::Ens;
    forecast = strategy_forecast(sel, strategy, store, next, scaled);
  }

  if (output.has_parent_path()) std::filesystem::create_directories(output.parent_path());
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write '" + output.string() + "'");
  out << "timestamp,id,forecast\n";
  for (std::size_t s = 0; s < raw.size(); ++s) {
    const Series& series = raw.series[s];
    for (std::size_t h = 0; h < H; ++h)
      out << format_timestamp(series.time_at(series.size() + h)) << ',' << series.id << ','
          << format_number(forecast(s, h) * scales[s]) << '\n';
  }
  if (!out) throw IOError("failed writing '" + output.string() + "'");
  note(cfg, "wrote " + std::to_string(raw.size() * H) + " forecasts to " + output.string());
}

}  // namespace glocal
