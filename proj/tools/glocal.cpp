// Command-line driver for the load-forecasting pipeline.
//
//   glocal generate     --workdir w --seed 1 --per-type 10 --weeks 77
//   glocal train-global --workdir w
//   glocal localize     --workdir w --clusters 20 --jobs 4
//   glocal ensemble     --workdir w
//   glocal evaluate     --workdir w
//   glocal forecast     --workdir w --source ens --output w/reports/forecast.csv
//
// Options may also come from a TOML/INI file given with --config; flags on the
// command line win over the file, which wins over the built-in defaults.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "glocal/errors.hpp"
#include "glocal/kernels.hpp"
#include "glocal/pipeline.hpp"

namespace {

struct Flags {
  glocal::PipelineConfig cfg;
  std::string source = "ens";
  std::string output;
  bool quiet = false;
};

void add_pipeline_options(CLI::App& app, Flags& f) {
  auto& c = f.cfg;
  app.add_option("--workdir", c.workdir, "Working directory")->capture_default_str();
  app.add_option("--data", c.data, "Input CSV (default <workdir>/data/series.csv)");

  app.add_option("--seed", c.data_seed, "Synthetic data seed")->capture_default_str();
  app.add_option("--per-type", c.per_type, "Synthetic series per aggregate type")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--weeks", c.weeks, "Synthetic series length in weeks")
      ->check(CLI::Range(3, 100000))
      ->capture_default_str();

  app.add_option("--train-weeks", c.split.train_weeks)->capture_default_str();
  app.add_option("--val-weeks", c.split.validation_weeks)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--test-weeks", c.split.test_weeks)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--lags", c.split.lags, "Lag window K")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--horizon", c.split.horizon, "Forecast horizon H")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--subsample", c.split.train_subsample, "Keep every n-th training window per series")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  app.add_option("--blocks", c.model.n_blocks)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--layers", c.model.n_layers)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--width", c.model.width)->check(CLI::PositiveNumber)->capture_default_str();

  auto& g = c.global_train;
  app.add_option("--lambda", g.lambda, "L1 penalty weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--lr", g.lr0)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--batch-size", g.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--epochs", g.max_epochs)->capture_default_str();
  app.add_option("--patience", g.patience)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--min-delta", g.min_delta)->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--max-decays", g.max_decays)->capture_default_str();
  app.add_option("--train-seed", g.seed)->capture_default_str();

  auto& t = c.fine_tune;
  app.add_option("--ft-lr", t.lr0)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--ft-epochs", t.max_epochs)->capture_default_str();
  app.add_option("--ft-step-epochs", t.step_epochs)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--ft-patience", t.patience)->check(CLI::PositiveNumber)->capture_default_str();

  app.add_option("--clusters", c.n_clusters, "Number of clusters C")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20))
      ->capture_default_str();
  app.add_option("--cluster-seed", c.cluster_seed)->capture_default_str();
  app.add_option("--epsilon", c.epsilon, "Centroid split perturbation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--jobs", c.jobs, "Parallel fine-tuning jobs")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--resume", c.resume, "Keep localized models already on disk");
  app.add_flag("-q,--quiet", f.quiet, "Suppress progress messages");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global load forecasting with cluster localization and ensembles"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with option values");

  Flags f;
  add_pipeline_options(app, f);

  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset to <workdir>/data");
  auto* train = app.add_subcommand("train-global", "Train the global model");
  auto* localize = app.add_subcommand("localize", "Cluster the series and fine-tune per cluster");
  auto* ensemble = app.add_subcommand("ensemble", "Select per-series ensembles on validation");
  auto* evaluate = app.add_subcommand("evaluate", "Score ALL/BEST/ENS, global and naive on test");
  auto* forecast = app.add_subcommand("forecast", "Forecast the horizon after the data ends");
  forecast->add_option("--source", f.source, "global, all, best or ens")
      ->check(CLI::IsMember({"global", "all", "best", "ens"}))
      ->capture_default_str();
  forecast->add_option("--output", f.output, "Output CSV (default <workdir>/reports/forecast.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (!f.quiet)
    f.cfg.log = [](std::string_view msg) { std::cerr << "glocal: " << msg << '\n'; };

  try {
    if (!f.quiet) f.cfg.log("kernels: " + std::string(glocal::kernels::active().name));
    if (generate->parsed()) {
      glocal::cmd_generate(f.cfg);
    } else if (train->parsed()) {
      glocal::cmd_train_global(f.cfg);
    } else if (localize->parsed()) {
      glocal::cmd_localize(f.cfg);
    } else if (ensemble->parsed()) {
      glocal::cmd_ensemble(f.cfg);
    } else if (evaluate->parsed()) {
      glocal::cmd_evaluate(f.cfg);
    } else if (forecast->parsed()) {
      const auto out = f.output.empty() ? f.cfg.reports_dir() / "forecast.csv"
                                        : std::filesystem::path(f.output);
      glocal::cmd_forecast(f.cfg, glocal::parse_forecast_source(f.source), out);
    }
  } catch (const glocal::ConfigError& e) {
    std::cerr << "glocal: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "glocal: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
