#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "glocal/errors.hpp"
#include "glocal/training.hpp"

namespace glocal {

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (min_delta < 0.0) throw ConfigError("min_delta must be non-negative");
  if (schedule == Schedule::StepDecay && step_epochs < 1)
    throw ConfigError("step decay period must be at least 1 epoch");
}

TrainConfig TrainConfig::global_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::fine_tune_defaults() {
  TrainConfig tc;
  tc.lr0 = 1e-4;
  tc.schedule = Schedule::StepDecay;
  tc.max_epochs = 60;
  return tc;
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::MaxEpochs: return "max_epochs";
    case StopReason::Plateau: return "plateau";
    case StopReason::EarlyStop: return "early_stop";
    case StopReason::NoEpochs: return "no_epochs";
  }
  return "unknown";
}

double step_decay_lr(const TrainConfig& tc, std::size_t epoch) {
  const std::size_t decays = epoch == 0 ? 0 : (epoch - 1) / tc.step_epochs;
  double lr = tc.lr0;
  for (std::size_t i = 0; i < decays; ++i) lr /= 10.0;
  return lr;
}

namespace {

double validation_loss(const ModelParams& p, const WindowedDataset& val) {
  return mean_absolute_error(predict(p, val), val.y);
}

double run_epoch(ModelParams& p, OptimizerState& opt, const WindowedDataset& train,
                 const TrainConfig& tc, double lr, std::mt19937_64& rng,
                 std::vector<std::size_t>& order) {
  std::shuffle(order.begin(), order.end(), rng);
  double weighted = 0.0;
  std::vector<std::size_t> rows;
  for (std::size_t begin = 0; begin < order.size(); begin += tc.batch_size) {
    const std::size_t end = std::min(order.size(), begin + tc.batch_size);
    rows.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                order.begin() + static_cast<std::ptrdiff_t>(end));
    const Matrix x_lags = gather_rows(train.x_lags, rows);
    const Matrix x_exog = gather_rows(train.x_exog, rows);
    const Matrix y = gather_rows(train.y, rows);
    const LossGrad lg = backward(p, x_lags, x_exog, y, tc.lambda);
    adam_step(opt, p.theta, lg.grad, lr);
    weighted += lg.data_loss * static_cast<double>(rows.size());
  }
  return weighted / static_cast<double>(order.size());
}

TrainResult train_loop(ModelParams start, const DatasetSplit& split, const TrainConfig& tc,
                       bool initial_is_candidate) {
  tc.validate();
  if (split.train.empty()) throw EmptyInputError("training set is empty");
  if (split.validation.empty()) throw EmptyInputError("validation set is empty");
  const auto t0 = std::chrono::steady_clock::now();

  TrainResult result{start, {}};
  TrainReport& report = result.report;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double best = kInf;
  if (initial_is_candidate) {
    report.initial_val_loss = validation_loss(start, split.validation);
    best = report.initial_val_loss;
  }
  report.best_val_loss = best;
  if (tc.max_epochs == 0) {
    report.stop_reason = StopReason::NoEpochs;
    return result;
  }

  ModelParams p = std::move(start);
  OptimizerState opt(p.theta.size());
  std::mt19937_64 rng(tc.seed ^ 0x5DEECE66Dull);
  std::vector<std::size_t> order(split.train.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double plateau_ref = best;
  std::size_t wait = 0;
  std::size_t decays = 0;
  double lr = tc.lr0;
  report.stop_reason = StopReason::MaxEpochs;

  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    if (tc.schedule == Schedule::StepDecay) lr = step_decay_lr(tc, epoch);
    const double train_loss = run_epoch(p, opt, split.train, tc, lr, rng, order);
    const double val_loss = validation_loss(p, split.validation);
    report.epochs.push_back({epoch, train_loss, val_loss, lr});

    if (val_loss < best) {
      best = val_loss;
      result.params = p;
      report.best_epoch = epoch;
    }
    if (val_loss < plateau_ref - tc.min_delta) {
      plateau_ref = val_loss;
      wait = 0;
    } else {
      ++wait;
    }

    if (wait >= tc.patience) {
      if (tc.schedule == Schedule::PlateauDecay && decays < tc.max_decays) {
        lr /= 10.0;
        ++decays;
        wait = 0;
      } else {
        report.stop_reason =
            tc.schedule == Schedule::PlateauDecay ? StopReason::Plateau : StopReason::EarlyStop;
        break;
      }
    }
  }
  report.best_val_loss = best;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace

TrainResult train_global(const DatasetSplit& split, const ModelConfig& cfg, const TrainConfig& tc) {
  if (split.train.empty()) throw EmptyInputError("training set is empty");
  return train_loop(init_params(cfg, tc.seed), split, tc, false);
}

TrainResult fine_tune(const ModelParams& start, const DatasetSplit& split, const TrainConfig& tc) {
  return train_loop(start, split, tc, true);
}

void write_report_csv(const TrainReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write '" + path.string() + "'");
  out << "epoch,train_loss,val_loss,lr\n";
  char buf[64];
  auto num = [&buf](double v) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string_view(buf, static_cast<std::size_t>(end - buf));
  };
  for (const EpochRecord& e : report.epochs) {
    out << e.epoch << ',' << num(e.train_loss) << ',';
    out << num(e.val_loss) << ',';
    out << num(e.lr) << '\n';
  }
  if (!out) throw IOError("failed writing '" + path.string() + "'");
}

}  // namespace glocal
