#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "glocal/data.hpp"
#include "glocal/model.hpp"

namespace glocal {

enum class Schedule {
  /// Divide lr by 10 whenever validation plateaus for `patience` epochs, at
  /// most `max_decays` times; the next plateau stops training.
  PlateauDecay,
  /// Divide lr by 10 every `step_epochs` epochs; stop after `patience`
  /// epochs without validation improvement.
  StepDecay,
};

struct TrainConfig {
  double lambda = 1e-4;
  double lr0 = 1e-3;
  Schedule schedule = Schedule::PlateauDecay;
  std::size_t max_decays = 3;
  std::size_t step_epochs = 20;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  double min_delta = 1e-4;
  std::uint64_t seed = 1;

  void validate() const;

  /// Defaults for the global model (lr 1e-3, plateau decay, 100 epochs).
  static TrainConfig global_defaults();
  /// Defaults for per-cluster fine-tuning (lr 1e-4, step decay every 20 epochs, 60 epochs).
  static TrainConfig fine_tune_defaults();
};

struct OptimizerState {
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit OptimizerState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update of `theta` in place. Throws ShapeError on
/// size mismatch and NumericError on non-finite gradients.
void adam_step(OptimizerState& state, std::span<double> theta, std::span<const double> grad,
               double lr);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean absolute error over the epoch's batches (penalty excluded)
  double val_loss = 0.0;    // mean absolute error on the validation set
  double lr = 0.0;
};

enum class StopReason { MaxEpochs, Plateau, EarlyStop, NoEpochs };

std::string_view to_string(StopReason reason);

struct TrainReport {
  std::vector<EpochRecord> epochs;
  StopReason stop_reason = StopReason::NoEpochs;
  std::size_t best_epoch = 0;    // 0 = initial parameters
  double best_val_loss = 0.0;
  double initial_val_loss = 0.0;  // filled by fine_tune
  double wall_seconds = 0.0;
};

/// Writes `epoch,train_loss,val_loss,lr`.
void write_report_csv(const TrainReport& report, const std::filesystem::path& path);

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

/// Trains from `init_params(cfg, tc.seed)` on split.train, selecting the
/// epoch with the lowest validation error. Throws EmptyInputError when the
/// training set is empty.
TrainResult train_global(const DatasetSplit& split, const ModelConfig& cfg, const TrainConfig& tc);

/// Continues training from `start` (never modified); the initial parameters
/// count as epoch 0 when choosing the best-validation snapshot.
TrainResult fine_tune(const ModelParams& start, const DatasetSplit& split, const TrainConfig& tc);

/// Learning rate in effect during `epoch` (1-based) under StepDecay.
double step_decay_lr(const TrainConfig& tc, std::size_t epoch);

}  // namespace glocal
