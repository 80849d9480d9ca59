#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "glocal/data.hpp"
#include "glocal/matrix.hpp"

namespace glocal {

/// Shape of the residual MLP forecaster: R blocks of L fully connected ReLU
/// layers, each block ending in a linear backcast head (K outputs) and a linear
/// forecast head (H outputs). Only the first block sees the calendar features.
struct ModelConfig {
  std::size_t n_blocks = 3;    // R
  std::size_t n_layers = 3;    // L
  std::size_t width = 512;     // w
  std::size_t lags = 336;      // K
  std::size_t horizon = 48;    // H
  std::size_t cat_dim = kCalendarDim;
  bool share_weights = false;

  /// Throws ConfigError on zero counts or on weight sharing (unsupported).
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Offsets of one affine map inside the flat parameter vector. The weight
/// matrix is stored [out][in] row-major and is followed by `out` biases.
struct LinearSlot {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

struct BlockLayout {
  std::vector<LinearSlot> fc;  // L hidden layers
  LinearSlot backcast;
  LinearSlot forecast;
};

/// Closed-form scalar count: R [(Kw + w) + (L-1)(w^2 + w) + (wK + K) + (wH + H)] + cat_dim w.
std::size_t parameter_count(const ModelConfig& cfg);

/// Network weights as one flat vector θ plus the per-block layout. Traversal
/// order is block-major, layer-major, weights then biases, with the backcast
/// head before the forecast head.
struct ModelParams {
  ModelConfig config;
  std::vector<BlockLayout> blocks;
  std::vector<double> theta;

  explicit ModelParams(const ModelConfig& cfg);
  ModelParams() = default;

  std::span<double> weights(const LinearSlot& s) { return {theta.data() + s.weight_offset, s.in * s.out}; }
  std::span<const double> weights(const LinearSlot& s) const {
    return {theta.data() + s.weight_offset, s.in * s.out};
  }
  std::span<double> biases(const LinearSlot& s) { return {theta.data() + s.bias_offset, s.out}; }
  std::span<const double> biases(const LinearSlot& s) const {
    return {theta.data() + s.bias_offset, s.out};
  }

  bool operator==(const ModelParams& other) const {
    return config == other.config && theta == other.theta;
  }
};

/// Weights uniform in ±sqrt(6 / fan_in), biases zero; deterministic in `seed`.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

struct ForwardResult {
  Matrix forecast;                     // m x H, sum of per_block
  std::vector<Matrix> per_block;       // R entries, m x H
  std::vector<Matrix> residual_trace;  // R entries, m x K: lag input seen by each block
};

/// Activations recorded for the backward pass.
struct Tape {
  struct Block {
    Matrix input;                // m x (K + cat) for block 0, m x K otherwise
    std::vector<Matrix> hidden;  // L post-ReLU activations, m x w
  };
  std::vector<Block> blocks;
};

/// Throws ShapeError on mismatched inputs and NumericError on non-finite output.
ForwardResult forward(const ModelParams& p, const Matrix& x_lags, const Matrix& x_exog,
                      Tape* tape = nullptr);

struct LossGrad {
  double loss = 0.0;       // data term + penalty
  double data_loss = 0.0;  // mean absolute error over m·H entries
  std::vector<double> grad;
};

/// Mean absolute error plus lambda·||θ||_1 and its exact subgradient with
/// sign(0) = 0 for both the error and the penalty terms.
LossGrad backward(const ModelParams& p, const Matrix& x_lags, const Matrix& x_exog,
                  const Matrix& y, double lambda);

/// Point forecasts for every row of `d`; evaluated in fixed-size row chunks.
Matrix predict(const ModelParams& p, const WindowedDataset& d);
Matrix predict(const ModelParams& p, const Matrix& x_lags, const Matrix& x_exog);

/// Mean absolute error of `forecast` against `y`.
double mean_absolute_error(const Matrix& forecast, const Matrix& y);

// Binary container: "GCMODEL\0", u32 version, eight u64 config/size fields,
// then every parameter as little-endian float64 in traversal order.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const ModelParams& p, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace glocal
