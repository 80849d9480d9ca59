#include <algorithm>
#include <cmath>
#include <string>

#include "glocal/errors.hpp"
#include "glocal/kernels.hpp"
#include "glocal/model.hpp"

namespace glocal {
namespace {

void check_inputs(const ModelParams& p, const Matrix& x_lags, const Matrix& x_exog) {
  const ModelConfig& c = p.config;
  if (x_lags.cols() != c.lags)
    throw ShapeError("lag matrix has " + std::to_string(x_lags.cols()) + " columns, model expects " +
                     std::to_string(c.lags));
  if (c.cat_dim > 0 && (x_exog.cols() != c.cat_dim || x_exog.rows() != x_lags.rows()))
    throw ShapeError("calendar matrix shape does not match the model");
}

// out = act(in * W^T + b)
void affine(const ModelParams& p, const LinearSlot& s, const Matrix& in, Matrix& out, bool relu) {
  out.resize(in.rows(), s.out);
  kernels::active().dense_nt(in.rows(), s.out, s.in, in.data(), p.weights(s).data(),
                             p.biases(s).data(), out.data());
  if (relu)
    for (double& v : out.flat()) v = v > 0.0 ? v : 0.0;
}

Matrix block_input(const Matrix& residual, const Matrix& x_exog, std::size_t cat_dim) {
  if (cat_dim == 0) return residual;
  const std::size_t k = residual.cols();
  Matrix in(residual.rows(), k + cat_dim);
  for (std::size_t i = 0; i < residual.rows(); ++i) {
    auto dst = in.row(i);
    auto lag = residual.row(i);
    auto cal = x_exog.row(i);
    std::copy(lag.begin(), lag.end(), dst.begin());
    std::copy(cal.begin(), cal.end(), dst.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return in;
}

struct ForwardOptions {
  bool keep_blocks = false;
  Tape* tape = nullptr;
};

ForwardResult run_forward(const ModelParams& p, const Matrix& x_lags, const Matrix& x_exog,
                          ForwardOptions opt) {
  check_inputs(p, x_lags, x_exog);
  const ModelConfig& c = p.config;
  const std::size_t m = x_lags.rows();

  ForwardResult result;
  result.forecast = Matrix(m, c.horizon);
  if (opt.tape) opt.tape->blocks.assign(c.n_blocks, {});

  Matrix residual = x_lags;
  Matrix input, hidden, next, backcast, partial;
  for (std::size_t r = 0; r < c.n_blocks; ++r) {
    const BlockLayout& b = p.blocks[r];
    if (opt.keep_blocks) result.residual_trace.push_back(residual);
    input = r == 0 ? block_input(residual, x_exog, c.cat_dim) : residual;

    const Matrix* current = &input;
    std::vector<Matrix> hiddens;
    hiddens.reserve(c.n_layers);
    for (std::size_t l = 0; l < c.n_layers; ++l) {
      affine(p, b.fc[l], *current, next, true);
      if (opt.tape) {
        hiddens.push_back(next);
        current = &hiddens.back();
      } else {
        std::swap(hidden, next);
        current = &hidden;
      }
    }
    affine(p, b.forecast, *current, partial, false);
    if (r + 1 < c.n_blocks) {
      affine(p, b.backcast, *current, backcast, false);
      for (std::size_t i = 0; i < residual.size(); ++i) residual.data()[i] -= backcast.data()[i];
    } else if (opt.keep_blocks || opt.tape) {
      // The last block's backcast feeds nothing downstream but is still part of the block.
      affine(p, b.backcast, *current, backcast, false);
    }

    for (std::size_t i = 0; i < partial.size(); ++i) result.forecast.data()[i] += partial.data()[i];
    if (opt.keep_blocks) result.per_block.push_back(partial);
    if (opt.tape) {
      opt.tape->blocks[r].input = std::move(input);
      opt.tape->blocks[r].hidden = std::move(hiddens);
    }
  }

  for (double v : result.forecast.flat())
    if (!std::isfinite(v)) throw NumericError("non-finite forecast");
  return result;
}

void add_column_sums(const Matrix& g, std::span<double> out) {
  for (std::size_t i = 0; i < g.rows(); ++i) {
    auto row = g.row(i);
    for (std::size_t j = 0; j < g.cols(); ++j) out[j] += row[j];
  }
}

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

ForwardResult forward(const ModelParams& p, const Matrix& x_lags, const Matrix& x_exog, Tape* tape) {
  return run_forward(p, x_lags, x_exog, {true, tape});
}

Matrix predict(const ModelParams& p, const Matrix& x_lags, const Matrix& x_exog) {
  check_inputs(p, x_lags, x_exog);
  constexpr std::size_t kChunk = 256;
  const std::size_t m = x_lags.rows();
  if (m <= kChunk) return run_forward(p, x_lags, x_exog, {}).forecast;

  Matrix out(m, p.config.horizon);
  std::vector<std::size_t> rows;
  for (std::size_t begin = 0; begin < m; begin += kChunk) {
    const std::size_t end = std::min(m, begin + kChunk);
    rows.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) rows[i - begin] = i;
    const Matrix exog = p.config.cat_dim > 0 ? gather_rows(x_exog, rows) : Matrix{};
    const Matrix f = run_forward(p, gather_rows(x_lags, rows), exog, {}).forecast;
    std::copy(f.flat().begin(), f.flat().end(), out.row(begin).begin());
  }
  return out;
}

Matrix predict(const ModelParams& p, const WindowedDataset& d) {
  return predict(p, d.x_lags, d.x_exog);
}

double mean_absolute_error(const Matrix& forecast, const Matrix& y) {
  if (forecast.rows() != y.rows() || forecast.cols() != y.cols())
    throw ShapeError("forecast and target shapes differ");
  if (y.size() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(forecast.data()[i] - y.data()[i]);
  return sum / static_cast<double>(y.size());
}

LossGrad backward(const ModelParams& p, const Matrix& x_lags, const Matrix& x_exog, const Matrix& y,
                  double lambda) {
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  const ModelConfig& c = p.config;
  if (y.rows() != x_lags.rows() || y.cols() != c.horizon)
    throw ShapeError("target matrix shape does not match the model");
  const kernels::KernelSet& kern = kernels::active();
  const std::size_t m = x_lags.rows();

  Tape tape;
  const ForwardResult fwd = run_forward(p, x_lags, x_exog, {false, &tape});

  LossGrad out;
  out.grad.assign(p.theta.size(), 0.0);
  const double scale = m > 0 ? 1.0 / static_cast<double>(m * c.horizon) : 0.0;
  Matrix g_forecast(m, c.horizon);
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = fwd.forecast.data()[i] - y.data()[i];
    abs_sum += std::abs(e);
    g_forecast.data()[i] = sign(e) * scale;
  }
  out.data_loss = abs_sum * scale;

  double* grad = out.grad.data();
  Matrix g_residual(m, c.lags);  // dL/d(lag input of block r+1)
  Matrix g_backcast(m, c.lags), g_hidden, g_prev;
  for (std::size_t rr = c.n_blocks; rr-- > 0;) {
    const BlockLayout& b = p.blocks[rr];
    const Tape::Block& t = tape.blocks[rr];
    const Matrix& top = t.hidden.back();
    const bool feeds_next = rr + 1 < c.n_blocks;

    g_hidden.resize(m, c.width);
    kern.accum_nn(m, c.horizon, c.width, g_forecast.data(), p.weights(b.forecast).data(),
                  g_hidden.data());
    kern.accum_tn(m, c.horizon, c.width, g_forecast.data(), top.data(), grad + b.forecast.weight_offset);
    add_column_sums(g_forecast, {grad + b.forecast.bias_offset, c.horizon});
    if (feeds_next) {
      for (std::size_t i = 0; i < g_backcast.size(); ++i) g_backcast.data()[i] = -g_residual.data()[i];
      kern.accum_nn(m, c.lags, c.width, g_backcast.data(), p.weights(b.backcast).data(),
                    g_hidden.data());
      kern.accum_tn(m, c.lags, c.width, g_backcast.data(), top.data(), grad + b.backcast.weight_offset);
      add_column_sums(g_backcast, {grad + b.backcast.bias_offset, c.lags});
    }

    for (std::size_t l = c.n_layers; l-- > 0;) {
      const LinearSlot& s = b.fc[l];
      const Matrix& act = t.hidden[l];
      for (std::size_t i = 0; i < g_hidden.size(); ++i)
        if (act.data()[i] <= 0.0) g_hidden.data()[i] = 0.0;
      const Matrix& below = l == 0 ? t.input : t.hidden[l - 1];
      kern.accum_tn(m, s.out, s.in, g_hidden.data(), below.data(), grad + s.weight_offset);
      add_column_sums(g_hidden, {grad + s.bias_offset, s.out});
      if (l > 0) {
        g_prev.resize(m, s.in);
        kern.accum_nn(m, s.out, s.in, g_hidden.data(), p.weights(s).data(), g_prev.data());
        std::swap(g_hidden, g_prev);
      } else if (rr > 0) {
        // Block rr > 0 reads only the lag residual, so its input width is K.
        kern.accum_nn(m, s.out, s.in, g_hidden.data(), p.weights(s).data(), g_residual.data());
      }
    }
  }

  double penalty = 0.0;
  if (lambda > 0.0) {
    for (std::size_t j = 0; j < p.theta.size(); ++j) {
      penalty += std::abs(p.theta[j]);
      grad[j] += lambda * sign(p.theta[j]);
    }
  }
  out.loss = out.data_loss + lambda * penalty;
  if (!std::isfinite(out.loss)) throw NumericError("non-finite loss");
  return out;
}

}  // namespace glocal
