#include <cmath>

#include "glocal/errors.hpp"
#include "glocal/kernels.hpp"
#include "glocal/training.hpp"

namespace glocal {

void adam_step(OptimizerState& state, std::span<double> theta, std::span<const double> grad,
               double lr) {
  if (theta.size() != grad.size() || state.m.size() != theta.size() ||
      state.v.size() != theta.size())
    throw ShapeError("parameter, gradient and optimizer sizes differ");
  for (double g : grad)
    if (!std::isfinite(g)) throw NumericError("non-finite gradient");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const kernels::AdamCoefficients coef{lr,
                                       state.beta1,
                                       state.beta2,
                                       state.eps,
                                       1.0 - std::pow(state.beta1, t),
                                       1.0 - std::pow(state.beta2, t)};
  kernels::active().adam(theta.size(), theta.data(), grad.data(), state.m.data(), state.v.data(),
                         coef);
}

}  // namespace glocal
