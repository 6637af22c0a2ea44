#pragma once

#include <functional>

#include "dascd/tensor.hpp"

namespace dascd {

/// Central-difference gradient of a scalar-valued f at x:
/// (f(x + h·e_i) − f(x − h·e_i)) / 2h for every element i.
/// Throws ContractError if f returns more than one element or step <= 0.
Tensor finite_difference_grad(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double step = 1e-5);

/// |a − b| / max(|a|, |b|), or 0 when both are exactly zero.
double relative_error(double a, double b) noexcept;

/// Agreement test used by every gradient check in the project: passes when
/// the relative error is within rel_tol or the absolute error within abs_tol.
bool gradients_agree(double analytic, double numeric, double rel_tol, double abs_tol) noexcept;

}  // namespace dascd
