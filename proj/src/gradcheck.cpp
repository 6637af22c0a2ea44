#include "dascd/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace dascd {

Tensor finite_difference_grad(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double step) {
  if (!(step > 0.0)) throw ContractError("finite_difference_grad: step must be positive");
  Tensor probe = x;
  Tensor grad(x.shape());
  auto eval = [&](const Tensor& at) {
    const Tensor out = f(at);
    if (out.size() != 1) {
      throw ContractError("finite_difference_grad: f must return a scalar, got shape " + to_string(out.shape()));
    }
    return out[0];
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = eval(probe);
    probe[i] = orig - step;
    const double down = eval(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double relative_error(double a, double b) noexcept {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

bool gradients_agree(double analytic, double numeric, double rel_tol, double abs_tol) noexcept {
  return std::abs(analytic - numeric) <= abs_tol || relative_error(analytic, numeric) <= rel_tol;
}

}  // namespace dascd
