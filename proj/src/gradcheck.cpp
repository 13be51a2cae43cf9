#include "aste/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "aste/error.hpp"

namespace aste::nn {

double grad_check(ParamStore& params, const std::function<Var()>& computation, double eps) {
  check(eps >= 1e-7 && eps <= 1e-3, "grad_check: eps ", eps, " outside [1e-7, 1e-3]");

  params.zero_grads();
  Var loss = computation();
  check(loss.value().all_finite(), "grad_check: base loss is not finite");
  backward(loss);

  double worst = 0.0;
  for (const auto& p : params.all()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double analytic = p->grad[i];
      const double saved = p->value[i];

      p->value[i] = saved + eps;
      const double up = computation().value()[0];
      p->value[i] = saved - eps;
      const double down = computation().value()[0];
      p->value[i] = saved;

      if (!std::isfinite(up) || !std::isfinite(down))
        fail("grad_check: non-finite probe at ", p->name, "[", i, "]");

      const double numeric = (up - down) / (2.0 * eps);
      const double err = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  params.zero_grads();
  return worst;
}

}  // namespace aste::nn
