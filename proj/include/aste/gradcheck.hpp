#pragma once

#include <functional>

#include "aste/autograd.hpp"

namespace aste::nn {

/// Compares the reverse-mode gradient of every parameter entry against
/// central finite differences of the given scalar computation. The
/// computation must be deterministic (no dropout). Returns the worst
/// relative error, |analytic - numeric| / max(1, |analytic|, |numeric|).
/// Throws if a probe produces a non-finite loss, naming the parameter.
double grad_check(ParamStore& params, const std::function<Var()>& computation, double eps = 1e-5);

}  // namespace aste::nn
