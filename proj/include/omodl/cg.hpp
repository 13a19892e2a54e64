#pragma once

#include "grid.hpp"

#include <concepts>

namespace omodl {

struct CgOptions {
  double tol = 1e-8;
  int max_iters = 400;
};

template <class Vec>
struct CgResult {
  Vec x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conjugate gradients for a Hermitian positive (semi)definite operator.
/// Stops once ||b - A x|| <= tol * ||b||; throws ConvergenceError otherwise.
template <class Vec, class Op>
  requires std::invocable<Op const &, Vec const &>
CgResult<Vec> conjugate_gradient(Op const &apply, Vec const &rhs, Vec x, CgOptions const &opt) {
  double const rhs_norm = std::sqrt(std::real(inner(rhs, rhs)));
  if (rhs_norm == 0.0) {
    x *= cplx(0.0);
    return {std::move(x), 0, 0.0};
  }
  Vec r = rhs;
  r -= apply(x);
  Vec p = r;
  double rr = std::real(inner(r, r));
  int it = 0;
  while (std::sqrt(rr) > opt.tol * rhs_norm) {
    if (it >= opt.max_iters) {
      throw ConvergenceError("CG did not converge in " + std::to_string(opt.max_iters) + " iterations",
                             std::sqrt(rr) / rhs_norm, it);
    }
    Vec ap = apply(p);
    double const pap = std::real(inner(p, ap));
    if (!(pap > 0.0)) {
      throw ConvergenceError("CG hit a non-positive curvature direction", std::sqrt(rr) / rhs_norm, it);
    }
    double const alpha = rr / pap;
    Vec step = p;
    step *= cplx(alpha);
    x += step;
    ap *= cplx(alpha);
    r -= ap;
    double const rr_new = std::real(inner(r, r));
    p *= cplx(rr_new / rr);
    p += r;
    rr = rr_new;
    ++it;
  }
  return {std::move(x), it, std::sqrt(rr) / rhs_norm};
}

} // namespace omodl
