#pragma once

#include "annihilation.hpp"
#include "cg.hpp"

#include <Eigen/Eigenvalues>

#include <optional>

namespace omodl {

/// Settings for the IRLS structured low-rank solver.
///
/// The epsilon schedule is relative: eps starts at eps0 times the largest
/// eigenvalue of the Gram matrix of the zero-filled estimate, is multiplied
/// by eps_decay after every outer iteration and never drops below
/// eps_floor times that starting value.
///
/// schatten_p selects the penalty being majorized: p = 1 is the nuclear
/// norm (filters weighted by (lambda_j + eps)^(-1/4)), p = 0 is the
/// log-det penalty (weights (lambda_j + eps)^(-1/2)).
struct GirafConfig {
  double lambda = 1e-3;
  int filter_rows = 5;
  int filter_cols = 5;
  int outer_iters = 15;
  double eps0 = 1e-2;
  double eps_decay = 0.5;
  double eps_floor = 1e-9;
  double schatten_p = 1.0;
  CgOptions cg{};

  FilterSupport support_for(int rows, int cols) const { return {filter_rows, filter_cols, rows, cols}; }

  void validate() const {
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (outer_iters <= 0) throw ConfigError("outer_iters must be positive");
    if (!(eps0 > 0.0)) throw ConfigError("eps0 must be positive");
    if (!(eps_floor > 0.0 && eps_floor <= 1.0)) throw ConfigError("eps_floor must lie in (0,1]");
    if (!(eps_decay > 0.0 && eps_decay < 1.0)) throw ConfigError("eps_decay must lie in (0,1)");
    if (!(schatten_p >= 0.0 && schatten_p <= 1.0)) throw ConfigError("schatten_p must lie in [0,1]");
    if (!(cg.tol > 0.0) || cg.max_iters <= 0) throw ConfigError("CG tolerances must be positive");
  }
};

struct GirafState {
  KSpaceImage f_hat;
  std::optional<AnnihilationFilterBank> bank;
  double eps = 0.0;
  /// Majorized objective lambda*phi_eps(G) + ||A f - b||^2: entry 0 at the
  /// zero-filled start, then one per outer iteration (at that iteration's eps).
  std::vector<double> cost_history;
  /// Quadratic surrogate lambda*||T(grad f) H||_F^2 + ||A f - b||^2 with the
  /// iteration's filters, evaluated before and after its image update.
  std::vector<double> surrogate_start;
  std::vector<double> surrogate_history;
  std::vector<double> eps_history;
  std::vector<int> cg_iterations;
};

namespace detail {

inline Eigen::SelfAdjointEigenSolver<CMatrix> hermitian_eigen(CMatrix const &g) {
  double const scale = std::max(g.norm(), 1e-300);
  if ((g - g.adjoint()).norm() > 1e-10 * scale) throw Error("Gram matrix is not Hermitian");
  CMatrix sym = 0.5 * (g + g.adjoint());
  return Eigen::SelfAdjointEigenSolver<CMatrix>(sym);
}

inline double penalty(Eigen::VectorXd const &eigenvalues, double eps, double p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    double const v = std::max(eigenvalues[i], 0.0) + eps;
    s += p == 0.0 ? std::log(v) : (2.0 / p) * std::pow(v, p / 2.0);
  }
  return s;
}

inline double data_misfit(KSpaceImage const &f, KSpaceImage const &b, SamplingMask const &mask) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (mask.kept(i)) s += std::norm(f[i] - b[i]);
  }
  return s;
}

/// sum_j h_j^H G h_j = ||T(grad f) H||_F^2 for the Gram G of grad f.
inline double filter_energy(GramMatrix const &gram, AnnihilationFilterBank const &bank) {
  double quad = 0.0;
  for (auto const &h : bank.filters) {
    Eigen::Map<CVector const> hv(h.storage().data(), bank.support.dim());
    quad += std::real(hv.dot(gram.m * hv));
  }
  return quad;
}

} // namespace detail

/// Filters = columns of V diag((lambda_j + eps)^((p-2)/4)) for G = V diag(lambda) V^H,
/// so H H^H = (G + eps I)^((p-2)/2). With the default p = 1 this is (G + eps I)^(-1/2).
inline AnnihilationFilterBank filter_update(GramMatrix const &gram, FilterSupport const &support, double eps,
                                            double schatten_p = 1.0) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (gram.dim() != support.dim()) throw DimensionError("Gram size does not match filter support");
  auto eig = detail::hermitian_eigen(gram.m);
  double const expo = (schatten_p - 2.0) / 4.0;
  std::vector<ComplexGrid> filters;
  filters.reserve(gram.dim());
  for (int j = 0; j < gram.dim(); ++j) {
    double const w = std::pow(std::max(eig.eigenvalues()[j], 0.0) + eps, expo);
    ComplexGrid h(support.f_rows, support.f_cols);
    for (int t = 0; t < support.dim(); ++t) h[t] = w * eig.eigenvectors()(t, j);
    filters.push_back(std::move(h));
  }
  return {support, std::move(filters)};
}

/// Normal operator of the quadratic image update:
/// f -> A^H A f + lambda * grad^H T(H)^H T(H) grad f.
class GirafNormalOp {
public:
  GirafNormalOp(AnnihilationFilterBank const &bank, SamplingMask const &mask, GradientWeights const &w, double lambda)
    : op_(bank), mask_(mask), w_(w), lambda_(lambda) {}

  KSpaceImage operator()(KSpaceImage const &f) const {
    KSpaceImage out = apply_sampling(f, mask_);
    if (lambda_ != 0.0) {
      KSpaceImage reg = gradient_adjoint(op_.apply(gradient_transform(f, w_)), w_);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += lambda_ * reg[i];
    }
    return out;
  }

private:
  FilterbankNormalOp op_;
  SamplingMask const &mask_;
  GradientWeights const &w_;
  double lambda_;
};

/// Solves (A^H A + lambda grad^H T(H)^H T(H) grad) f = A^H b by CG, warm-started at x0.
inline CgResult<KSpaceImage> image_update(AnnihilationFilterBank const &bank, KSpaceImage const &b, SamplingMask const &mask,
                                          GradientWeights const &w, double lambda, CgOptions const &cg,
                                          std::optional<KSpaceImage> x0 = std::nullopt) {
  mask.require_grid(b);
  require_weights(b, w);
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  KSpaceImage rhs = apply_sampling(b, mask);
  KSpaceImage start = x0 ? std::move(*x0) : rhs;
  start.require_same(b);
  GirafNormalOp op(bank, mask, w, lambda);
  return conjugate_gradient(op, rhs, std::move(start), cg);
}

inline KSpaceImage image_update(AnnihilationFilterBank const &bank, KSpaceImage const &b, SamplingMask const &mask,
                                GradientWeights const &w, double lambda) {
  return image_update(bank, b, mask, w, lambda, CgOptions{}).x;
}

/// Majorized GIRAF objective lambda*phi_eps(G(f)) + ||A f - b||^2.
inline double giraf_objective(KSpaceImage const &f, KSpaceImage const &b, SamplingMask const &mask,
                              GradientWeights const &w, FilterSupport const &support, double lambda, double eps,
                              double schatten_p) {
  auto gram = gram_assemble(gradient_transform(f, w), support);
  auto eig = detail::hermitian_eigen(gram.m);
  return lambda * detail::penalty(eig.eigenvalues(), eps, schatten_p) + detail::data_misfit(f, b, mask);
}

/// Alternates Gram assembly, filter update and image update.
inline std::pair<KSpaceImage, GirafState> giraf_solve(KSpaceImage const &b, SamplingMask const &mask,
                                                      GirafConfig const &cfg) {
  cfg.validate();
  mask.require_grid(b);
  GradientWeights const w(b.rows(), b.cols());
  FilterSupport const support = cfg.support_for(b.rows(), b.cols());

  GirafState state;
  state.f_hat = apply_sampling(b, mask);
  GramMatrix gram = gram_assemble(gradient_transform(state.f_hat, w), support);
  auto eig = detail::hermitian_eigen(gram.m);
  double const top = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  double const scale = top > 0.0 ? top : 1.0;
  double eps = cfg.eps0 * scale;
  double const floor = cfg.eps_floor * eps;
  state.cost_history.push_back(cfg.lambda * detail::penalty(eig.eigenvalues(), eps, cfg.schatten_p) +
                               detail::data_misfit(state.f_hat, b, mask));

  for (int it = 0; it < cfg.outer_iters; ++it) {
    auto bank = filter_update(gram, support, eps, cfg.schatten_p);
    state.surrogate_start.push_back(cfg.lambda * detail::filter_energy(gram, bank) + detail::data_misfit(state.f_hat, b, mask));
    auto solved = image_update(bank, b, mask, w, cfg.lambda, cfg.cg, state.f_hat);
    state.f_hat = std::move(solved.x);
    state.cg_iterations.push_back(solved.iterations);

    gram = gram_assemble(gradient_transform(state.f_hat, w), support);
    double const misfit = detail::data_misfit(state.f_hat, b, mask);
    state.surrogate_history.push_back(cfg.lambda * detail::filter_energy(gram, bank) + misfit);
    eig = detail::hermitian_eigen(gram.m);
    state.cost_history.push_back(cfg.lambda * detail::penalty(eig.eigenvalues(), eps, cfg.schatten_p) + misfit);
    state.eps_history.push_back(eps);
    state.eps = eps;
    state.bank = std::move(bank);
    eps = std::max(eps * cfg.eps_decay, floor);
  }
  KSpaceImage out = state.f_hat;
  return {std::move(out), std::move(state)};
}

} // namespace omodl
