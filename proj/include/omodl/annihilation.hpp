#pragma once

#include "kspace.hpp"
#include "patches.hpp"

namespace omodl {

/// Filter window inside a grid. Valid-region output (0,0) is the window
/// fully inside the grid, anchored at the top-left corner.
struct FilterSupport {
  FilterSupport(int f_rows, int f_cols, int grid_rows, int grid_cols)
    : f_rows(f_rows), f_cols(f_cols), grid_rows(grid_rows), grid_cols(grid_cols) {
    if (f_rows <= 0 || f_cols <= 0 || f_rows % 2 == 0 || f_cols % 2 == 0) {
      throw ConfigError("filter support dims must be odd and positive");
    }
    if (f_rows > grid_rows || f_cols > grid_cols) throw DimensionError("filter support larger than grid");
  }

  int valid_rows() const { return grid_rows - f_rows + 1; }
  int valid_cols() const { return grid_cols - f_cols + 1; }
  int dim() const { return f_rows * f_cols; }

  bool operator==(FilterSupport const &) const = default;

  int f_rows, f_cols, grid_rows, grid_cols;
};

struct AnnihilationFilterBank {
  AnnihilationFilterBank(FilterSupport s, std::vector<ComplexGrid> fs) : support(s), filters(std::move(fs)) {
    for (auto const &f : filters) {
      if (f.rows() != support.f_rows || f.cols() != support.f_cols) throw DimensionError("filter does not match support");
      if (!all_finite(f.values())) throw Error("non-finite filter entry");
    }
  }

  int count() const { return static_cast<int>(filters.size()); }

  /// Sum over filters of vec(h) vec(h)^H, i.e. H H^H.
  detail::CMatrix outer_sum() const {
    detail::CMatrix q = detail::CMatrix::Zero(support.dim(), support.dim());
    for (auto const &f : filters) {
      Eigen::Map<detail::CVector const> h(f.storage().data(), support.dim());
      q.noalias() += h * h.adjoint();
    }
    return q;
  }

  FilterSupport support;
  std::vector<ComplexGrid> filters;
};

struct GramMatrix {
  int dim() const { return static_cast<int>(m.rows()); }
  detail::CMatrix m;
};

/// Valid 2-D linear convolution h * g (no padding).
inline ComplexGrid lift_convolve(ComplexGrid const &h, ComplexGrid const &g) {
  if (h.rows() > g.rows() || h.cols() > g.cols()) throw DimensionError("filter larger than grid");
  int const fr = h.rows(), fc = h.cols();
  int const vr = g.rows() - fr + 1, vc = g.cols() - fc + 1;
  ComplexGrid out(vr, vc);
  for (int i = 0; i < vr; ++i) {
    for (int j = 0; j < vc; ++j) {
      cplx s = 0;
      for (int a = 0; a < fr; ++a) {
        for (int b = 0; b < fc; ++b) s += h(a, b) * g(i + fr - 1 - a, j + fc - 1 - b);
      }
      out(i, j) = s;
    }
  }
  return out;
}

/// Adjoint of lift_convolve in its data argument: full correlation with
/// conj(h), landing on the original grid dims.
inline ComplexGrid lift_adjoint(ComplexGrid const &h, ComplexGrid const &v) {
  int const fr = h.rows(), fc = h.cols();
  ComplexGrid out(v.rows() + fr - 1, v.cols() + fc - 1);
  for (int i = 0; i < v.rows(); ++i) {
    for (int j = 0; j < v.cols(); ++j) {
      cplx const vij = v(i, j);
      for (int a = 0; a < fr; ++a) {
        for (int b = 0; b < fc; ++b) out(i + fr - 1 - a, j + fc - 1 - b) += std::conj(h(a, b)) * vij;
      }
    }
  }
  return out;
}

/// Pair of valid-region outputs, one per gradient channel.
struct LiftedPair {
  ComplexGrid x;
  ComplexGrid y;
};

inline void require_support(GradientKSpace const &grad, FilterSupport const &s) {
  if (grad.rows() != s.grid_rows || grad.cols() != s.grid_cols) {
    throw DimensionError("filter support built for " + std::to_string(s.grid_rows) + "x" + std::to_string(s.grid_cols) +
                         " but gradient is " + grad.x.shape_string());
  }
}

/// The lifted operator T(grad f): maps a filter h to [g_x * h; g_y * h]
/// over the valid region. Immutable once built.
class StackedLift {
public:
  StackedLift(GradientKSpace grad, FilterSupport support) : grad_(std::move(grad)), support_(support) {
    require_support(grad_, support_);
  }

  FilterSupport const &support() const { return support_; }

  LiftedPair apply(ComplexGrid const &h) const {
    check_filter(h);
    // Convolution commutes: the data plays the role of the filter.
    return {valid_conv(grad_.x, h), valid_conv(grad_.y, h)};
  }

  ComplexGrid apply_adjoint(LiftedPair const &v) const {
    ComplexGrid h(support_.f_rows, support_.f_cols);
    accumulate_adjoint(grad_.x, v.x, h);
    accumulate_adjoint(grad_.y, v.y, h);
    return h;
  }

  /// Explicit matrix: rows = stacked valid positions (x then y), cols = taps.
  detail::CMatrix dense() const {
    int const vr = support_.valid_rows(), vc = support_.valid_cols();
    Eigen::Index const nv = static_cast<Eigen::Index>(vr) * vc;
    detail::CMatrix m(2 * nv, support_.dim());
    ComplexGrid const *chans[2] = {&grad_.x, &grad_.y};
    for (int ch = 0; ch < 2; ++ch) {
      for (int i = 0; i < vr; ++i) {
        for (int j = 0; j < vc; ++j) {
          for (int a = 0; a < support_.f_rows; ++a) {
            for (int b = 0; b < support_.f_cols; ++b) {
              m(ch * nv + i * vc + j, a * support_.f_cols + b) =
                (*chans[ch])(i + support_.f_rows - 1 - a, j + support_.f_cols - 1 - b);
            }
          }
        }
      }
    }
    return m;
  }

private:
  void check_filter(ComplexGrid const &h) const {
    if (h.rows() != support_.f_rows || h.cols() != support_.f_cols) throw DimensionError("filter does not match support");
  }

  ComplexGrid valid_conv(ComplexGrid const &g, ComplexGrid const &h) const {
    int const fr = support_.f_rows, fc = support_.f_cols;
    ComplexGrid out(support_.valid_rows(), support_.valid_cols());
    for (int i = 0; i < out.rows(); ++i) {
      for (int j = 0; j < out.cols(); ++j) {
        cplx s = 0;
        for (int a = 0; a < fr; ++a) {
          for (int b = 0; b < fc; ++b) s += g(i + fr - 1 - a, j + fc - 1 - b) * h(a, b);
        }
        out(i, j) = s;
      }
    }
    return out;
  }

  void accumulate_adjoint(ComplexGrid const &g, ComplexGrid const &v, ComplexGrid &h) const {
    int const fr = support_.f_rows, fc = support_.f_cols;
    if (v.rows() != support_.valid_rows() || v.cols() != support_.valid_cols()) throw DimensionError("lifted pair has wrong dims");
    for (int a = 0; a < fr; ++a) {
      for (int b = 0; b < fc; ++b) {
        cplx s = 0;
        for (int i = 0; i < v.rows(); ++i) {
          for (int j = 0; j < v.cols(); ++j) s += std::conj(g(i + fr - 1 - a, j + fc - 1 - b)) * v(i, j);
        }
        h(a, b) += s;
      }
    }
  }

  GradientKSpace grad_;
  FilterSupport support_;
};

inline StackedLift stacked_lift(GradientKSpace const &grad, FilterSupport const &support) { return {grad, support}; }

/// G = M^H M for the stacked lift M, without forming M. Each entry is a
/// windowed lag product conj(g[p]) g[p + delta]; windows are read off
/// per-lag summed-area tables.
inline GramMatrix gram_assemble(GradientKSpace const &grad, FilterSupport const &support) {
  require_support(grad, support);
  int const R = grad.rows(), C = grad.cols();
  int const fr = support.f_rows, fc = support.f_cols;
  int const vr = support.valid_rows(), vc = support.valid_cols();
  int const d = support.dim();
  GramMatrix gram{detail::CMatrix::Zero(d, d)};
  std::vector<cplx> table(static_cast<std::size_t>(R + 1) * (C + 1));
  auto at = [&](int r, int c) -> cplx & { return table[static_cast<std::size_t>(r) * (C + 1) + c]; };

  for (int du = -(fr - 1); du <= fr - 1; ++du) {
    for (int dv = -(fc - 1); dv <= fc - 1; ++dv) {
      std::fill(table.begin(), table.end(), cplx(0.0));
      for (int r = 0; r < R; ++r) {
        cplx row_sum = 0;
        for (int c = 0; c < C; ++c) {
          int const r2 = r + du, c2 = c + dv;
          if (r2 >= 0 && r2 < R && c2 >= 0 && c2 < C) {
            row_sum += std::conj(grad.x(r, c)) * grad.x(r2, c2) + std::conj(grad.y(r, c)) * grad.y(r2, c2);
          }
          at(r + 1, c + 1) = at(r, c + 1) + row_sum;
        }
      }
      // u = fr-1-a is the row offset of tap a inside a window.
      for (int u = 0; u < fr; ++u) {
        int const u2 = u + du;
        if (u2 < 0 || u2 >= fr) continue;
        for (int v = 0; v < fc; ++v) {
          int const v2 = v + dv;
          if (v2 < 0 || v2 >= fc) continue;
          cplx const s = at(u + vr, v + vc) - at(u, v + vc) - at(u + vr, v) + at(u, v);
          int const tap = (fr - 1 - u) * fc + (fc - 1 - v);
          int const tap2 = (fr - 1 - u2) * fc + (fc - 1 - v2);
          gram.m(tap, tap2) = s;
        }
      }
    }
  }
  return gram;
}

/// T(H)^H T(H) acting per gradient channel. Only H H^H enters, so the
/// bank is folded into a single tap-space matrix up front.
class FilterbankNormalOp {
public:
  explicit FilterbankNormalOp(AnnihilationFilterBank const &bank) : support_(bank.support), qconj_(bank.outer_sum().conjugate()) {}

  FilterSupport const &support() const { return support_; }

  GradientKSpace apply(GradientKSpace const &z) const {
    require_support(z, support_);
    return {apply_channel(z.x), apply_channel(z.y)};
  }

  ComplexGrid apply_channel(ComplexGrid const &g) const {
    int const fr = support_.f_rows, fc = support_.f_cols;
    auto patches = detail::im2col(g.storage().data(), 1, g.rows(), g.cols(), fr, fc);
    detail::RowMatrix mixed = qconj_ * patches;
    ComplexGrid out(g.rows(), g.cols());
    detail::col2im_add(mixed, 1, g.rows(), g.cols(), fr, fc, out.storage().data());
    return out;
  }

private:
  FilterSupport support_;
  detail::RowMatrix qconj_;
};

inline GradientKSpace filterbank_normal_apply(AnnihilationFilterBank const &bank, GradientKSpace const &z) {
  require_support(z, bank.support);
  if (bank.count() == 0) return GradientKSpace(z.rows(), z.cols());
  return FilterbankNormalOp(bank).apply(z);
}

} // namespace omodl
