#pragma once

#include "grid.hpp"

#include <cstdint>
#include <numbers>

namespace omodl {

/// Cartesian phase-encode mask: whole columns are kept or dropped.
class SamplingMask {
public:
  SamplingMask() = default;

  SamplingMask(int rows, int cols, std::vector<std::uint8_t> kept) : rows_(rows), cols_(cols), kept_(std::move(kept)) {
    if (rows <= 0 || cols <= 0) throw DimensionError("mask dimensions must be positive");
    if (kept_.size() != static_cast<std::size_t>(rows) * cols) throw DimensionError("mask length does not match rows*cols");
    for (int c = 0; c < cols_; ++c) {
      for (int r = 1; r < rows_; ++r) {
        if ((kept_[idx(r, c)] != 0) != (kept_[idx(0, c)] != 0)) {
          throw ConfigError("mask must keep or drop whole phase-encode columns");
        }
      }
    }
    if (!column_kept(cols_ / 2)) throw ConfigError("mask must keep the center (DC) column");
  }

  static SamplingMask from_columns(int rows, std::vector<bool> const &columns) {
    int const cols = static_cast<int>(columns.size());
    std::vector<std::uint8_t> kept(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) kept[static_cast<std::size_t>(r) * cols + c] = columns[c] ? 1 : 0;
    }
    return SamplingMask(rows, cols, std::move(kept));
  }

  static SamplingMask full(int rows, int cols) { return from_columns(rows, std::vector<bool>(cols, true)); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool kept(int r, int c) const { return kept_[idx(r, c)] != 0; }
  bool kept(std::size_t i) const { return kept_[i] != 0; }
  bool column_kept(int c) const { return kept_[idx(0, c)] != 0; }
  double sampled(std::size_t i) const { return kept_[i] ? 1.0 : 0.0; }

  int kept_columns() const {
    int n = 0;
    for (int c = 0; c < cols_; ++c) n += column_kept(c) ? 1 : 0;
    return n;
  }
  double kept_fraction() const { return static_cast<double>(kept_columns()) / cols_; }
  double acceleration() const { return static_cast<double>(cols_) / kept_columns(); }

  std::vector<std::uint8_t> const &entries() const { return kept_; }

  void require_grid(ComplexGrid const &g) const {
    if (g.rows() != rows_ || g.cols() != cols_) {
      throw DimensionError("mask " + std::to_string(rows_) + "x" + std::to_string(cols_) + " does not match grid " +
                           g.shape_string());
    }
  }

  bool operator==(SamplingMask const &) const = default;

private:
  std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * cols_ + c; }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> kept_;
};

/// Fourier-domain partial derivatives: wx = i*2*pi*kx/rows along rows,
/// wy = i*2*pi*ky/cols along columns, centered indices.
class GradientWeights {
public:
  GradientWeights(int rows, int cols) : wx(rows, cols), wy(rows, cols) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        wx(r, c) = cplx(0.0, two_pi * (r - rows / 2) / rows);
        wy(r, c) = cplx(0.0, two_pi * (c - cols / 2) / cols);
      }
    }
  }

  /// |wx|^2 + |wy|^2 at flat index i.
  double energy(std::size_t i) const { return std::norm(wx[i]) + std::norm(wy[i]); }

  int rows() const { return wx.rows(); }
  int cols() const { return wx.cols(); }

  ComplexGrid wx;
  ComplexGrid wy;
};

/// Two-channel k-space holding the Fourier coefficients of the x/y derivatives.
struct GradientKSpace {
  GradientKSpace() = default;
  GradientKSpace(int rows, int cols) : x(rows, cols), y(rows, cols) {}
  GradientKSpace(ComplexGrid xc, ComplexGrid yc) : x(std::move(xc)), y(std::move(yc)) { x.require_same(y); }

  int rows() const { return x.rows(); }
  int cols() const { return x.cols(); }

  GradientKSpace &operator+=(GradientKSpace const &o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  GradientKSpace &operator-=(GradientKSpace const &o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  GradientKSpace &operator*=(cplx s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend GradientKSpace operator+(GradientKSpace a, GradientKSpace const &b) { return a += b; }
  friend GradientKSpace operator-(GradientKSpace a, GradientKSpace const &b) { return a -= b; }
  friend GradientKSpace operator*(cplx s, GradientKSpace a) { return a *= s; }

  ComplexGrid x;
  ComplexGrid y;
};

inline cplx inner(GradientKSpace const &a, GradientKSpace const &b) { return inner(a.x, b.x) + inner(a.y, b.y); }
inline double norm2(GradientKSpace const &a) { return std::sqrt(squared_norm(a.x.values()) + squared_norm(a.y.values())); }

inline void require_weights(ComplexGrid const &g, GradientWeights const &w) {
  if (g.rows() != w.rows() || g.cols() != w.cols()) throw DimensionError("gradient weights do not match grid " + g.shape_string());
}

/// Zero-filled undersampling; self-adjoint (A^H A = diag(mask)).
inline KSpaceImage apply_sampling(KSpaceImage const &k, SamplingMask const &m) {
  m.require_grid(k);
  KSpaceImage out(k.rows(), k.cols());
  for (std::size_t i = 0; i < k.size(); ++i) out[i] = m.kept(i) ? k[i] : cplx(0.0);
  return out;
}

inline GradientKSpace gradient_transform(KSpaceImage const &f, GradientWeights const &w) {
  require_weights(f, w);
  GradientKSpace g(f.rows(), f.cols());
  for (std::size_t i = 0; i < f.size(); ++i) {
    g.x[i] = w.wx[i] * f[i];
    g.y[i] = w.wy[i] * f[i];
  }
  return g;
}

inline KSpaceImage gradient_adjoint(GradientKSpace const &z, GradientWeights const &w) {
  require_weights(z.x, w);
  z.x.require_same(z.y);
  KSpaceImage out(z.rows(), z.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::conj(w.wx[i]) * z.x[i] + std::conj(w.wy[i]) * z.y[i];
  return out;
}

} // namespace omodl
