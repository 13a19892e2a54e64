#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace omodl {

using cplx = std::complex<double>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct FormatError : Error {
  using Error::Error;
};

struct ConvergenceError : Error {
  ConvergenceError(std::string const &what, double residual, int iterations)
    : Error(what), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

struct InfeasibleError : Error {
  using Error::Error;
};

/// Dense row-major complex grid. Used for image-domain data, filters and
/// any intermediate 2-D array.
class ComplexGrid {
public:
  ComplexGrid() = default;
  ComplexGrid(int rows, int cols) : rows_(rows), cols_(cols), data_(checked_size(rows, cols)) {}
  ComplexGrid(int rows, int cols, std::vector<cplx> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != checked_size(rows, cols)) {
      throw DimensionError("grid data length does not match rows*cols");
    }
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(ComplexGrid const &o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  cplx &operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  cplx operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  cplx &operator[](std::size_t i) { return data_[i]; }
  cplx operator[](std::size_t i) const { return data_[i]; }

  std::span<cplx> values() { return data_; }
  std::span<cplx const> values() const { return data_; }
  std::vector<cplx> &storage() { return data_; }
  std::vector<cplx> const &storage() const { return data_; }

  void fill(cplx v) { std::fill(data_.begin(), data_.end(), v); }

  ComplexGrid &operator+=(ComplexGrid const &o) {
    require_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  ComplexGrid &operator-=(ComplexGrid const &o) {
    require_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  ComplexGrid &operator*=(cplx s) {
    for (auto &v : data_) v *= s;
    return *this;
  }

  friend ComplexGrid operator+(ComplexGrid a, ComplexGrid const &b) { return a += b; }
  friend ComplexGrid operator-(ComplexGrid a, ComplexGrid const &b) { return a -= b; }
  friend ComplexGrid operator*(cplx s, ComplexGrid a) { return a *= s; }

  bool operator==(ComplexGrid const &) const = default;

  void require_same(ComplexGrid const &o) const {
    if (!same_shape(o)) {
      throw DimensionError("grid shape mismatch: " + shape_string() + " vs " + o.shape_string());
    }
  }
  std::string shape_string() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

private:
  static std::size_t checked_size(int rows, int cols) {
    if (rows <= 0 || cols <= 0) throw DimensionError("grid dimensions must be positive");
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<cplx> data_;
};

/// Fourier coefficients on a centered grid: frequency (0,0) sits at
/// array position (rows/2, cols/2).
class KSpaceImage : public ComplexGrid {
public:
  KSpaceImage() = default;
  KSpaceImage(int rows, int cols) : ComplexGrid(rows, cols) {}
  explicit KSpaceImage(ComplexGrid g) : ComplexGrid(std::move(g)) {}

  int freq_row(int r) const { return r - rows() / 2; }
  int freq_col(int c) const { return c - cols() / 2; }
};

/// Sum of conj(a)*b.
inline cplx inner(std::span<cplx const> a, std::span<cplx const> b) {
  if (a.size() != b.size()) throw DimensionError("inner product of unequal lengths");
  cplx s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline cplx inner(ComplexGrid const &a, ComplexGrid const &b) {
  a.require_same(b);
  return inner(a.values(), b.values());
}

inline double squared_norm(std::span<cplx const> a) {
  double s = 0;
  for (auto v : a) s += std::norm(v);
  return s;
}

inline double norm2(std::span<cplx const> a) { return std::sqrt(squared_norm(a)); }
inline double norm2(ComplexGrid const &a) { return norm2(a.values()); }

inline bool all_finite(std::span<cplx const> a) {
  for (auto v : a) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

} // namespace omodl
