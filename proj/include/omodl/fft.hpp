#pragma once

#include "grid.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace omodl {

namespace detail {

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(FftwBuffer const &) = delete;
  FftwBuffer &operator=(FftwBuffer const &) = delete;
  fftw_complex *ptr;
};

// FFTW planning is not thread-safe; execution with new-array execute is.
class PlanCache {
public:
  static PlanCache &instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int rows, int cols, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(rows, cols, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    FftwBuffer scratch(static_cast<std::size_t>(rows) * cols);
    fftw_plan p = fftw_plan_dft_2d(rows, cols, scratch.ptr, scratch.ptr, sign, FFTW_ESTIMATE);
    plans_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto &kv : plans_) fftw_destroy_plan(kv.second);
  }

private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

inline void check_fft_dims(ComplexGrid const &g) {
  if (g.rows() % 2 != 0 || g.cols() % 2 != 0 || g.rows() < 8 || g.cols() < 8) {
    throw DimensionError("DFT requires even dimensions >= 8, got " + g.shape_string());
  }
}

// Centered unitary transform: ifftshift -> FFT -> fftshift, scaled by 1/sqrt(rows*cols).
inline ComplexGrid centered_transform(ComplexGrid const &in, int sign) {
  check_fft_dims(in);
  int const R = in.rows(), C = in.cols();
  int const hr = R / 2, hc = C / 2;
  FftwBuffer buf(in.size());
  auto *b = reinterpret_cast<cplx *>(buf.ptr);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      b[static_cast<std::size_t>((r + hr) % R) * C + (c + hc) % C] = in(r, c);
    }
  }
  fftw_execute_dft(PlanCache::instance().get(R, C, sign), buf.ptr, buf.ptr);
  double const scale = 1.0 / std::sqrt(static_cast<double>(R) * C);
  ComplexGrid out(R, C);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      out(r, c) = scale * b[static_cast<std::size_t>((r + hr) % R) * C + (c + hc) % C];
    }
  }
  return out;
}

} // namespace detail

/// Unitary 2-D DFT with centered frequency indexing.
inline KSpaceImage forward_dft(ComplexGrid const &img) {
  return KSpaceImage(detail::centered_transform(img, FFTW_FORWARD));
}

inline ComplexGrid inverse_dft(KSpaceImage const &k) {
  return detail::centered_transform(k, FFTW_BACKWARD);
}

} // namespace omodl
