#pragma once

#include "../patches.hpp"
#include "../rng.hpp"

namespace omodl::net {

/// Channel-major stack of complex planes.
struct FeatureMap {
  FeatureMap() = default;
  FeatureMap(int channels, int rows, int cols)
    : channels(channels), rows(rows), cols(cols), data(static_cast<std::size_t>(channels) * rows * cols) {
    if (channels <= 0 || rows <= 0 || cols <= 0) throw DimensionError("feature map dims must be positive");
  }

  std::size_t plane_size() const { return static_cast<std::size_t>(rows) * cols; }
  cplx *plane(int c) { return data.data() + c * plane_size(); }
  cplx const *plane(int c) const { return data.data() + c * plane_size(); }
  bool same_shape(FeatureMap const &o) const { return channels == o.channels && rows == o.rows && cols == o.cols; }

  bool operator==(FeatureMap const &) const = default;

  int channels = 0;
  int rows = 0;
  int cols = 0;
  std::vector<cplx> data;
};

inline cplx inner(FeatureMap const &a, FeatureMap const &b) {
  if (!a.same_shape(b)) throw DimensionError("feature map shape mismatch");
  return omodl::inner(std::span<cplx const>(a.data), std::span<cplx const>(b.data));
}

/// Complex kernel tensor (out, in, k, k), row-major.
struct ConvKernel {
  ConvKernel() = default;
  ConvKernel(int out_ch, int in_ch, int k)
    : out_ch(out_ch), in_ch(in_ch), k(k), w(static_cast<std::size_t>(out_ch) * in_ch * k * k) {
    if (out_ch <= 0 || in_ch <= 0 || k <= 0 || k % 2 == 0) throw ConfigError("kernel dims must be positive and k odd");
  }

  cplx &at(int o, int i, int a, int b) { return w[((static_cast<std::size_t>(o) * in_ch + i) * k + a) * k + b]; }
  cplx at(int o, int i, int a, int b) const { return w[((static_cast<std::size_t>(o) * in_ch + i) * k + a) * k + b]; }

  Eigen::Map<detail::RowMatrix const> matrix() const {
    return {w.data(), out_ch, static_cast<Eigen::Index>(in_ch) * k * k};
  }
  Eigen::Map<detail::RowMatrix> matrix() { return {w.data(), out_ch, static_cast<Eigen::Index>(in_ch) * k * k}; }

  bool operator==(ConvKernel const &) const = default;

  int out_ch = 0, in_ch = 0, k = 0;
  std::vector<cplx> w;
};

inline FeatureMap from_matrix(detail::RowMatrix const &m, int rows, int cols) {
  FeatureMap out(static_cast<int>(m.rows()), rows, cols);
  std::copy(m.data(), m.data() + m.size(), out.data.begin());
  return out;
}

inline Eigen::Map<detail::RowMatrix const> as_matrix(FeatureMap const &x) {
  return {x.data.data(), x.channels, static_cast<Eigen::Index>(x.plane_size())};
}

/// Valid complex convolution: out[o] = sum_i K[o][i] * x[i]; spatial dims shrink by k-1.
inline FeatureMap complex_conv_valid(FeatureMap const &x, ConvKernel const &kern) {
  if (x.channels != kern.in_ch) throw DimensionError("conv input channels do not match kernel");
  if (x.rows < kern.k || x.cols < kern.k) throw DimensionError("conv input smaller than kernel");
  auto patches = detail::im2col(x.data.data(), x.channels, x.rows, x.cols, kern.k, kern.k);
  detail::RowMatrix y = kern.matrix() * patches;
  return from_matrix(y, x.rows - kern.k + 1, x.cols - kern.k + 1);
}

/// Adjoint of complex_conv_valid with the same kernel: full convolution with
/// the conjugate-flipped, channel-transposed kernel; dims grow by k-1.
inline FeatureMap complex_deconv_full(FeatureMap const &y, ConvKernel const &kern) {
  if (y.channels != kern.out_ch) throw DimensionError("deconv input channels do not match mirror kernel");
  detail::RowMatrix cols = kern.matrix().adjoint() * as_matrix(y);
  FeatureMap out(kern.in_ch, y.rows + kern.k - 1, y.cols + kern.k - 1);
  detail::col2im_add(cols, kern.in_ch, out.rows, out.cols, kern.k, kern.k, out.data.data());
  return out;
}

/// Gradients of a conv layer given the upstream gradient g_out
/// (convention: d/dRe + i d/dIm). Accumulates into g_kernel.
inline FeatureMap conv_backward(FeatureMap const &x, ConvKernel const &kern, FeatureMap const &g_out, ConvKernel *g_kernel) {
  if (g_kernel != nullptr) {
    auto patches = detail::im2col(x.data.data(), x.channels, x.rows, x.cols, kern.k, kern.k);
    g_kernel->matrix().noalias() += as_matrix(g_out) * patches.adjoint();
  }
  return complex_deconv_full(g_out, kern);
}

/// Gradients of a deconv layer (input y, mirror kernel) given g_out.
inline FeatureMap deconv_backward(FeatureMap const &y, ConvKernel const &kern, FeatureMap const &g_out, ConvKernel *g_kernel) {
  auto patches = detail::im2col(g_out.data.data(), g_out.channels, g_out.rows, g_out.cols, kern.k, kern.k);
  if (g_kernel != nullptr) {
    g_kernel->matrix().noalias() += as_matrix(y) * patches.adjoint();
  }
  detail::RowMatrix g_in = kern.matrix() * patches;
  return from_matrix(g_in, y.rows, y.cols);
}

inline constexpr double bn_variance_eps = 1e-5;

/// Affine parameters and running statistics of one BN layer; real and
/// imaginary parts are normalized independently per channel.
struct BatchNorm {
  BatchNorm() = default;
  explicit BatchNorm(int channels)
    : scale_re(channels, 1.0), scale_im(channels, 1.0), shift_re(channels, 0.0), shift_im(channels, 0.0),
      mean_re(channels, 0.0), mean_im(channels, 0.0), var_re(channels, 1.0), var_im(channels, 1.0) {}

  int channels() const { return static_cast<int>(scale_re.size()); }
  bool operator==(BatchNorm const &) const = default;

  std::vector<double> scale_re, scale_im, shift_re, shift_im;
  std::vector<double> mean_re, mean_im, var_re, var_im;
};

enum class Mode { train, eval };

/// What bn_tanh needs for its backward pass.
struct BnTanhCache {
  FeatureMap xhat;   // normalized input
  FeatureMap out;    // tanh output
  std::vector<double> inv_std_re, inv_std_im;
  std::vector<double> batch_mean_re, batch_mean_im, batch_var_re, batch_var_im;
  Mode mode = Mode::train;
};

/// Per-channel normalization of real and imaginary parts, affine, then tanh
/// of each part. Train mode normalizes with the statistics of this input.
inline FeatureMap bn_tanh(FeatureMap const &x, BatchNorm const &bn, Mode mode, BnTanhCache *cache = nullptr) {
  if (x.channels != bn.channels()) throw DimensionError("batch norm channel mismatch");
  int const C = x.channels;
  auto const M = static_cast<double>(x.plane_size());
  BnTanhCache local;
  BnTanhCache &c = cache != nullptr ? *cache : local;
  c.mode = mode;
  c.xhat = FeatureMap(C, x.rows, x.cols);
  c.out = FeatureMap(C, x.rows, x.cols);
  c.inv_std_re.assign(C, 0.0);
  c.inv_std_im.assign(C, 0.0);
  c.batch_mean_re.assign(C, 0.0);
  c.batch_mean_im.assign(C, 0.0);
  c.batch_var_re.assign(C, 0.0);
  c.batch_var_im.assign(C, 0.0);
  for (int ch = 0; ch < C; ++ch) {
    cplx const *in = x.plane(ch);
    double mre, mim, vre, vim;
    if (mode == Mode::train) {
      double sre = 0, sim = 0;
      for (std::size_t i = 0; i < x.plane_size(); ++i) {
        sre += in[i].real();
        sim += in[i].imag();
      }
      mre = sre / M;
      mim = sim / M;
      double qre = 0, qim = 0;
      for (std::size_t i = 0; i < x.plane_size(); ++i) {
        qre += (in[i].real() - mre) * (in[i].real() - mre);
        qim += (in[i].imag() - mim) * (in[i].imag() - mim);
      }
      vre = qre / M;
      vim = qim / M;
    } else {
      mre = bn.mean_re[ch];
      mim = bn.mean_im[ch];
      vre = bn.var_re[ch];
      vim = bn.var_im[ch];
    }
    c.batch_mean_re[ch] = mre;
    c.batch_mean_im[ch] = mim;
    c.batch_var_re[ch] = vre;
    c.batch_var_im[ch] = vim;
    double const ire = 1.0 / std::sqrt(vre + bn_variance_eps);
    double const iim = 1.0 / std::sqrt(vim + bn_variance_eps);
    c.inv_std_re[ch] = ire;
    c.inv_std_im[ch] = iim;
    cplx *xh = c.xhat.plane(ch);
    cplx *o = c.out.plane(ch);
    for (std::size_t i = 0; i < x.plane_size(); ++i) {
      double const hre = (in[i].real() - mre) * ire;
      double const him = (in[i].imag() - mim) * iim;
      xh[i] = cplx(hre, him);
      o[i] = cplx(std::tanh(bn.scale_re[ch] * hre + bn.shift_re[ch]), std::tanh(bn.scale_im[ch] * him + bn.shift_im[ch]));
    }
  }
  return c.out;
}

/// Backward of bn_tanh; accumulates affine-parameter gradients into the
/// scale/shift fields of g_bn.
inline FeatureMap bn_tanh_backward(BnTanhCache const &c, BatchNorm const &bn, FeatureMap const &g_out, BatchNorm *g_bn) {
  int const C = g_out.channels;
  auto const M = static_cast<double>(g_out.plane_size());
  FeatureMap g_in(C, g_out.rows, g_out.cols);
  std::vector<double> dre(g_out.plane_size()), dim(g_out.plane_size());
  for (int ch = 0; ch < C; ++ch) {
    cplx const *g = g_out.plane(ch);
    cplx const *o = c.out.plane(ch);
    cplx const *xh = c.xhat.plane(ch);
    double sdre = 0, sdim = 0, sxre = 0, sxim = 0, gsre = 0, gsim = 0, gbre = 0, gbim = 0;
    for (std::size_t i = 0; i < g_out.plane_size(); ++i) {
      double const are = g[i].real() * (1.0 - o[i].real() * o[i].real());
      double const aim = g[i].imag() * (1.0 - o[i].imag() * o[i].imag());
      gsre += are * xh[i].real();
      gsim += aim * xh[i].imag();
      gbre += are;
      gbim += aim;
      dre[i] = are * bn.scale_re[ch];
      dim[i] = aim * bn.scale_im[ch];
      sdre += dre[i];
      sdim += dim[i];
      sxre += dre[i] * xh[i].real();
      sxim += dim[i] * xh[i].imag();
    }
    if (g_bn != nullptr) {
      g_bn->scale_re[ch] += gsre;
      g_bn->scale_im[ch] += gsim;
      g_bn->shift_re[ch] += gbre;
      g_bn->shift_im[ch] += gbim;
    }
    cplx *gi = g_in.plane(ch);
    double const ire = c.inv_std_re[ch], iim = c.inv_std_im[ch];
    for (std::size_t i = 0; i < g_out.plane_size(); ++i) {
      double re, im;
      if (c.mode == Mode::train) {
        re = ire / M * (M * dre[i] - sdre - xh[i].real() * sxre);
        im = iim / M * (M * dim[i] - sdim - xh[i].imag() * sxim);
      } else {
        re = ire * dre[i];
        im = iim * dim[i];
      }
      gi[i] = cplx(re, im);
    }
  }
  return g_in;
}

/// Exponential moving average of running statistics toward the batch statistics in `c`.
inline void update_running_stats(BatchNorm &bn, BnTanhCache const &c, double momentum) {
  for (int ch = 0; ch < bn.channels(); ++ch) {
    bn.mean_re[ch] = (1.0 - momentum) * bn.mean_re[ch] + momentum * c.batch_mean_re[ch];
    bn.mean_im[ch] = (1.0 - momentum) * bn.mean_im[ch] + momentum * c.batch_mean_im[ch];
    bn.var_re[ch] = (1.0 - momentum) * bn.var_re[ch] + momentum * c.batch_var_re[ch];
    bn.var_im[ch] = (1.0 - momentum) * bn.var_im[ch] + momentum * c.batch_var_im[ch];
  }
}

} // namespace omodl::net
