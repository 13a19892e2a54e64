#pragma once

#include "../fft.hpp"
#include "../kspace.hpp"
#include "layers.hpp"

#include <functional>
#include <optional>

namespace omodl::net {

/// kspace: denoiser on the two gradient channels of k-space (O-MoDL).
/// image: denoiser on the single-channel complex image (MoDL-style baseline).
enum class Arch { kspace, image };

inline std::string to_string(Arch a) { return a == Arch::kspace ? "omodl" : "image-domain"; }

inline Arch parse_arch(std::string const &s) {
  if (s == "omodl" || s == "kspace") return Arch::kspace;
  if (s == "image-domain" || s == "image") return Arch::image;
  throw ConfigError("unknown architecture: " + s);
}

struct NetworkConfig {
  int depth = 5;
  int channels = 16;
  int kernel = 3;
  int unroll_iters = 5;
  int in_channels = 2;
  /// Drops every BN+tanh, leaving a purely linear conv/deconv stack.
  bool linear = false;
  Arch arch = Arch::kspace;

  static NetworkConfig for_arch(Arch a) {
    NetworkConfig c;
    c.arch = a;
    c.in_channels = a == Arch::kspace ? 2 : 1;
    return c;
  }

  int bn_layers() const { return linear ? 0 : 2 * depth - 1; }

  void validate() const {
    if (depth <= 0 || channels <= 0 || unroll_iters < 0) throw ConfigError("depth and channels must be positive");
    if (kernel <= 0 || kernel % 2 == 0) throw ConfigError("kernel must be odd and positive");
    if (in_channels != (arch == Arch::kspace ? 2 : 1)) throw ConfigError("in_channels does not match architecture");
  }

  void validate_grid(int rows, int cols) const {
    validate();
    if (depth * (kernel - 1) >= std::min(rows, cols)) {
      throw DimensionError("grid " + std::to_string(rows) + "x" + std::to_string(cols) + " too small for " +
                           std::to_string(depth) + " valid convolutions");
    }
  }

  bool operator==(NetworkConfig const &) const = default;
};

struct NetworkParams {
  std::vector<ConvKernel> kernels;
  std::vector<BatchNorm> bn;
  /// beta = exp(dc_weight_logit).
  double dc_weight_logit = 0.0;

  double beta() const { return std::exp(dc_weight_logit); }

  static NetworkParams zeros(NetworkConfig const &cfg) {
    cfg.validate();
    NetworkParams p;
    for (int l = 0; l < cfg.depth; ++l) {
      p.kernels.emplace_back(cfg.channels, l == 0 ? cfg.in_channels : cfg.channels, cfg.kernel);
    }
    for (int l = 0; l < cfg.bn_layers(); ++l) p.bn.emplace_back(cfg.channels);
    p.for_each_trainable([](std::string const &, std::span<double> v) { std::fill(v.begin(), v.end(), 0.0); });
    return p;
  }

  /// Gaussian kernels with std (fan_in * k^2)^(-1/2) on both parts, BN scale 1 / shift 0, beta = 1.
  static NetworkParams initialize(NetworkConfig const &cfg, std::uint64_t seed) {
    NetworkParams p = zeros(cfg);
    for (std::size_t l = 0; l < p.kernels.size(); ++l) {
      auto &k = p.kernels[l];
      double const sd = 1.0 / std::sqrt(static_cast<double>(k.in_ch) * k.k * k.k);
      CounterRng rng(derive_seed(seed, "kernel", l));
      for (auto &v : k.w) {
        double const re = sd * rng.normal();
        v = cplx(re, sd * rng.normal());
      }
    }
    for (auto &b : p.bn) {
      std::fill(b.scale_re.begin(), b.scale_re.end(), 1.0);
      std::fill(b.scale_im.begin(), b.scale_im.end(), 1.0);
      std::fill(b.var_re.begin(), b.var_re.end(), 1.0);
      std::fill(b.var_im.begin(), b.var_im.end(), 1.0);
    }
    // Zero scale on the last normalization layer: the denoiser starts as the identity.
    if (!p.bn.empty()) {
      auto &last = p.bn.back();
      std::fill(last.scale_re.begin(), last.scale_re.end(), 0.0);
      std::fill(last.scale_im.begin(), last.scale_im.end(), 0.0);
    }
    p.dc_weight_logit = 0.0;
    return p;
  }

  bool matches(NetworkConfig const &cfg) const {
    if (static_cast<int>(kernels.size()) != cfg.depth || static_cast<int>(bn.size()) != cfg.bn_layers()) return false;
    for (int l = 0; l < cfg.depth; ++l) {
      auto const &k = kernels[l];
      if (k.out_ch != cfg.channels || k.in_ch != (l == 0 ? cfg.in_channels : cfg.channels) || k.k != cfg.kernel) return false;
    }
    for (auto const &b : bn) {
      if (b.channels() != cfg.channels) return false;
    }
    return true;
  }

  /// Visits every trainable tensor as a flat span of reals (complex entries as re, im pairs).
  template <class F> void for_each_trainable(F &&f) { visit_trainable(*this, f); }
  template <class F> void for_each_trainable(F &&f) const { visit_trainable(*this, f); }

  /// Visits BN running statistics (not trained, but part of the model state).
  template <class F> void for_each_running(F &&f) { visit_running(*this, f); }
  template <class F> void for_each_running(F &&f) const { visit_running(*this, f); }

  std::size_t trainable_count() const {
    std::size_t n = 0;
    for_each_trainable([&](std::string const &, std::span<double const> v) { n += v.size(); });
    return n;
  }

  bool operator==(NetworkParams const &) const = default;

private:
  template <class Self, class F> static void visit_trainable(Self &self, F &f) {
    using D = std::conditional_t<std::is_const_v<Self>, double const, double>;
    for (std::size_t l = 0; l < self.kernels.size(); ++l) {
      auto &w = self.kernels[l].w;
      f("kernel" + std::to_string(l), std::span<D>(reinterpret_cast<D *>(w.data()), 2 * w.size()));
    }
    for (std::size_t l = 0; l < self.bn.size(); ++l) {
      auto &b = self.bn[l];
      std::string const tag = "bn" + std::to_string(l);
      f(tag + ".scale_re", std::span<D>(b.scale_re));
      f(tag + ".scale_im", std::span<D>(b.scale_im));
      f(tag + ".shift_re", std::span<D>(b.shift_re));
      f(tag + ".shift_im", std::span<D>(b.shift_im));
    }
    f("dc_weight_logit", std::span<D>(&self.dc_weight_logit, 1));
  }

  template <class Self, class F> static void visit_running(Self &self, F &f) {
    using D = std::conditional_t<std::is_const_v<Self>, double const, double>;
    for (std::size_t l = 0; l < self.bn.size(); ++l) {
      auto &b = self.bn[l];
      std::string const tag = "bn" + std::to_string(l);
      f(tag + ".mean_re", std::span<D>(b.mean_re));
      f(tag + ".mean_im", std::span<D>(b.mean_im));
      f(tag + ".var_re", std::span<D>(b.var_re));
      f(tag + ".var_im", std::span<D>(b.var_im));
    }
  }
};

/// Parameters used by one unrolled iteration. Normally both point at the same
/// object; pointing them at different copies unties the conv and deconv uses
/// of the shared kernels (used to check gradient accumulation).
struct IterationParams {
  NetworkParams const *main = nullptr;
  NetworkParams const *deconv = nullptr;
};

inline FeatureMap to_feature(GradientKSpace const &z) {
  FeatureMap m(2, z.rows(), z.cols());
  std::copy(z.x.storage().begin(), z.x.storage().end(), m.plane(0));
  std::copy(z.y.storage().begin(), z.y.storage().end(), m.plane(1));
  return m;
}

inline FeatureMap to_feature(ComplexGrid const &g) {
  FeatureMap m(1, g.rows(), g.cols());
  std::copy(g.storage().begin(), g.storage().end(), m.plane(0));
  return m;
}

inline ComplexGrid plane_grid(FeatureMap const &m, int c) {
  return {m.rows, m.cols, std::vector<cplx>(m.plane(c), m.plane(c) + m.plane_size())};
}

inline GradientKSpace to_gradient(FeatureMap const &m) {
  if (m.channels != 2) throw DimensionError("gradient k-space needs two channels");
  return {plane_grid(m, 0), plane_grid(m, 1)};
}

struct DenoiserTrace {
  std::vector<FeatureMap> inputs;
  std::vector<BnTanhCache> bn;
};

/// D(x) = x - N(x), N = n valid convs then n mirrored deconvs, BN+tanh after
/// every layer except the last deconv.
inline FeatureMap denoise(FeatureMap const &x, IterationParams ip, NetworkConfig const &cfg, Mode mode,
                          DenoiserTrace *trace = nullptr) {
  int const n = cfg.depth;
  if (x.channels != cfg.in_channels) throw DimensionError("denoiser input channel mismatch");
  if (n * (cfg.kernel - 1) >= std::min(x.rows, x.cols)) throw DimensionError("input too small for the conv stack");
  if (trace != nullptr) {
    trace->inputs.assign(2 * n, FeatureMap{});
    trace->bn.assign(cfg.bn_layers(), BnTanhCache{});
  }
  FeatureMap cur = x;
  for (int l = 0; l < 2 * n; ++l) {
    FeatureMap y = l < n ? complex_conv_valid(cur, ip.main->kernels[l])
                         : complex_deconv_full(cur, ip.deconv->kernels[2 * n - 1 - l]);
    if (trace != nullptr) trace->inputs[l] = std::move(cur);
    if (l < cfg.bn_layers()) {
      cur = bn_tanh(y, ip.main->bn[l], mode, trace != nullptr ? &trace->bn[l] : nullptr);
    } else {
      cur = std::move(y);
    }
  }
  FeatureMap out = x;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= cur.data[i];
  return out;
}

inline GradientKSpace denoiser_forward(GradientKSpace const &z, NetworkParams const &p, NetworkConfig const &cfg, Mode mode) {
  if (cfg.arch != Arch::kspace) throw ConfigError("gradient-domain denoiser needs the kspace architecture");
  if (!p.matches(cfg)) throw ConfigError("parameters do not match network config");
  return to_gradient(denoise(to_feature(z), {&p, &p}, cfg, mode));
}

enum class KernelUse { both, conv, deconv };

/// Restricts which parameter uses accumulate gradient; propagation is never restricted.
struct BackwardOptions {
  int only_iteration = -1;
  KernelUse kernel_use = KernelUse::both;
};

/// Reverse pass through denoise(); returns the gradient at the denoiser input.
inline FeatureMap denoise_backward(DenoiserTrace const &trace, IterationParams ip, NetworkConfig const &cfg,
                                   FeatureMap const &g_out, NetworkParams *grads, KernelUse use) {
  int const n = cfg.depth;
  FeatureMap g = g_out;
  for (auto &v : g.data) v = -v;
  for (int l = 2 * n - 1; l >= 0; --l) {
    if (l < cfg.bn_layers()) g = bn_tanh_backward(trace.bn[l], ip.main->bn[l], g, grads != nullptr ? &grads->bn[l] : nullptr);
    if (l < n) {
      ConvKernel *gk = grads != nullptr && use != KernelUse::deconv ? &grads->kernels[l] : nullptr;
      g = conv_backward(trace.inputs[l], ip.main->kernels[l], g, gk);
    } else {
      ConvKernel *gk = grads != nullptr && use != KernelUse::conv ? &grads->kernels[2 * n - 1 - l] : nullptr;
      g = deconv_backward(trace.inputs[l], ip.deconv->kernels[2 * n - 1 - l], g, gk);
    }
  }
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += g_out.data[i];
  return g;
}

/// Closed-form minimizer of ||A f - b||^2 + beta ||grad f - z||^2, per frequency.
inline KSpaceImage dc_block(GradientKSpace const &z, KSpaceImage const &b, SamplingMask const &mask, GradientWeights const &w,
                            double beta) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  mask.require_grid(b);
  require_weights(b, w);
  if (z.rows() != b.rows() || z.cols() != b.cols()) throw DimensionError("gradient grid does not match measurements");
  KSpaceImage f(b.rows(), b.cols());
  for (std::size_t i = 0; i < f.size(); ++i) {
    double const s = mask.sampled(i);
    double const den = s + beta * w.energy(i);
    if (den == 0.0) continue;
    f[i] = (s * b[i] + beta * (std::conj(w.wx[i]) * z.x[i] + std::conj(w.wy[i]) * z.y[i])) / den;
  }
  return f;
}

/// Image-domain variant: minimizer of ||A f - b||^2 + beta ||f - z_hat||^2.
inline KSpaceImage dc_block_image(KSpaceImage const &z_hat, KSpaceImage const &b, SamplingMask const &mask, double beta) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  mask.require_grid(b);
  z_hat.require_same(b);
  KSpaceImage f(b.rows(), b.cols());
  for (std::size_t i = 0; i < f.size(); ++i) {
    double const s = mask.sampled(i);
    f[i] = (s * b[i] + beta * z_hat[i]) / (s + beta);
  }
  return f;
}

struct UnrolledTrace {
  UnrolledTrace(NetworkConfig c, Mode m, KSpaceImage b_, SamplingMask mask_)
    : cfg(c), mode(m), b(std::move(b_)), mask(std::move(mask_)) {}

  NetworkConfig cfg;
  Mode mode;
  KSpaceImage b;
  SamplingMask mask;
  /// f[0] is the seed, f[t] the output of iteration t.
  std::vector<KSpaceImage> f;
  /// Denoiser outputs (gradient channels or the image plane) per iteration.
  std::vector<FeatureMap> z;
  std::vector<DenoiserTrace> den;
  std::vector<double> beta;

  int iterations() const { return static_cast<int>(den.size()); }
};

struct UnrolledOutput {
  KSpaceImage f_hat;
  ComplexGrid image;
  UnrolledTrace trace;
};

namespace detail {

inline void check_iteration_params(std::span<IterationParams const> ip, NetworkConfig const &cfg) {
  if (static_cast<int>(ip.size()) != cfg.unroll_iters) throw ConfigError("need one parameter set per iteration");
  for (auto const &p : ip) {
    if (p.main == nullptr || p.deconv == nullptr || !p.main->matches(cfg) || !p.deconv->matches(cfg)) {
      throw ConfigError("parameters do not match network config");
    }
  }
}

} // namespace detail

inline UnrolledOutput unrolled_forward(KSpaceImage const &b, SamplingMask const &mask, std::span<IterationParams const> ip,
                                       NetworkConfig const &cfg, Mode mode) {
  cfg.validate_grid(b.rows(), b.cols());
  mask.require_grid(b);
  detail::check_iteration_params(ip, cfg);
  GradientWeights const w(b.rows(), b.cols());
  KSpaceImage const zero_filled = apply_sampling(b, mask);

  UnrolledTrace tr(cfg, mode, b, mask);
  if (cfg.arch == Arch::kspace) {
    double const beta0 = cfg.unroll_iters > 0 ? ip[0].main->beta() : 1.0;
    tr.f.push_back(dc_block(gradient_transform(zero_filled, w), b, mask, w, beta0));
  } else {
    tr.f.push_back(zero_filled);
  }
  for (int t = 0; t < cfg.unroll_iters; ++t) {
    double const beta = ip[t].main->beta();
    DenoiserTrace dt;
    FeatureMap u = cfg.arch == Arch::kspace ? to_feature(gradient_transform(tr.f.back(), w)) : to_feature(inverse_dft(tr.f.back()));
    FeatureMap z = denoise(u, ip[t], cfg, mode, &dt);
    KSpaceImage next = cfg.arch == Arch::kspace ? dc_block(to_gradient(z), b, mask, w, beta)
                                                : dc_block_image(forward_dft(plane_grid(z, 0)), b, mask, beta);
    tr.f.push_back(std::move(next));
    tr.z.push_back(std::move(z));
    tr.den.push_back(std::move(dt));
    tr.beta.push_back(beta);
  }
  KSpaceImage f_hat = tr.f.back();
  ComplexGrid image = inverse_dft(f_hat);
  return {std::move(f_hat), std::move(image), std::move(tr)};
}

inline UnrolledOutput unrolled_forward(KSpaceImage const &b, SamplingMask const &mask, NetworkParams const &p,
                                       NetworkConfig const &cfg, Mode mode) {
  std::vector<IterationParams> ip(cfg.unroll_iters, IterationParams{&p, &p});
  return unrolled_forward(b, mask, ip, cfg, mode);
}

/// Recomputes the forward pass from the inputs recorded in a trace.
inline UnrolledOutput replay(UnrolledTrace const &tr, NetworkParams const &p) {
  return unrolled_forward(tr.b, tr.mask, p, tr.cfg, tr.mode);
}

/// Reverse-mode gradient of a real loss with respect to every trainable
/// parameter, given g_image = dL/dRe(image) + i dL/dIm(image). Kernel
/// gradients follow the same convention per complex entry.
inline NetworkParams unrolled_backward(UnrolledTrace const &tr, ComplexGrid const &g_image,
                                       std::span<IterationParams const> ip, BackwardOptions const &opt = {}) {
  NetworkConfig const &cfg = tr.cfg;
  detail::check_iteration_params(ip, cfg);
  if (tr.iterations() != cfg.unroll_iters) throw ConfigError("trace length does not match config");
  for (int t = 0; t < tr.iterations(); ++t) {
    if (tr.beta[t] != ip[t].main->beta()) throw ConfigError("trace was recorded with different parameters");
  }
  g_image.require_same(tr.b);
  GradientWeights const w(tr.b.rows(), tr.b.cols());
  NetworkParams grads = NetworkParams::zeros(cfg);

  KSpaceImage g_f = forward_dft(g_image);
  for (int t = cfg.unroll_iters - 1; t >= 0; --t) {
    bool const record = opt.only_iteration < 0 || opt.only_iteration == t;
    double const beta = tr.beta[t];
    KSpaceImage const &f_t = tr.f[t + 1];
    FeatureMap const &z = tr.z[t];
    FeatureMap g_z(z.channels, z.rows, z.cols);
    double g_theta = 0.0;
    if (cfg.arch == Arch::kspace) {
      for (std::size_t i = 0; i < f_t.size(); ++i) {
        double const s = tr.mask.sampled(i);
        double const en = w.energy(i);
        double const den = s + beta * en;
        if (den == 0.0) continue;
        cplx const gi = g_f[i] / den;
        g_z.plane(0)[i] = beta * w.wx[i] * gi;
        g_z.plane(1)[i] = beta * w.wy[i] * gi;
        cplx const proj = std::conj(w.wx[i]) * z.plane(0)[i] + std::conj(w.wy[i]) * z.plane(1)[i];
        g_theta += beta * std::real(std::conj(gi) * (proj - f_t[i] * en));
      }
    } else {
      KSpaceImage z_hat = forward_dft(plane_grid(z, 0));
      KSpaceImage g_zhat(f_t.rows(), f_t.cols());
      for (std::size_t i = 0; i < f_t.size(); ++i) {
        double const den = tr.mask.sampled(i) + beta;
        cplx const gi = g_f[i] / den;
        g_zhat[i] = beta * gi;
        g_theta += beta * std::real(std::conj(gi) * (z_hat[i] - f_t[i]));
      }
      ComplexGrid gz = inverse_dft(g_zhat);
      std::copy(gz.storage().begin(), gz.storage().end(), g_z.plane(0));
    }
    if (record) grads.dc_weight_logit += g_theta;

    FeatureMap g_u = denoise_backward(tr.den[t], ip[t], cfg, g_z, record ? &grads : nullptr, opt.kernel_use);
    if (cfg.arch == Arch::kspace) {
      g_f = gradient_adjoint(to_gradient(g_u), w);
    } else {
      g_f = forward_dft(plane_grid(g_u, 0));
    }
  }
  return grads;
}

inline NetworkParams unrolled_backward(UnrolledTrace const &tr, ComplexGrid const &g_image, NetworkParams const &p,
                                       BackwardOptions const &opt = {}) {
  std::vector<IterationParams> ip(tr.cfg.unroll_iters, IterationParams{&p, &p});
  return unrolled_backward(tr, g_image, ip, opt);
}

/// Folds the batch statistics recorded in a train-mode trace into the running statistics.
inline void update_running_stats(NetworkParams &p, UnrolledTrace const &tr, double momentum = 0.1) {
  if (tr.mode != Mode::train) return;
  for (auto const &dt : tr.den) {
    for (std::size_t l = 0; l < dt.bn.size(); ++l) update_running_stats(p.bn[l], dt.bn[l], momentum);
  }
}

} // namespace omodl::net
