#pragma once

#include "giraf.hpp"
#include "training.hpp"

#include <chrono>

namespace omodl {

inline constexpr double snr_cap_db = 300.0;

/// 20 log10(||ref|| / ||ref - recon||), capped at 300 dB.
inline double snr_db(ComplexGrid const &recon, ComplexGrid const &ref) {
  recon.require_same(ref);
  double const sig = norm2(ref);
  if (sig == 0.0) throw ConfigError("SNR needs a nonzero reference");
  double const err = norm2(recon - ref);
  if (err == 0.0) return snr_cap_db;
  return std::min(snr_cap_db, 20.0 * std::log10(sig / err));
}

struct ReconResult {
  std::string method;
  KSpaceImage f_hat;
  ComplexGrid image;
  double snr_db = 0.0;
  double runtime_ms = 0.0;
  std::string config;
};

namespace detail {

template <class F> std::pair<KSpaceImage, double> timed(F &&f) {
  auto const t0 = std::chrono::steady_clock::now();
  KSpaceImage out = f();
  auto const t1 = std::chrono::steady_clock::now();
  return {std::move(out), std::chrono::duration<double, std::milli>(t1 - t0).count()};
}

inline ReconResult finish(std::string method, std::pair<KSpaceImage, double> fr, std::string config) {
  ComplexGrid img = inverse_dft(fr.first);
  return {std::move(method), std::move(fr.first), std::move(img), 0.0, fr.second, std::move(config)};
}

} // namespace detail

inline KSpaceImage zero_filled_kspace(KSpaceImage const &b, SamplingMask const &mask) { return apply_sampling(b, mask); }

/// Per-frequency closed form of min ||A f - b||^2 + alpha ||grad f||^2.
inline KSpaceImage tikhonov_kspace(KSpaceImage const &b, SamplingMask const &mask, double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  mask.require_grid(b);
  GradientWeights const w(b.rows(), b.cols());
  KSpaceImage f(b.rows(), b.cols());
  for (std::size_t i = 0; i < f.size(); ++i) {
    double const s = mask.sampled(i);
    if (s == 0.0) continue;
    f[i] = b[i] / (s + alpha * w.energy(i));
  }
  return f;
}

inline ReconResult recon_zero_filled(KSpaceImage const &b, SamplingMask const &mask) {
  mask.require_grid(b);
  return detail::finish("zero-filled", detail::timed([&] { return zero_filled_kspace(b, mask); }), "");
}

inline ReconResult recon_tikhonov(KSpaceImage const &b, SamplingMask const &mask, double alpha) {
  return detail::finish("tikhonov", detail::timed([&] { return tikhonov_kspace(b, mask, alpha); }),
                        "alpha=" + format_double(alpha));
}

inline ReconResult recon_giraf(KSpaceImage const &b, SamplingMask const &mask, GirafConfig const &cfg) {
  auto fr = detail::timed([&] { return giraf_solve(b, mask, cfg).first; });
  return detail::finish("giraf", std::move(fr),
                        "lambda=" + format_double(cfg.lambda) + " iters=" + std::to_string(cfg.outer_iters) +
                            " p=" + format_double(cfg.schatten_p));
}

inline ReconResult recon_network(KSpaceImage const &b, SamplingMask const &mask, Checkpoint const &ck) {
  auto fr = detail::timed([&] { return net::unrolled_forward(b, mask, ck.params, ck.net, net::Mode::eval).f_hat; });
  return detail::finish(net::to_string(ck.net.arch), std::move(fr),
                        "channels=" + std::to_string(ck.net.channels) + " epoch=" + std::to_string(ck.epoch));
}

inline constexpr std::array<double, 6> tikhonov_alpha_grid{1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1};

/// Alpha from the grid maximizing mean SNR over `samples` (first one wins ties).
inline double tune_tikhonov_alpha(std::vector<Sample> const &samples) {
  if (samples.empty()) throw ConfigError("alpha search needs samples");
  double best_alpha = tikhonov_alpha_grid.front();
  double best = -std::numeric_limits<double>::infinity();
  for (double a : tikhonov_alpha_grid) {
    double s = 0.0;
    for (auto const &x : samples) s += snr_db(inverse_dft(tikhonov_kspace(x.measured, x.mask, a)), inverse_dft(x.reference));
    if (s > best) {
      best = s;
      best_alpha = a;
    }
  }
  return best_alpha;
}

struct MetricsRow {
  std::string method;
  double acceleration = 1.0;
  double sigma = 0.0;
  double snr_db = 0.0;
  double runtime_ms = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr char const *metrics_header = "method,acceleration,sigma,snr_db,runtime_ms,seed";

inline void write_metrics(std::filesystem::path const &path, std::vector<MetricsRow> const &rows) {
  auto os = io::detail::open_out(path);
  os << metrics_header << "\n";
  for (auto const &r : rows) {
    os << r.method << "," << format_double(r.acceleration) << "," << format_double(r.sigma) << "," << format_double(r.snr_db)
       << "," << format_double(r.runtime_ms) << "," << r.seed << "\n";
  }
  if (!os) throw Error("write failed: " + path.string());
}

inline std::vector<MetricsRow> read_metrics(std::filesystem::path const &path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != metrics_header) throw FormatError("bad metrics header");
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[6];
    for (auto &x : f) std::getline(ss, x, ',');
    try {
      rows.push_back({f[0], std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4]), std::stoull(f[5])});
    } catch (std::exception const &) {
      throw FormatError("bad metrics row: " + line);
    }
  }
  return rows;
}

/// Magnitude image normalized by its own maximum.
inline void export_magnitude(ComplexGrid const &img, std::filesystem::path const &path) {
  io::write_pgm(path, io::quantize_magnitude(img, io::max_magnitude(img)));
}

/// |recon - ref| on the same scale as the reference magnitude image.
inline void export_error_map(ComplexGrid const &recon, ComplexGrid const &ref, std::filesystem::path const &path) {
  io::write_pgm(path, io::quantize_magnitude(recon - ref, io::max_magnitude(ref)));
}

} // namespace omodl
