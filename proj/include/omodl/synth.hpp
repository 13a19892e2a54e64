#pragma once

#include "annihilation.hpp"
#include "fft.hpp"
#include "io.hpp"
#include "rng.hpp"

#include <Eigen/SVD>

#include <array>
#include <cstdio>
#include <iostream>

namespace omodl {

/// Real trigonometric polynomial mu(x, y) = sum c[k] exp(i 2 pi (kx x + ky y)),
/// |kx| <= dx, |ky| <= dy, with c[-k] = conj(c[k]).
class TrigPolynomial {
public:
  TrigPolynomial(int dx, int dy) : dx_(checked(dx)), dy_(checked(dy)), coeffs_(2 * dx + 1, 2 * dy + 1) {}

  static TrigPolynomial random(int dx, int dy, CounterRng &rng) {
    TrigPolynomial p(dx, dy);
    for (int kx = -dx; kx <= dx; ++kx) {
      for (int ky = -dy; ky <= dy; ++ky) {
        double const s = 1.0 / (1.0 + std::hypot(kx, ky));
        p.set(kx, ky, s * cplx(rng.normal(), rng.normal()));
      }
    }
    return p;
  }

  /// Sets c[k] and c[-k] = conj(value); the DC term keeps only its real part.
  void set(int kx, int ky, cplx value) {
    if (kx == 0 && ky == 0) value = value.real();
    at(kx, ky) = value;
    at(-kx, -ky) = std::conj(value);
  }

  cplx coeff(int kx, int ky) const { return coeffs_(kx + dx_, ky + dy_); }

  double operator()(double x, double y) const {
    cplx s = 0;
    for (int kx = -dx_; kx <= dx_; ++kx) {
      for (int ky = -dy_; ky <= dy_; ++ky) {
        s += coeff(kx, ky) * std::polar(1.0, 2.0 * std::numbers::pi * (kx * x + ky * y));
      }
    }
    return s.real();
  }

  int dx() const { return dx_; }
  int dy() const { return dy_; }

private:
  static int checked(int degree) {
    if (degree < 0) throw ConfigError("degrees must be non-negative");
    return degree;
  }

  cplx &at(int kx, int ky) { return coeffs_(kx + dx_, ky + dy_); }

  int dx_, dy_;
  ComplexGrid coeffs_;
};

struct PhantomRegion {
  TrigPolynomial mu;
  double threshold;
  cplx amplitude;
};

struct PhantomSpec {
  int n = 64;
  std::vector<PhantomRegion> regions;
  std::uint64_t seed = 0;
  int redraws = 0;
};

/// Sum of amplitude * indicator(mu_r < threshold_r) on an n x n grid; pixel
/// (r, c) sits at (r/n, c/n) in the unit square.
inline ComplexGrid make_phantom(PhantomSpec const &spec) {
  if (spec.n < 16 || spec.n % 2 != 0) throw DimensionError("phantom grid must be even and >= 16");
  if (spec.regions.empty()) throw ConfigError("phantom needs at least one region");
  ComplexGrid img(spec.n, spec.n);
  for (int r = 0; r < spec.n; ++r) {
    for (int c = 0; c < spec.n; ++c) {
      double const x = static_cast<double>(r) / spec.n, y = static_cast<double>(c) / spec.n;
      for (auto const &reg : spec.regions) {
        if (reg.mu(x, y) < reg.threshold) img(r, c) += reg.amplitude;
      }
    }
  }
  return img;
}

inline double region_fraction(TrigPolynomial const &mu, double threshold, int n) {
  int inside = 0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) inside += mu(static_cast<double>(r) / n, static_cast<double>(c) / n) < threshold ? 1 : 0;
  }
  return static_cast<double>(inside) / (static_cast<double>(n) * n);
}

/// Random phantom: 1-3 regions bounded by level sets of trig polynomials of
/// degree <= 3. A region covering < 5% or > 95% of the grid is redrawn.
inline PhantomSpec random_phantom_spec(int n, std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, "phantom"));
  PhantomSpec spec;
  spec.n = n;
  spec.seed = seed;
  int const count = 1 + static_cast<int>(rng.below(3));
  while (static_cast<int>(spec.regions.size()) < count) {
    int const dx = 1 + static_cast<int>(rng.below(3));
    int const dy = 1 + static_cast<int>(rng.below(3));
    auto mu = TrigPolynomial::random(dx, dy, rng);
    double const threshold = rng.uniform(-0.5, 0.5);
    double const frac = region_fraction(mu, threshold, n);
    if (frac < 0.05 || frac > 0.95) {
      ++spec.redraws;
      continue;
    }
    double const mag = rng.uniform(0.3, 1.0);
    double const phase = rng.uniform(-0.5, 0.5);
    spec.regions.push_back({std::move(mu), threshold, std::polar(mag, phase)});
  }
  return spec;
}

/// Valid-convolution-with-h0 applied to both gradient channels, as a dense
/// matrix acting on the flattened k-space grid.
inline detail::CMatrix annihilation_operator_dense(ComplexGrid const &h0, int rows, int cols) {
  FilterSupport const s(h0.rows(), h0.cols(), rows, cols);
  GradientWeights const w(rows, cols);
  Eigen::Index const nv = static_cast<Eigen::Index>(s.valid_rows()) * s.valid_cols();
  detail::CMatrix m = detail::CMatrix::Zero(2 * nv, static_cast<Eigen::Index>(rows) * cols);
  for (int i = 0; i < s.valid_rows(); ++i) {
    for (int j = 0; j < s.valid_cols(); ++j) {
      for (int a = 0; a < s.f_rows; ++a) {
        for (int b = 0; b < s.f_cols; ++b) {
          int const p = (i + s.f_rows - 1 - a) * cols + (j + s.f_cols - 1 - b);
          m(i * s.valid_cols() + j, p) += h0(a, b) * w.wx[p];
          m(nv + i * s.valid_cols() + j, p) += h0(a, b) * w.wy[p];
        }
      }
    }
  }
  return m;
}

/// Orthonormal basis (columns) of the null space of annihilation_operator_dense,
/// from a dense SVD; singular values below rel_tol * largest count as zero.
inline detail::CMatrix annihilation_null_space(ComplexGrid const &h0, int rows, int cols, double rel_tol = 1e-10) {
  detail::CMatrix const m = annihilation_operator_dense(h0, rows, cols);
  Eigen::BDCSVD<detail::CMatrix> svd(m, Eigen::ComputeFullV);
  auto const &sv = svd.singularValues();
  double const top = sv.size() > 0 ? sv[0] : 0.0;
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv[rank] > rel_tol * top) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

struct AnnihilatedOracle {
  KSpaceImage f_hat;
  ComplexGrid h0;
  std::vector<std::array<double, 2>> points;
  /// ||S f|| / (sigma_max(S) ||f||) for the stacked annihilation operator S.
  double singular_ratio = 0.0;
  /// ||f - P f|| / ||f|| with P the projector onto the SVD null space of S.
  double null_space_residual = 0.0;
};

/// Exactly annihilated test signal. f_hat is a sum of `points` off-grid
/// exponentials exp(-i 2 pi (kx x_j + ky y_j)), i.e. the spectrum of a few
/// off-grid spikes. h0 is a random filter whose trig polynomial vanishes
/// together with its first derivatives at every x_j, which annihilates both
/// kx*f_hat and ky*f_hat over the valid region.
inline AnnihilatedOracle build_annihilated_oracle(int n, FilterSupport const &support, std::uint64_t seed, int points = 2) {
  if (n > 24 || n < 8 || n % 2 != 0) throw DimensionError("oracle grid must be even and in [8, 24]");
  if (support.grid_rows != n || support.grid_cols != n) throw DimensionError("support does not match oracle grid");
  int const fr = support.f_rows, fc = support.f_cols, d = support.dim();
  if (points <= 0) throw ConfigError("oracle needs at least one point");
  if (3 * points >= d) throw InfeasibleError("no annihilating filter of this support for " + std::to_string(points) + " points");

  CounterRng rng(derive_seed(seed, "oracle"));
  AnnihilatedOracle out;
  detail::CMatrix cons(3 * points, d);
  for (int j = 0; j < points; ++j) {
    double const x = rng.uniform(0.1, 0.9), y = rng.uniform(0.1, 0.9);
    out.points.push_back({x, y});
    for (int a = 0; a < fr; ++a) {
      for (int b = 0; b < fc; ++b) {
        double const tr = fr - 1 - a, tc = fc - 1 - b;
        cplx const e = std::polar(1.0, -2.0 * std::numbers::pi * (tr * x + tc * y));
        cons(3 * j, a * fc + b) = e;
        cons(3 * j + 1, a * fc + b) = tr * e;
        cons(3 * j + 2, a * fc + b) = tc * e;
      }
    }
  }
  Eigen::BDCSVD<detail::CMatrix> csvd(cons, Eigen::ComputeFullV);
  detail::CMatrix const basis = csvd.matrixV().rightCols(d - 3 * points);
  detail::CVector coef(basis.cols());
  for (Eigen::Index i = 0; i < coef.size(); ++i) coef[i] = cplx(rng.normal(), rng.normal());
  detail::CVector h = basis * coef;
  h.normalize();
  out.h0 = ComplexGrid(fr, fc, std::vector<cplx>(h.data(), h.data() + d));

  out.f_hat = KSpaceImage(n, n);
  for (int j = 0; j < points; ++j) {
    cplx const amp(rng.normal(), rng.normal());
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        double const kx = r - n / 2, ky = c - n / 2;
        out.f_hat(r, c) += amp * std::polar(1.0, -2.0 * std::numbers::pi * (kx * out.points[j][0] + ky * out.points[j][1]));
      }
    }
  }
  out.f_hat *= cplx(1.0 / norm2(out.f_hat));

  detail::CMatrix const s = annihilation_operator_dense(out.h0, n, n);
  Eigen::Map<detail::CVector const> fv(out.f_hat.storage().data(), static_cast<Eigen::Index>(out.f_hat.size()));
  Eigen::JacobiSVD<detail::CMatrix> ssvd(s);
  out.singular_ratio = (s * fv).norm() / ssvd.singularValues()[0];
  detail::CMatrix const ns = annihilation_null_space(out.h0, n, n);
  out.null_space_residual = (fv - ns * (ns.adjoint() * fv)).norm();
  if (out.null_space_residual > 1e-8) throw InfeasibleError("oracle signal is not in the annihilation null space");
  return out;
}

/// Variable-density Cartesian mask keeping exactly ceil(n/R) phase-encode
/// columns: the center_lines central ones plus a weighted draw without
/// replacement with density (1 + |k|/n)^-2.
inline SamplingMask make_mask(int n, double accel, int center_lines, std::uint64_t seed) {
  if (n <= 0 || n % 2 != 0) throw DimensionError("mask grid must be even");
  if (!(accel >= 1.0)) throw ConfigError("acceleration must be >= 1");
  int const keep = static_cast<int>(std::ceil(n / accel - 1e-12));
  if (center_lines < 2 || center_lines % 2 != 0 || center_lines > keep) {
    throw ConfigError("center_lines must be even, >= 2 and <= n/R");
  }
  std::vector<bool> cols(n, false);
  for (int c = n / 2 - center_lines / 2; c < n / 2 + center_lines / 2; ++c) cols[c] = true;
  CounterRng rng(derive_seed(seed, "mask"));
  std::vector<double> weight(n);
  for (int c = 0; c < n; ++c) {
    double const k = std::abs(c - n / 2);
    weight[c] = cols[c] ? 0.0 : std::pow(1.0 + k / n, -2.0);
  }
  for (int picked = center_lines; picked < keep; ++picked) {
    double total = 0.0;
    for (double v : weight) total += v;
    double target = rng.uniform() * total;
    int chosen = -1;
    for (int c = 0; c < n; ++c) {
      if (weight[c] == 0.0) continue;
      chosen = c;
      target -= weight[c];
      if (target < 0.0) break;
    }
    cols[chosen] = true;
    weight[chosen] = 0.0;
  }
  return SamplingMask::from_columns(n, cols);
}

/// Default number of fully sampled center columns: n/8 rounded to an even number, at least 2.
inline int default_center_lines(int n, double accel) {
  int lines = std::max(2, (n / 8) / 2 * 2);
  int const keep = static_cast<int>(std::ceil(n / accel - 1e-12));
  while (lines > keep) lines -= 2;
  return std::max(lines, 2);
}

/// Circular complex Gaussian noise (std sigma per complex sample) on sampled locations.
inline KSpaceImage add_noise(KSpaceImage const &k, SamplingMask const &mask, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw ConfigError("sigma must be non-negative");
  mask.require_grid(k);
  KSpaceImage out = k;
  if (sigma == 0.0) return out;
  CounterRng rng(derive_seed(seed, "noise"));
  double const s = sigma / std::sqrt(2.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double const re = rng.normal(), im = rng.normal();
    if (mask.kept(i)) out[i] += s * cplx(re, im);
  }
  return out;
}

enum class PhantomKind { piecewise, oracle };

struct DatasetOptions {
  int train_count = 1;
  int test_count = 1;
  int n = 64;
  double accel = 2.0;
  double sigma = 0.0;
  int center_lines = 0;  // 0 selects default_center_lines
  std::uint64_t seed = 0;
  PhantomKind kind = PhantomKind::piecewise;
  int oracle_filter = 5;
};

struct ManifestRecord {
  int index = 0;
  std::string kspace_path;
  std::string mask_path;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  std::filesystem::path dir;  // paths in records are relative to this
  std::vector<ManifestRecord> records;
  double acceleration = 1.0;
};

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_manifest(std::filesystem::path const &path, DatasetManifest const &m) {
  auto os = io::detail::open_out(path);
  os << "index,kspace_path,mask_path,sigma,seed\n";
  for (auto const &r : m.records) {
    os << r.index << "," << r.kspace_path << "," << r.mask_path << "," << format_double(r.sigma) << "," << r.seed << "\n";
  }
}

inline DatasetManifest read_manifest(std::filesystem::path const &path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "index,kspace_path,mask_path,sigma,seed") throw FormatError("bad manifest header");
  DatasetManifest m;
  m.dir = path.parent_path();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      auto pos = line.find(',', start);
      f.push_back(line.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (f.size() != 5) throw FormatError("manifest row needs 5 fields: " + line);
    ManifestRecord r;
    try {
      r.index = std::stoi(f[0]);
      r.kspace_path = f[1];
      r.mask_path = f[2];
      r.sigma = std::stod(f[3]);
      r.seed = std::stoull(f[4]);
    } catch (std::exception const &) {
      throw FormatError("unparsable manifest row: " + line);
    }
    m.records.push_back(std::move(r));
  }
  if (m.records.empty()) throw FormatError("manifest has no records: " + path.string());
  if (!std::filesystem::exists(m.dir / m.records.front().kspace_path)) throw FormatError("manifest references missing files");
  m.acceleration = io::read_mask(m.dir / m.records.front().mask_path).acceleration();
  return m;
}

/// One loaded sample: fully sampled reference plus its noisy measurement.
struct Sample {
  KSpaceImage reference;
  SamplingMask mask;
  KSpaceImage measured;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

inline Sample load_sample(DatasetManifest const &m, std::size_t i) {
  auto const &r = m.records.at(i);
  Sample s{io::read_kspace(m.dir / r.kspace_path), io::read_mask(m.dir / r.mask_path), {}, r.sigma, r.seed};
  s.mask.require_grid(s.reference);
  s.measured = add_noise(apply_sampling(s.reference, s.mask), s.mask, s.sigma, s.seed);
  return s;
}

inline KSpaceImage make_reference(DatasetOptions const &opt, std::uint64_t sample_seed) {
  if (opt.kind == PhantomKind::oracle) {
    FilterSupport const s(opt.oracle_filter, opt.oracle_filter, opt.n, opt.n);
    return build_annihilated_oracle(opt.n, s, sample_seed).f_hat;
  }
  auto spec = random_phantom_spec(opt.n, sample_seed);
  if (spec.redraws > 0) std::clog << "phantom seed " << sample_seed << ": redrew " << spec.redraws << " degenerate region(s)\n";
  return forward_dft(make_phantom(spec));
}

/// Writes train/ and test/ sample files plus train.csv and test.csv under dir.
/// Train and test samples come from disjoint named seed streams.
inline std::pair<DatasetManifest, DatasetManifest> build_dataset(std::filesystem::path const &dir, DatasetOptions const &opt) {
  if (opt.train_count < 1 || opt.test_count < 0) throw ConfigError("dataset needs at least one training sample");
  int const lines = opt.center_lines > 0 ? opt.center_lines : default_center_lines(opt.n, opt.accel);
  auto build = [&](std::string const &split, int count) {
    DatasetManifest m;
    m.dir = dir;
    m.acceleration = opt.accel;
    for (int i = 0; i < count; ++i) {
      std::uint64_t const s = derive_seed(opt.seed, split, static_cast<std::uint64_t>(i));
      char name[32];
      std::snprintf(name, sizeof name, "%06d", i);
      ManifestRecord r{i, split + "/" + name + "_kspace.oksp", split + "/" + name + "_mask.omsk", opt.sigma, s};
      io::write_kspace(dir / r.kspace_path, make_reference(opt, s));
      io::write_mask(dir / r.mask_path, make_mask(opt.n, opt.accel, lines, s));
      m.records.push_back(std::move(r));
    }
    write_manifest(dir / (split + ".csv"), m);
    return m;
  };
  auto train = build("train", opt.train_count);
  auto test = build("test", opt.test_count);
  return {std::move(train), std::move(test)};
}

} // namespace omodl
