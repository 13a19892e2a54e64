#pragma once

#include "net/model.hpp"
#include "synth.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <limits>
#include <map>

namespace omodl {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 4;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::optional<double> grad_clip;
  double val_fraction = 0.1;
  double bn_momentum = 0.1;

  void validate() const {
    if (epochs <= 0 || batch_size <= 0) throw ConfigError("epochs and batch_size must be positive");
    if (!(lr > 0.0) || !(adam_eps > 0.0)) throw ConfigError("lr and adam_eps must be positive");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
      throw ConfigError("Adam betas must lie in (0,1)");
    }
    if (grad_clip && !(*grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in [0,1)");
  }
};

struct LossValue {
  double loss = 0.0;
  ComplexGrid grad;
};

/// Mean squared complex error; gradient 2 (x - ref) / count.
inline LossValue mse_loss(ComplexGrid const &recon, ComplexGrid const &ref) {
  recon.require_same(ref);
  auto const n = static_cast<double>(recon.size());
  LossValue out{0.0, ComplexGrid(recon.rows(), recon.cols())};
  for (std::size_t i = 0; i < recon.size(); ++i) {
    cplx const d = recon[i] - ref[i];
    out.loss += std::norm(d);
    out.grad[i] = 2.0 * d / n;
  }
  out.loss /= n;
  return out;
}

inline std::vector<double> flatten_trainable(net::NetworkParams const &p) {
  std::vector<double> out;
  p.for_each_trainable([&](std::string const &, std::span<double const> v) { out.insert(out.end(), v.begin(), v.end()); });
  return out;
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
  bool operator==(AdamState const &) const = default;
};

/// One Adam update at step t (>= 1) on a flat parameter vector.
inline void adam_step(std::span<double> params, std::span<double const> grads, AdamState &st, TrainConfig const &cfg,
                      std::int64_t t) {
  if (t < 1) throw ConfigError("Adam step index starts at 1");
  if (params.size() != grads.size() || st.m.size() != params.size() || st.v.size() != params.size()) {
    throw DimensionError("Adam state size mismatch");
  }
  double const c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
  double const c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = cfg.adam_beta1 * st.m[i] + (1.0 - cfg.adam_beta1) * grads[i];
    st.v[i] = cfg.adam_beta2 * st.v[i] + (1.0 - cfg.adam_beta2) * grads[i] * grads[i];
    params[i] -= cfg.lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + cfg.adam_eps);
  }
  st.t = t;
}

inline void adam_step(net::NetworkParams &p, std::span<double const> g, AdamState &st, TrainConfig const &cfg,
                      std::int64_t t) {
  std::vector<double> flat = flatten_trainable(p);
  adam_step(flat, g, st, cfg, t);
  std::size_t off = 0;
  p.for_each_trainable([&](std::string const &, std::span<double> v) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off), flat.begin() + static_cast<std::ptrdiff_t>(off + v.size()), v.begin());
    off += v.size();
  });
}

inline void adam_step(net::NetworkParams &p, net::NetworkParams const &g, AdamState &st, TrainConfig const &cfg,
                      std::int64_t t) {
  adam_step(p, flatten_trainable(g), st, cfg, t);
}

struct Checkpoint {
  net::NetworkConfig net;
  net::NetworkParams params;
  AdamState adam;
  int epoch = 0;
  std::uint64_t seed = 0;
  double val_mse = 0.0;
};

inline constexpr char const *checkpoint_separator = "---BLOB---";

/// Text manifest of key=value lines, the separator line, then a
/// little-endian float64 blob of the tensors in manifest order.
inline void save_checkpoint(std::filesystem::path const &path, Checkpoint const &ck) {
  std::vector<std::pair<std::string, std::span<double const>>> tensors;
  ck.params.for_each_trainable([&](std::string const &n, std::span<double const> v) { tensors.emplace_back(n, v); });
  ck.params.for_each_running([&](std::string const &n, std::span<double const> v) { tensors.emplace_back(n, v); });
  tensors.emplace_back("adam.m", ck.adam.m);
  tensors.emplace_back("adam.v", ck.adam.v);

  auto os = io::detail::open_out(path);
  os << "format=omodl-checkpoint\nversion=1\n";
  os << "arch=" << net::to_string(ck.net.arch) << "\n";
  os << "depth=" << ck.net.depth << "\nchannels=" << ck.net.channels << "\nkernel=" << ck.net.kernel << "\n";
  os << "unroll_iters=" << ck.net.unroll_iters << "\nin_channels=" << ck.net.in_channels << "\n";
  os << "linear=" << (ck.net.linear ? 1 : 0) << "\n";
  os << "epoch=" << ck.epoch << "\nseed=" << ck.seed << "\nadam_t=" << ck.adam.t << "\n";
  os << "val_mse=" << format_double(ck.val_mse) << "\n";
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    os << "tensor" << i << "=" << tensors[i].first << ":" << tensors[i].second.size() << "\n";
  }
  os << checkpoint_separator << "\n";
  for (auto const &t : tensors) {
    for (double v : t.second) io::detail::put_f64(os, v);
  }
  if (!os) throw Error("write failed: " + path.string());
}

inline Checkpoint load_checkpoint(std::filesystem::path const &path) {
  auto is = io::detail::open_in(path);
  std::map<std::string, std::string> kv;
  std::vector<std::pair<std::string, std::size_t>> declared;
  std::string line;
  bool separated = false;
  while (std::getline(is, line)) {
    if (line == checkpoint_separator) {
      separated = true;
      break;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("bad checkpoint line: " + line);
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key.rfind("tensor", 0) == 0) {
      auto colon = val.rfind(':');
      if (colon == std::string::npos) throw FormatError("bad tensor declaration: " + line);
      declared.emplace_back(val.substr(0, colon), std::stoull(val.substr(colon + 1)));
    } else {
      kv[key] = val;
    }
  }
  if (!separated) throw FormatError("checkpoint has no blob separator");
  auto get = [&](std::string const &k) -> std::string const & {
    auto it = kv.find(k);
    if (it == kv.end()) throw FormatError("checkpoint missing key " + k);
    return it->second;
  };
  if (get("format") != "omodl-checkpoint" || get("version") != "1") throw FormatError("unsupported checkpoint format");

  Checkpoint ck;
  try {
    ck.net.arch = net::parse_arch(get("arch"));
    ck.net.depth = std::stoi(get("depth"));
    ck.net.channels = std::stoi(get("channels"));
    ck.net.kernel = std::stoi(get("kernel"));
    ck.net.unroll_iters = std::stoi(get("unroll_iters"));
    ck.net.in_channels = std::stoi(get("in_channels"));
    ck.net.linear = get("linear") == "1";
    ck.epoch = std::stoi(get("epoch"));
    ck.seed = std::stoull(get("seed"));
    ck.adam.t = std::stoll(get("adam_t"));
    ck.val_mse = std::stod(get("val_mse"));
  } catch (std::logic_error const &e) {
    throw FormatError(std::string("bad checkpoint value: ") + e.what());
  }
  ck.net.validate();
  ck.params = net::NetworkParams::zeros(ck.net);
  std::vector<std::pair<std::string, std::span<double>>> expected;
  ck.params.for_each_trainable([&](std::string const &n, std::span<double> v) { expected.emplace_back(n, v); });
  ck.params.for_each_running([&](std::string const &n, std::span<double> v) { expected.emplace_back(n, v); });
  std::size_t const count = ck.params.trainable_count();
  ck.adam = AdamState{std::vector<double>(count), std::vector<double>(count), ck.adam.t};
  expected.emplace_back("adam.m", ck.adam.m);
  expected.emplace_back("adam.v", ck.adam.v);
  if (declared.size() != expected.size()) throw FormatError("checkpoint tensor list does not match config");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (declared[i].first != expected[i].first || declared[i].second != expected[i].second.size()) {
      throw FormatError("checkpoint tensor " + declared[i].first + " does not match config");
    }
    for (double &v : expected[i].second) v = io::detail::get_f64(is);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint blob");
  return ck;
}

struct EpochLog {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

inline void write_loss_log(std::filesystem::path const &path, std::vector<EpochLog> const &log) {
  auto os = io::detail::open_out(path);
  os << "epoch,train_mse,val_mse\n";
  for (auto const &e : log) os << e.epoch << "," << format_double(e.train_mse) << "," << format_double(e.val_mse) << "\n";
  if (!os) throw Error("write failed: " + path.string());
}

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
  double initial_val_mse = 0.0;
  std::vector<std::size_t> validation_indices;
};

/// Reference image and measurements of one training example.
struct Example {
  ComplexGrid image;
  KSpaceImage measured;
  SamplingMask mask;
};

inline Example make_example(Sample const &s) { return {inverse_dft(s.reference), s.measured, s.mask}; }

inline double evaluate_mse(std::vector<Example> const &set, std::vector<std::size_t> const &idx, net::NetworkParams const &p,
                           net::NetworkConfig const &cfg) {
  if (idx.empty()) return 0.0;
  double s = 0.0;
  for (auto i : idx) {
    auto out = net::unrolled_forward(set[i].measured, set[i].mask, p, cfg, net::Mode::eval);
    s += mse_loss(out.image, set[i].image).loss;
  }
  return s / static_cast<double>(idx.size());
}

inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  CounterRng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  return perm;
}

using EpochCallback = std::function<void(EpochLog const &, double seconds)>;

/// Mini-batch Adam on the image-domain MSE. Gradients are accumulated over a
/// batch in index order and averaged. Validation uses eval-mode BN.
inline TrainResult train(std::vector<Example> const &data, net::NetworkConfig const &net_cfg, TrainConfig const &cfg,
                         EpochCallback const &on_epoch = {}) {
  cfg.validate();
  if (data.empty()) throw ConfigError("training set is empty");
  for (auto const &e : data) {
    e.image.require_same(data.front().image);
    e.measured.require_same(data.front().image);
  }
  net_cfg.validate_grid(data.front().image.rows(), data.front().image.cols());

  auto split = seeded_permutation(data.size(), derive_seed(cfg.seed, "split"));
  auto const n_val = data.size() > 1 ? static_cast<std::size_t>(std::ceil(cfg.val_fraction * static_cast<double>(data.size()))) : 0;
  std::vector<std::size_t> val(split.begin(), split.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(split.begin() + static_cast<std::ptrdiff_t>(n_val), split.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  std::vector<std::size_t> const &monitor = val.empty() ? tr : val;

  net::NetworkParams params = net::NetworkParams::initialize(net_cfg, derive_seed(cfg.seed, "init"));
  AdamState adam = AdamState::zeros(params.trainable_count());
  TrainResult res;
  res.validation_indices = val;
  res.initial_val_mse = evaluate_mse(data, monitor, params, net_cfg);
  res.best = Checkpoint{net_cfg, params, adam, 0, cfg.seed, res.initial_val_mse};

  std::int64_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto const t0 = std::chrono::steady_clock::now();
    auto order = seeded_permutation(tr.size(), derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t const stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<double> flat(adam.m.size(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        Example const &ex = data[tr[order[k]]];
        auto out = net::unrolled_forward(ex.measured, ex.mask, params, net_cfg, net::Mode::train);
        auto lv = mse_loss(out.image, ex.image);
        if (!std::isfinite(lv.loss)) {
          throw Error("non-finite training loss at epoch " + std::to_string(epoch) + ", sample " + std::to_string(tr[order[k]]));
        }
        epoch_loss += lv.loss;
        auto g = flatten_trainable(net::unrolled_backward(out.trace, lv.grad, params));
        for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += g[i];
        net::update_running_stats(params, out.trace, cfg.bn_momentum);
      }
      double const inv = 1.0 / static_cast<double>(stop - start);
      double norm = 0.0;
      for (double &v : flat) {
        v *= inv;
        norm += v * v;
      }
      norm = std::sqrt(norm);
      if (!std::isfinite(norm)) throw Error("non-finite gradient at epoch " + std::to_string(epoch));
      if (cfg.grad_clip && norm > *cfg.grad_clip) {
        for (double &v : flat) v *= *cfg.grad_clip / norm;
      }
      adam_step(params, flat, adam, cfg, ++step);
    }
    EpochLog entry{epoch, epoch_loss / static_cast<double>(tr.size()), evaluate_mse(data, monitor, params, net_cfg)};
    if (!std::isfinite(entry.val_mse)) throw Error("non-finite validation loss at epoch " + std::to_string(epoch));
    res.log.push_back(entry);
    if (entry.val_mse < res.best.val_mse) res.best = Checkpoint{net_cfg, params, adam, epoch, cfg.seed, entry.val_mse};
    if (on_epoch) on_epoch(entry, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return res;
}

/// Hidden width of the image-domain network whose trainable count is closest
/// to that of `reference` (ties go to the smaller width).
inline net::NetworkConfig matched_image_domain_config(net::NetworkConfig const &reference) {
  std::size_t const target = net::NetworkParams::zeros(reference).trainable_count();
  net::NetworkConfig best = reference;
  best.arch = net::Arch::image;
  best.in_channels = 1;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int c = 1; c <= 4 * reference.channels; ++c) {
    net::NetworkConfig cand = best;
    cand.channels = c;
    double const gap = std::abs(static_cast<double>(net::NetworkParams::zeros(cand).trainable_count()) - static_cast<double>(target));
    if (gap < best_gap) {
      best_gap = gap;
      best.channels = c;
    }
  }
  return best;
}

inline TrainResult train_image_domain_baseline(std::vector<Example> const &data, net::NetworkConfig const &omodl_cfg,
                                               TrainConfig const &cfg, EpochCallback const &on_epoch = {}) {
  return train(data, matched_image_domain_config(omodl_cfg), cfg, on_epoch);
}

} // namespace omodl
