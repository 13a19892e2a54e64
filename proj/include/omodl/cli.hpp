#pragma once

#include "recon.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace omodl::cli {

struct Streams {
  std::ostream &out = std::cout;
  std::ostream &err = std::cerr;
};

namespace detail {

struct GirafFlags {
  double lambda = 1e-3;
  int iters = 15;
  int filter = 5;
  double schatten_p = 1.0;

  void add(CLI::App *app) {
    app->add_option("--lambda", lambda, "GIRAF regularization weight")->check(CLI::PositiveNumber);
    app->add_option("--giraf-iters", iters, "GIRAF outer iterations")->check(CLI::PositiveNumber);
    app->add_option("--filter", filter, "GIRAF filter size (odd)")->check(CLI::PositiveNumber);
    app->add_option("--schatten-p", schatten_p, "penalty exponent: 1 nuclear norm, 0 log-det")->check(CLI::Range(0.0, 1.0));
  }

  GirafConfig config() const {
    GirafConfig c;
    c.lambda = lambda;
    c.outer_iters = iters;
    c.filter_rows = c.filter_cols = filter;
    c.schatten_p = schatten_p;
    return c;
  }
};

inline std::filesystem::path manifest_path(std::filesystem::path const &data, std::string const &split) {
  if (std::filesystem::is_directory(data)) return data / (split + ".csv");
  return data;
}

inline std::vector<Sample> load_split(std::filesystem::path const &data, std::string const &split) {
  auto m = read_manifest(manifest_path(data, split));
  std::vector<Sample> out;
  for (std::size_t i = 0; i < m.records.size(); ++i) out.push_back(load_sample(m, i));
  return out;
}

inline ReconResult run_method(std::string const &method, Sample const &s, std::optional<Checkpoint> const &omodl_ck,
                              std::optional<Checkpoint> const &image_ck, double alpha, GirafFlags const &gf) {
  if (method == "zero-filled") return recon_zero_filled(s.measured, s.mask);
  if (method == "tikhonov") return recon_tikhonov(s.measured, s.mask, alpha);
  if (method == "giraf") return recon_giraf(s.measured, s.mask, gf.config());
  if (method == "omodl") {
    if (!omodl_ck) throw ConfigError("method omodl needs --checkpoint");
    return recon_network(s.measured, s.mask, *omodl_ck);
  }
  if (method == "image-domain") {
    if (!image_ck) throw ConfigError("method image-domain needs a checkpoint of that architecture");
    return recon_network(s.measured, s.mask, *image_ck);
  }
  throw ConfigError("unknown method " + method);
}

inline MetricsRow metrics_row(ReconResult const &r, Sample const &s, bool timing) {
  return {r.method, s.mask.acceleration(), s.sigma, snr_db(r.image, inverse_dft(s.reference)), timing ? r.runtime_ms : 0.0, s.seed};
}

inline Checkpoint load_arch_checkpoint(std::string const &path, net::Arch arch) {
  auto ck = load_checkpoint(path);
  if (ck.net.arch != arch) throw ConfigError(path + " holds a " + net::to_string(ck.net.arch) + " checkpoint");
  return ck;
}

std::vector<std::string> const methods{"zero-filled", "tikhonov", "giraf", "omodl", "image-domain"};

} // namespace detail

/// Runs one CLI invocation. Exit codes: 0 success, 1 usage error, 2 runtime error.
inline int dispatch(int argc, char const *const *argv, Streams io = {}) {
  CLI::App app{"Structured low-rank and unrolled k-space reconstruction"};
  app.require_subcommand(1);

  // generate
  DatasetOptions gen;
  std::string gen_out, gen_kind = "piecewise";
  int gen_test = -1;
  auto *g = app.add_subcommand("generate", "synthesize phantoms, masks and manifests");
  g->add_option("--count", gen.train_count, "training samples")->check(CLI::PositiveNumber);
  g->add_option("--test-count", gen_test, "test samples (default: same as --count)")->check(CLI::NonNegativeNumber);
  g->add_option("--grid", gen.n, "grid size N (even)")->check(CLI::PositiveNumber);
  g->add_option("--accel", gen.accel, "acceleration factor R")->check(CLI::Range(1.0, 64.0));
  g->add_option("--sigma", gen.sigma, "complex noise standard deviation")->check(CLI::NonNegativeNumber);
  g->add_option("--seed", gen.seed, "dataset seed");
  g->add_option("--center-lines", gen.center_lines, "fully sampled central columns (0: default)")->check(CLI::NonNegativeNumber);
  g->add_option("--kind", gen_kind, "phantom family")->check(CLI::IsMember({"piecewise", "oracle"}));
  g->add_option("--oracle-filter", gen.oracle_filter, "annihilating filter size for oracle phantoms");
  g->add_option("--out", gen_out, "output directory")->required();

  // train
  std::string tr_data, tr_out, tr_log, tr_arch = "omodl";
  net::NetworkConfig tr_net;
  TrainConfig tr_cfg;
  double tr_clip = 0.0;
  auto *t = app.add_subcommand("train", "train an unrolled network");
  t->add_option("--data", tr_data, "dataset directory or training manifest")->required();
  t->add_option("--arch", tr_arch, "architecture")->check(CLI::IsMember({"omodl", "image-domain"}));
  t->add_option("--epochs", tr_cfg.epochs)->check(CLI::PositiveNumber);
  t->add_option("--batch", tr_cfg.batch_size)->check(CLI::PositiveNumber);
  t->add_option("--lr", tr_cfg.lr)->check(CLI::PositiveNumber);
  t->add_option("--grad-clip", tr_clip, "global gradient norm clip (0: off)")->check(CLI::NonNegativeNumber);
  t->add_option("--depth", tr_net.depth)->check(CLI::PositiveNumber);
  t->add_option("--channels", tr_net.channels, "hidden channels of the k-space network; image-domain is matched to it")
      ->check(CLI::PositiveNumber);
  t->add_option("--kernel", tr_net.kernel)->check(CLI::PositiveNumber);
  t->add_option("--iters", tr_net.unroll_iters, "unrolled iterations K")->check(CLI::NonNegativeNumber);
  t->add_option("--seed", tr_cfg.seed);
  t->add_option("--out", tr_out, "checkpoint path")->required();
  t->add_option("--log", tr_log, "loss log CSV (default: <out>.loss.csv)");

  // recon / eval share method options
  std::string rc_data, rc_split = "test", rc_method = "zero-filled", rc_ck, rc_image_ck, rc_out, rc_kspace, rc_pgm, rc_err;
  std::size_t rc_index = 0;
  double rc_alpha = 0.0;
  bool rc_no_timing = false;
  detail::GirafFlags rc_giraf;
  auto *r = app.add_subcommand("recon", "reconstruct one sample");
  r->add_option("--data", rc_data, "dataset directory or manifest")->required();
  r->add_option("--split", rc_split)->check(CLI::IsMember({"train", "test"}));
  r->add_option("--index", rc_index, "sample index in the manifest");
  r->add_option("--method", rc_method)->check(CLI::IsMember(detail::methods));
  r->add_option("--checkpoint", rc_ck, "network checkpoint (omodl or image-domain)");
  r->add_option("--alpha", rc_alpha, "Tikhonov weight (default: tuned on the split)")->check(CLI::NonNegativeNumber);
  r->add_option("--out", rc_out, "metrics CSV")->required();
  r->add_option("--save-kspace", rc_kspace, "write the reconstructed k-space (OKSP)");
  r->add_option("--image", rc_pgm, "write the magnitude image (PGM)");
  r->add_option("--error-map", rc_err, "write |recon - reference| (PGM)");
  r->add_flag("--no-timing", rc_no_timing, "write runtime_ms as 0");
  rc_giraf.add(r);

  std::string ev_methods = "zero-filled,tikhonov";
  auto *e = app.add_subcommand("eval", "reconstruct every sample of a split and write metrics");
  e->add_option("--data", rc_data, "dataset directory or manifest")->required();
  e->add_option("--split", rc_split)->check(CLI::IsMember({"train", "test"}));
  e->add_option("--methods", ev_methods, "comma-separated methods");
  e->add_option("--checkpoint", rc_ck, "k-space network checkpoint");
  e->add_option("--baseline-checkpoint", rc_image_ck, "image-domain network checkpoint");
  e->add_option("--alpha", rc_alpha, "Tikhonov weight (default: tuned on the split)")->check(CLI::NonNegativeNumber);
  e->add_option("--out", rc_out, "metrics CSV")->required();
  e->add_flag("--no-timing", rc_no_timing, "write runtime_ms as 0");
  rc_giraf.add(e);

  std::string ex_in, ex_ref, ex_out;
  auto *x = app.add_subcommand("export", "write a magnitude or error image");
  x->add_option("--input", ex_in, "k-space file (OKSP)")->required();
  x->add_option("--reference", ex_ref, "reference k-space; switches to error-map mode");
  x->add_option("--out", ex_out, "PGM path")->required();

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &pe) {
    int const code = app.exit(pe, io.out, io.err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*g) {
      gen.kind = gen_kind == "oracle" ? PhantomKind::oracle : PhantomKind::piecewise;
      gen.test_count = gen_test < 0 ? gen.train_count : gen_test;
      auto [trm, tem] = build_dataset(gen_out, gen);
      io.out << "wrote " << trm.records.size() << " train and " << tem.records.size() << " test samples to " << gen_out << "\n";
      return 0;
    }
    if (*t) {
      auto samples = detail::load_split(tr_data, "train");
      std::vector<Example> data;
      for (auto const &s : samples) data.push_back(make_example(s));
      if (tr_clip > 0.0) tr_cfg.grad_clip = tr_clip;
      auto const arch = net::parse_arch(tr_arch);
      net::NetworkConfig cfg = tr_net;
      std::size_t const ref_count = net::NetworkParams::zeros(cfg).trainable_count();
      if (arch == net::Arch::image) {
        cfg = matched_image_domain_config(tr_net);
        io.out << "image-domain channels " << cfg.channels << ": " << net::NetworkParams::zeros(cfg).trainable_count()
               << " parameters (k-space network: " << ref_count << ")\n";
      } else {
        io.out << "parameters: " << ref_count << "\n";
      }
      auto res = train(data, cfg, tr_cfg, [&](EpochLog const &l, double sec) {
        io.out << "epoch " << l.epoch << " train_mse " << l.train_mse << " val_mse " << l.val_mse << " (" << sec << " s)\n";
        io.out.flush();
      });
      save_checkpoint(tr_out, res.best);
      write_loss_log(tr_log.empty() ? tr_out + ".loss.csv" : tr_log, res.log);
      io.out << "initial val_mse " << res.initial_val_mse << ", best epoch " << res.best.epoch << " val_mse "
             << res.best.val_mse << "\n";
      return 0;
    }
    if (*r || *e) {
      auto samples = detail::load_split(rc_data, rc_split);
      std::vector<std::string> methods;
      if (*r) {
        methods.push_back(rc_method);
      } else {
        std::stringstream ss(ev_methods);
        for (std::string m; std::getline(ss, m, ',');) {
          if (std::find(detail::methods.begin(), detail::methods.end(), m) == detail::methods.end()) {
            io.err << "unknown method " << m << "\n" << app.help();
            return 1;
          }
          methods.push_back(m);
        }
      }
      bool const wants_tikhonov = std::find(methods.begin(), methods.end(), "tikhonov") != methods.end();
      double alpha = rc_alpha;
      if (wants_tikhonov && alpha <= 0.0) {
        alpha = tune_tikhonov_alpha(samples);
        io.out << "tikhonov alpha " << format_double(alpha) << "\n";
      }
      std::optional<Checkpoint> omodl_ck, image_ck;
      if (*r && !rc_ck.empty()) {
        auto ck = load_checkpoint(rc_ck);
        if (rc_method == "omodl" && ck.net.arch != net::Arch::kspace) throw ConfigError(rc_ck + " is not an omodl checkpoint");
        if (rc_method == "image-domain" && ck.net.arch != net::Arch::image) throw ConfigError(rc_ck + " is not an image-domain checkpoint");
        (ck.net.arch == net::Arch::kspace ? omodl_ck : image_ck) = std::move(ck);
      }
      if (*e && !rc_ck.empty()) omodl_ck = detail::load_arch_checkpoint(rc_ck, net::Arch::kspace);
      if (*e && !rc_image_ck.empty()) image_ck = detail::load_arch_checkpoint(rc_image_ck, net::Arch::image);

      std::vector<MetricsRow> rows;
      if (*r) {
        if (rc_index >= samples.size()) throw ConfigError("--index out of range");
        auto const &s = samples[rc_index];
        auto res = detail::run_method(rc_method, s, omodl_ck, image_ck, alpha, rc_giraf);
        rows.push_back(detail::metrics_row(res, s, !rc_no_timing));
        if (!rc_kspace.empty()) io::write_kspace(rc_kspace, res.f_hat);
        if (!rc_pgm.empty()) export_magnitude(res.image, rc_pgm);
        if (!rc_err.empty()) export_error_map(res.image, inverse_dft(s.reference), rc_err);
      } else {
        for (auto const &s : samples) {
          for (auto const &m : methods) rows.push_back(detail::metrics_row(detail::run_method(m, s, omodl_ck, image_ck, alpha, rc_giraf), s, !rc_no_timing));
        }
      }
      write_metrics(rc_out, rows);
      for (auto const &m : methods) {
        double snr = 0.0, ms = 0.0;
        int n = 0;
        for (auto const &row : rows) {
          if (row.method != m) continue;
          snr += row.snr_db;
          ms += row.runtime_ms;
          ++n;
        }
        if (n > 0) io.out << m << ": mean snr_db " << snr / n << ", mean runtime_ms " << ms / n << " over " << n << " sample(s)\n";
      }
      return 0;
    }
    if (*x) {
      auto img = inverse_dft(io::read_kspace(ex_in));
      if (ex_ref.empty()) {
        export_magnitude(img, ex_out);
      } else {
        export_error_map(img, inverse_dft(io::read_kspace(ex_ref)), ex_out);
      }
      return 0;
    }
  } catch (std::exception const &ex) {
    io.err << "error: " << ex.what() << "\n";
    return 2;
  }
  return 1;
}

} // namespace omodl::cli
