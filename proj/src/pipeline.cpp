#include "wkoopman/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include <fmt/core.h>

#include "wkoopman/error.hpp"
#include "wkoopman/io.hpp"

namespace wkoopman {

namespace fs = std::filesystem;

void Console::info(const std::string& line) const {
  if (!quiet) (out ? *out : std::cout) << line << '\n';
}

void Console::warn(const std::string& line) const { (err ? *err : std::cerr) << "warning: " << line << '\n'; }

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::Config, "cannot create output directory '" + dir.string() + "'");
}

std::ofstream open_append(const fs::path& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) fail(ErrorKind::Config, "cannot write '" + path.string() + "'");
  return out;
}

SnapshotDataset sample_dataset(const RunConfig& cfg, std::uint64_t seed) {
  return make_dataset(cfg.system, cfg.domain, cfg.sampling.m, cfg.sampling.dt, seed, cfg.kernel.weight,
                      cfg.certificate.mode == CertificateMode::Zubov ? cfg.eta : std::nullopt);
}

KoopmanModel fit_from(const RunConfig& cfg, const SnapshotDataset& ds) {
  if (cfg.certificate.mode == CertificateMode::Zubov)
    return fit_zubov_koopman(ds, cfg.kernel, *cfg.eta, cfg.rrr);
  return fit_koopman(ds, cfg.kernel, cfg.rrr);
}

double decay_ratio(const RunConfig& cfg, const SnapshotDataset& ds) {
  return ds.eta_x ? check_damped_decay_ratio(ds, cfg.kernel.weight) : check_decay_ratio(ds, cfg.kernel.weight);
}

void print_fit(const KoopmanModel& model, const Console& con) {
  const FitDiagnostics& d = model.diagnostics();
  con.info(fmt::format("empirical risk   {:.6g}", d.empirical_risk));
  con.info(fmt::format("hs norm          {:.6g}", d.hs_norm));
  con.info(fmt::format("op norm          {:.6g}", d.op_norm));
  con.info(fmt::format("norm bound       {:.6g}", d.norm_bound));
  std::string head = "sigma^2 head    ";
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(5, d.sigma2.size()); ++i)
    head += fmt::format(" {:.6g}", d.sigma2(i));
  con.info(head);
  if (d.op_norm >= 1.0)
    con.warn(fmt::format("fitted operator norm {:.6g} >= 1; plug-in bounds are vacuous. "
                         "Raise rrr.beta or lower rrr.rank.",
                         d.op_norm));
}

ZubovReportOptions zubov_options(const RunConfig& cfg) {
  return {horizon_steps(cfg.certificate.horizon, cfg.sampling.dt), cfg.certificate.nu, cfg.certificate.varsigma};
}

BoundReport report_for(const RunConfig& cfg, const KoopmanModel& model, const SnapshotDataset& heldout) {
  std::optional<ZubovReportOptions> zopt;
  if (model.mode() == ModelMode::Zubov) zopt = zubov_options(cfg);
  return make_bound_report(model, cfg.certificate.delta, anchor_dataset(model), heldout, zopt);
}

LyapunovEstimate build_lyapunov(const KoopmanModel& model, const RunConfig& cfg, const Console& con) {
  try {
    LyapunovEstimate est(model, cfg.certificate.tolerance, cfg.certificate.max_power);
    if (est.horizon_capped()) con.warn("truncation horizon hit its cap; tail tolerance not met");
    return est;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ContractionViolated)
      con.warn("no power of the fitted operator contracts; raise rrr.beta or lower rrr.rank");
    throw;
  }
}

void append_lyapunov_section(const fs::path& path, const LyapunovEstimate& est) {
  std::ofstream out = open_append(path);
  const ContractionCertificate& c = est.certificate();
  out << "\n[lyapunov]\n";
  out << "horizon = " << est.horizon() << '\n';
  out << "horizon_capped = " << (est.horizon_capped() ? "true" : "false") << '\n';
  out << "certificate_power = " << c.power << '\n';
  out << "certificate_rate = " << format_double(c.rate) << '\n';
  out << "certificate_transient = " << format_double(c.transient) << '\n';
  out << "c_max = " << format_double(est.c_max()) << '\n';
  out << "tail_bound = " << format_double(est.tail_bound()) << '\n';
}

GridTable eval_on_grid(const PointSet& pts, const Vector& values) { return {pts, values}; }

}  // namespace

SnapshotDataset heldout_dataset(const RunConfig& cfg) { return sample_dataset(cfg, cfg.sampling.seed + 1); }

SnapshotDataset anchor_dataset(const KoopmanModel& model) {
  SnapshotDataset ds;
  ds.x = model.anchors_x();
  ds.y = model.anchors_y();
  if (model.eta()) {
    ds.eta_x = Vector(model.size());
    for (Eigen::Index i = 0; i < model.size(); ++i) (*ds.eta_x)(i) = (*model.eta())(ds.x.row(i).transpose());
  }
  return ds;
}

fs::path cmd_sample(const RunConfig& cfg, const Console& con) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const SnapshotDataset ds = sample_dataset(cfg, cfg.sampling.seed);
  const fs::path csv = cfg.out_dir / artifacts::kDataset;
  write_dataset_csv(csv, ds);
  DatasetMetadata meta;
  meta.seed = ds.seed;
  meta.dt = ds.dt;
  meta.m = static_cast<int>(ds.size());
  meta.rejected_count = ds.rejected_count;
  meta.system = to_string(cfg.system.kind);
  meta.domain = cfg.domain;
  write_dataset_metadata(metadata_path(csv), meta);

  const double alpha = decay_ratio(cfg, ds);
  con.info(fmt::format("wrote {} ({} samples, {} below the weight floor dropped)", csv.string(), ds.size(),
                       ds.rejected_count));
  con.info(fmt::format("alpha_hat        {:.6g}", alpha));
  if (alpha >= 1.0) con.warn(fmt::format("empirical decay ratio {:.6g} >= 1; the weight does not contract", alpha));
  return csv;
}

fs::path cmd_fit(const RunConfig& cfg, const fs::path& dataset, const Console& con) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const SnapshotDataset ds = read_dataset_csv(dataset);
  const KoopmanModel model = fit_from(cfg, ds);
  const fs::path path = cfg.out_dir / artifacts::kModel;
  save_model(path, model);
  con.info(fmt::format("wrote {}", path.string()));
  print_fit(model, con);
  return path;
}

fs::path cmd_lyapunov(const RunConfig& cfg, const fs::path& model_path, const Console& con) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const KoopmanModel model = load_model(model_path.string());
  const LyapunovEstimate est = build_lyapunov(model, cfg, con);
  const PointSet pts = grid_points(cfg.domain, cfg.grid_resolution);
  const fs::path grid = cfg.out_dir / artifacts::kLyapunovGrid;
  write_grid_csv(grid, eval_on_grid(pts, est.values(pts)));

  const BoundReport rep = report_for(cfg, model, heldout_dataset(cfg));
  const fs::path report = cfg.out_dir / artifacts::kLyapunovReport;
  write_bound_report(report, rep);
  append_lyapunov_section(report, est);
  con.info(fmt::format("wrote {} and {}", grid.string(), report.string()));
  con.info(fmt::format("horizon T = {} (certificate power {}, rate {:.6g})", est.horizon(), est.certificate().power,
                       est.certificate().rate));
  con.info(fmt::format("plug-in alpha {:.6g}, error bound {:.6g}", rep.alpha_bar, rep.lyapunov_bound));
  return grid;
}

fs::path cmd_zubov(const RunConfig& cfg, const fs::path& model_path, const Console& con) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const KoopmanModel model = load_model(model_path.string());
  if (model.mode() != ModelMode::Zubov) fail(ErrorKind::Config, "zubov command needs a model fitted in zubov mode");
  const ZubovReportOptions opt = zubov_options(cfg);
  const ZubovEstimate est(model, opt.steps, opt.nu, opt.varsigma);
  const PointSet pts = grid_points(cfg.domain, cfg.grid_resolution);
  const fs::path grid = cfg.out_dir / artifacts::kZubovGrid;
  write_grid_csv(grid, eval_on_grid(pts, est.values(pts)));

  const BoundReport rep = report_for(cfg, model, heldout_dataset(cfg));
  const fs::path report = cfg.out_dir / artifacts::kZubovReport;
  write_bound_report(report, rep);
  con.info(fmt::format("wrote {} and {}", grid.string(), report.string()));
  con.info(fmt::format("t = {} steps, plug-in alpha {:.6g}, error bound {:.6g}", opt.steps, rep.alpha_bar,
                       rep.zubov_bound));
  return grid;
}

BoundReport cmd_report(const RunConfig& cfg, const fs::path& model_path, const std::optional<fs::path>& heldout,
                       const Console& con) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const KoopmanModel model = load_model(model_path.string());
  const SnapshotDataset held = heldout ? read_dataset_csv(*heldout) : heldout_dataset(cfg);
  const BoundReport rep = report_for(cfg, model, held);
  const fs::path path = cfg.out_dir / artifacts::kBoundReport;
  write_bound_report(path, rep);
  con.info(fmt::format("wrote {}", path.string()));
  con.info(fmt::format("empirical risk {:.6g}, held-out risk {:.6g}, rho_check {:.6g}", rep.empirical_risk,
                       rep.heldout_risk, rep.generalization.rho_check));
  return rep;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Config, "cannot write '" + path.string() + "'");
  out << text;
}

struct Stage {
  RunConfig cfg;
  SnapshotDataset train;
  KoopmanModel model;
};

Stage run_fit_stage(RunConfig cfg, const Console& con) {
  write_text(cfg.out_dir / "config.ini", render_config(cfg));
  const fs::path csv = cmd_sample(cfg, con);
  const fs::path model_path = cmd_fit(cfg, csv, con);
  SnapshotDataset train = read_dataset_csv(csv);
  KoopmanModel model = load_model(model_path.string());
  return {std::move(cfg), std::move(train), std::move(model)};
}

void reproduce_example1(RunConfig cfg, const Console& con) {
  Stage st = run_fit_stage(std::move(cfg), con);
  const RunConfig& c = st.cfg;
  const KoopmanModel& model = st.model;
  cmd_lyapunov(c, c.out_dir / artifacts::kModel, con);
  cmd_report(c, c.out_dir / artifacts::kModel, std::nullopt, con);

  const LyapunovEstimate est(model, c.certificate.tolerance, c.certificate.max_power);
  const PointSet pts = grid_points(c.domain, c.grid_resolution);
  const Vector vhat = est.values(pts);
  Vector oracle(pts.rows());
  PointSet next(pts.rows(), pts.cols());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vector x = pts.row(i).transpose();
    oracle(i) = oracle_lyapunov(c.system, c.kernel, x, c.sampling.dt, 1e-10);
    next.row(i) = step(c.system, x, c.sampling.dt).transpose();
  }
  write_grid_csv(c.out_dir / "lyapunov_oracle.csv", {pts, oracle});
  const Vector vnext = est.values(next);

  int positive = 0, positive_total = 0, decrease = 0, decrease_total = 0;
  double rel_err = 0.0;
  int rel_count = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double r = pts.row(i).norm();
    if (r > 0.25) {
      ++positive_total;
      positive += vhat(i) > 0.0;
    }
    if (r >= 0.5 && r <= 1.8) {
      ++decrease_total;
      decrease += vnext(i) < vhat(i);
      rel_err += std::abs(vhat(i) - oracle(i)) / oracle(i);
      ++rel_count;
    }
  }

  // A quadratic observable pushed forward by the learned operator.
  const auto g = [](const Vector& x) { return x.squaredNorm(); };
  const WeightSpec& w = c.kernel.weight;
  Vector g0(model.size());
  for (Eigen::Index j = 0; j < model.size(); ++j) {
    const Vector yj = model.anchors_y().row(j).transpose();
    g0(j) = eval_weight(w, yj) * g(yj);
  }
  const int steps[] = {1, 5, 10};
  const Matrix kcols = gram(c.kernel, model.anchors_x(), pts);
  std::ofstream obs(c.out_dir / "observable_prediction.csv", std::ios::trunc);
  obs << "x1,x2";
  for (int t : steps) obs << ",predicted_t" << t << ",true_t" << t;
  obs << '\n';
  Matrix pred(pts.rows(), 3);
  for (int k = 0; k < 3; ++k) pred.col(k) = kcols.transpose() * forward_coeffs(model, g0, steps[k]);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    Vector z = pts.row(i).transpose();
    obs << format_double(z(0)) << ',' << format_double(z(1));
    int done = 0;
    for (int k = 0; k < 3; ++k) {
      for (; done < steps[k]; ++done) z = step(c.system, z, c.sampling.dt);
      obs << ',' << format_double(pred(i, k)) << ',' << format_double(eval_weight(w, z) * g(z));
    }
    obs << '\n';
  }

  std::ofstream sum(c.out_dir / "summary.txt", std::ios::trunc);
  sum << "[example1]\n";
  sum << "alpha_hat = " << format_double(check_decay_ratio(st.train, w)) << '\n';
  sum << "op_norm = " << format_double(model.diagnostics().op_norm) << '\n';
  sum << "certificate_power = " << est.certificate().power << '\n';
  sum << "horizon = " << est.horizon() << '\n';
  sum << "positive_fraction = " << format_double(static_cast<double>(positive) / positive_total) << '\n';
  sum << "decrease_fraction = " << format_double(static_cast<double>(decrease) / decrease_total) << '\n';
  sum << "mean_relative_error_ring = " << format_double(rel_err / rel_count) << '\n';
  con.info(fmt::format("v_hat > 0 on {}/{} points, decreases on {}/{}", positive, positive_total, decrease,
                       decrease_total));
}

void reproduce_example2(RunConfig cfg, const Console& con) {
  Stage st = run_fit_stage(std::move(cfg), con);
  const RunConfig& c = st.cfg;
  const KoopmanModel& model = st.model;
  cmd_zubov(c, c.out_dir / artifacts::kModel, con);
  cmd_report(c, c.out_dir / artifacts::kModel, std::nullopt, con);

  const ZubovReportOptions opt = zubov_options(c);
  const EtaSpec& eta = *c.eta;
  const WeightSpec& w = c.kernel.weight;
  const PointSet pts = grid_points(c.domain, c.grid_resolution);
  Vector oracle(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    oracle(i) = oracle_zubov(c.system, w, eta, pts.row(i).transpose(), c.sampling.dt, opt.steps, opt.nu,
                             opt.varsigma);
  write_grid_csv(c.out_dir / "zubov_oracle.csv", {pts, oracle});

  // Domain-of-attraction level: eta_lower over R = {x1 x2 >= 2} is attained at
  // |x|^2 = 4; alpha_lower is the smallest one-step weight ratio among training
  // samples whose trajectories converge.
  const double eta_lower = eta.scale * 4.0;
  double alpha_lower = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < st.train.size(); ++i) {
    const Vector x = st.train.x.row(i).transpose();
    if (!std::isfinite(accumulated_cost(c.system, eta, x, c.sampling.dt, 1e-6))) continue;
    alpha_lower = std::min(alpha_lower, eval_weight(w, st.train.y.row(i).transpose()) / eval_weight(w, x));
  }
  std::vector<double> levels;
  const double top = eval_weight(w, c.domain.upper());
  for (int k = 1; k <= 16; ++k) levels.push_back(top * k / 16.0);
  const MuTable mu = estimate_mu_table(c.system, eta, w, c.domain, levels, 500, c.sampling.dt,
                                       c.sampling.seed + 2);
  std::ofstream doa(c.out_dir / "doa.txt", std::ios::trunc);
  doa << "[doa]\n";
  doa << "eta_lower = " << format_double(eta_lower) << '\n';
  doa << "alpha_lower = " << format_double(alpha_lower) << '\n';
  doa << "alpha_lower_source = empirical minimum over converging training samples\n";
  doa << "varsigma = " << format_double(opt.varsigma) << '\n';
  // The feasible set sits between small levels (weight below varsigma) and
  // large ones (mu infinite), so bracket between adjacent tabulated levels
  // from the top down.
  std::optional<double> astar;
  if (alpha_lower > 0.0 && alpha_lower < 1.0) {
    for (std::size_t k = levels.size() - 1; k >= 1 && !astar; --k)
      astar = doa_level_threshold(eta_lower, [&](double a) { return mu(a); }, alpha_lower, opt.varsigma,
                                  levels[k - 1], levels[k]);
  }
  doa << "a_star = " << (astar ? format_double(*astar) : std::string("none")) << '\n';
  doa << "\n[mu]\n# level,mu\n";
  for (std::size_t k = 0; k < mu.levels.size(); ++k)
    doa << format_double(mu.levels[k]) << ',' << format_double(mu.mu[k]) << '\n';

  // The invariant non-attracting set R versus a ring inside the basin.
  const ZubovEstimate est(model, opt.steps, opt.nu, opt.varsigma);
  const PointSet in_r = sample_uniform(c.domain, 200, c.sampling.seed + 3,
                                       [](const Vector& x) { return x(0) * x(1) >= 2.0; });
  const PointSet ring = sample_uniform(c.domain, 200, c.sampling.seed + 4, [](const Vector& x) {
    const double r = x.norm();
    return r >= 0.2 && r <= 0.6;
  });
  std::ofstream sum(c.out_dir / "summary.txt", std::ios::trunc);
  sum << "[example2]\n";
  sum << "alpha_hat = " << format_double(check_damped_decay_ratio(st.train, w)) << '\n';
  sum << "op_norm = " << format_double(model.diagnostics().op_norm) << '\n';
  sum << "steps = " << opt.steps << '\n';
  sum << "mean_zeta_hat_R = " << format_double(est.values(in_r).mean()) << '\n';
  sum << "mean_zeta_hat_ring = " << format_double(est.values(ring).mean()) << '\n';
  con.info(astar ? fmt::format("DoA contains the weight sublevel set a <= {:.6g}", *astar)
                 : std::string("no DoA level certified"));
}

}  // namespace

void cmd_reproduce(const std::string& example, const std::optional<std::uint64_t>& seed, const fs::path& out_dir,
                   const Console& con) {
  RunConfig cfg;
  if (example == "example1") cfg = example1_config();
  else if (example == "example2") cfg = example2_config();
  else fail(ErrorKind::Config, "unknown example '" + example + "' (expected example1 or example2)");
  if (seed) cfg.sampling.seed = *seed;
  cfg.out_dir = out_dir;
  ensure_dir(cfg.out_dir);
  if (example == "example1") reproduce_example1(std::move(cfg), con);
  else reproduce_example2(std::move(cfg), con);
}

}  // namespace wkoopman
