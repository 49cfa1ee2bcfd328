// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "wkoopman/certificates.hpp"
#include "wkoopman/config.hpp"
#include "wkoopman/eigsolve.hpp"
#include "wkoopman/io.hpp"
#include "wkoopman/pipeline.hpp"

using namespace wkoopman;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Matrix uniform_matrix(int rows, int cols, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = u(rng);
  return out;
}

SnapshotDataset draw(const RunConfig& cfg, std::uint64_t seed, int m) {
  return make_dataset(cfg.system, cfg.domain, m, cfg.sampling.dt, seed, cfg.kernel.weight,
                      cfg.certificate.mode == CertificateMode::Zubov ? cfg.eta : std::nullopt);
}

KoopmanModel fit(const RunConfig& cfg, const SnapshotDataset& ds) {
  if (cfg.certificate.mode == CertificateMode::Zubov) return fit_zubov_koopman(ds, cfg.kernel, *cfg.eta, cfg.rrr);
  return fit_koopman(ds, cfg.kernel, cfg.rrr);
}

RunConfig linear_config(int m, int rank, std::uint64_t seed) {
  RunConfig cfg;
  cfg.system = {SystemKind::LinearContraction, 2, 0.5};
  cfg.domain = DomainSpec::ball(2, 2.0);
  cfg.sampling = {m, seed, 0.1};
  cfg.rrr.rank = rank;
  cfg.rrr.beta = 0.01;
  cfg.rrr.beta_mode = BetaMode::Relative;
  return cfg;
}

// Shared fits, built once on first use.
struct Fixtures {
  RunConfig ex1 = example1_config();
  RunConfig ex2 = example2_config();
  std::optional<SnapshotDataset> ex1_data, ex2_data;
  std::optional<KoopmanModel> ex1_model, ex2_model;
  std::vector<KoopmanModel> linear_models;

  const KoopmanModel& example1() {
    if (!ex1_model) {
      ex1_data = draw(ex1, ex1.sampling.seed, ex1.sampling.m);
      ex1_model = fit(ex1, *ex1_data);
    }
    return *ex1_model;
  }
  const KoopmanModel& example2() {
    if (!ex2_model) {
      ex2_data = draw(ex2, ex2.sampling.seed, ex2.sampling.m);
      ex2_model = fit(ex2, *ex2_data);
    }
    return *ex2_model;
  }
  const std::vector<KoopmanModel>& linear() {
    if (linear_models.empty()) {
      for (std::uint64_t s = 0; s < 10; ++s) {
        const RunConfig cfg = linear_config(60 + 10 * static_cast<int>(s), 5 + static_cast<int>(s), 100 + s);
        linear_models.push_back(fit(cfg, draw(cfg, cfg.sampling.seed, cfg.sampling.m)));
      }
    }
    return linear_models;
  }
};

Fixtures fx;

Outcome c1_single_sample() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> ub(1e-3, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    SnapshotDataset ds;
    ds.x = Matrix::Constant(1, 1, u(rng));
    ds.y = Matrix::Constant(1, 1, u(rng));
    ds.dt = 0.1;
    if (std::abs(ds.x(0, 0)) < 1e-3) continue;
    WeightedKernelSpec kw;
    RRRConfig cfg;
    cfg.rank = 1;
    cfg.beta_mode = BetaMode::Absolute;
    cfg.beta = ub(rng);
    const KoopmanModel model = fit_koopman(ds, kw, cfg);
    const double kxx = ds.x(0, 0) * ds.x(0, 0);
    worst = std::max(worst, std::abs(model.theta()(0, 0) - 1.0 / (kxx + cfg.beta)));
  }
  return {worst <= 1e-12, "max |Theta - 1/(k+beta)| = " + fmt_num(worst)};
}

Outcome c2_pencil() {
  std::mt19937_64 rng(2);
  double worst_val = 0.0, worst_res = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 49;
    const int r = 1 + trial % std::max(1, n / 2);
    const Matrix a = uniform_matrix(n, n, rng, -1, 1);
    const Matrix b = a * a.transpose() + 0.5 * Matrix::Identity(n, n);
    const Matrix v = Matrix::Identity(n, n) + 0.3 / std::sqrt(n) * uniform_matrix(n, n, rng, -1, 1);
    // Planted spectrum with a minimum gap so each eigenvector is well defined.
    Vector values(n);
    for (int i = 0; i < n; ++i) values(i) = 0.1 + 0.2 * i;
    std::shuffle(values.data(), values.data() + n, rng);
    const Matrix m = b * v * values.asDiagonal() * v.inverse();
    const PencilSolution sol = generalized_eig_topr({m, b}, r);
    const double scale = m.norm() + b.norm();
    for (int i = 0; i < r; ++i) {
      worst_val = std::max(worst_val, std::abs(sol.values(i) - (0.1 + 0.2 * (n - 1 - i))));
      const Vector u = sol.vectors.col(i);
      worst_res = std::max(worst_res, (m * u - sol.values(i) * b * u).norm() / scale);
    }
  }
  return {worst_val <= 1e-8 && worst_res <= 1e-8,
          "max eigenvalue error " + fmt_num(worst_val) + ", max scaled residual " + fmt_num(worst_res)};
}

Outcome c3_norm_bound() {
  std::vector<const KoopmanModel*> models = {&fx.example1(), &fx.example2()};
  for (const auto& m : fx.linear()) models.push_back(&m);
  double worst_slack = -1e300;
  for (const KoopmanModel* m : models) {
    const double bound = lambda_max(m->gram_target()) / (m->beta() * static_cast<double>(m->size()));
    worst_slack = std::max(worst_slack, op_norm(*m) - bound);
  }
  return {worst_slack <= 1e-8, fmt_num(models.size()) + " models, max(op_norm - bound) = " + fmt_num(worst_slack)};
}

Outcome c4_decay_ratio() {
  const RunConfig& cfg = fx.ex1;
  const SnapshotDataset ds = draw(cfg, 4, 10000);
  const double alpha = check_decay_ratio(ds, cfg.kernel.weight);
  return {alpha < 1.0, "alpha_hat = " + fmt_num(alpha) + " over 10^4 samples"};
}

Outcome c5_local_optimality() {
  std::vector<const KoopmanModel*> models = {&fx.example1(), &fx.example2()};
  for (const auto& m : fx.linear()) models.push_back(&m);
  double worst = -1e300;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (const KoopmanModel* model : models) {
    const double base = regularized_objective(*model, model->theta()).total;
    const Matrix& u = model->eigenvectors();
    for (int p = 0; p < 100; ++p) {
      Matrix e(u.rows(), u.cols());
      for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = 1e-3 * normal(rng);
      const Matrix moved =
          normalize_eigenvectors(u + e, model->gram_x(), model->beta(), model->normalization());
      const double total = regularized_objective(*model, theta_from_vectors(moved, model->gram_x())).total;
      worst = std::max(worst, base - total);
    }
  }
  return {worst <= 1e-9, "largest objective decrease " + fmt_num(worst) + " over 100 perturbations x " +
                             fmt_num(models.size()) + " models"};
}

Outcome c6_linear_lyapunov() {
  const RunConfig cfg = linear_config(200, 20, 6);
  const SnapshotDataset train = draw(cfg, 6, 200);
  const KoopmanModel model = fit(cfg, train);
  const LyapunovEstimate est(model, 1e-10);
  const PointSet pts = sample_uniform(cfg.domain, 100, 60, [](const Vector& x) {
    const double r = x.norm();
    return r >= 0.5 && r <= 1.5;
  });
  double rel = 0.0, abs_err = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vector x = pts.row(i).transpose();
    const double v = oracle_lyapunov(cfg.system, cfg.kernel, x, cfg.sampling.dt, 1e-14);
    const double vh = est.value(x);
    rel += std::abs(vh - v) / v;
    abs_err += std::abs(vh - v);
  }
  rel /= static_cast<double>(pts.rows());
  abs_err /= static_cast<double>(pts.rows());
  const SnapshotDataset held = draw(cfg, 7, 200);
  const double alpha = std::max(op_norm(model), check_decay_ratio(train, cfg.kernel.weight));
  const double bound = lyapunov_error_bound(alpha, 1.0, heldout_risk(model, held));
  return {rel <= 0.15 && abs_err <= bound, "mean relative error " + fmt_num(rel) + ", mean abs error " +
                                               fmt_num(abs_err) + " vs bound " + fmt_num(bound) +
                                               " (plug-in alpha " + fmt_num(alpha) + ")"};
}

Outcome c7_example1() {
  const RunConfig& cfg = fx.ex1;
  const KoopmanModel& model = fx.example1();
  const LyapunovEstimate est(model, cfg.certificate.tolerance);
  const PointSet pts = grid_points(cfg.domain, 101);
  PointSet next(pts.rows(), pts.cols());
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    next.row(i) = step(cfg.system, pts.row(i).transpose(), cfg.sampling.dt).transpose();
  const Vector v = est.values(pts);
  const Vector vn = est.values(next);
  int pos_total = 0, pos = 0, dec_total = 0, dec = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double r = pts.row(i).norm();
    if (r > 0.25) {
      ++pos_total;
      pos += v(i) > 0.0;
    }
    if (r >= 0.5 && r <= 1.8) {
      ++dec_total;
      dec += vn(i) < v(i);
    }
  }
  const double frac = static_cast<double>(dec) / dec_total;
  return {pos == pos_total && frac >= 0.9,
          "positive on " + std::to_string(pos) + "/" + std::to_string(pos_total) + ", decrease fraction " +
              fmt_num(frac) + " (op_norm " + fmt_num(op_norm(model)) + ", certificate power " +
              std::to_string(est.certificate().power) + ")"};
}

PointSet region_r(const RunConfig& cfg, int n, std::uint64_t seed) {
  return sample_uniform(cfg.domain, n, seed, [](const Vector& x) { return x(0) * x(1) >= 2.0; });
}

Outcome c8_example2() {
  const RunConfig& cfg = fx.ex2;
  const KoopmanModel& model = fx.example2();
  const ZubovEstimate est(model, horizon_steps(cfg.certificate.horizon, cfg.sampling.dt), cfg.certificate.nu,
                          cfg.certificate.varsigma);
  const PointSet in_r = region_r(cfg, 200, 81);
  const PointSet ring = sample_uniform(cfg.domain, 200, 82, [](const Vector& x) {
    const double r = x.norm();
    return r >= 0.2 && r <= 0.6;
  });
  const double mr = est.values(in_r).mean();
  const double mring = est.values(ring).mean();
  return {est.steps() == 6 && mr <= 0.2 * mring,
          "t = " + std::to_string(est.steps()) + ", mean zeta_hat on R " + fmt_num(mr) + " vs ring " + fmt_num(mring)};
}

long double rho_check_ld(long double m, long double gamma, long double r, long double delta) {
  const long double ly = std::log(6.0L / delta);
  const long double lx = std::log(12.0L * m * m / delta);
  return ly / m + std::sqrt(8.0L * ly / m) + gamma * (gamma + 2.0L * std::sqrt(r)) * (6.0L * lx / m + std::sqrt(9.0L * lx / m));
}

Outcome c9_generalization() {
  double worst = 0.0;
  const double ms[] = {20, 100, 500, 2000, 10000};
  const double gs[] = {0.5, 4.0};
  const double rs[] = {1, 50};
  int lattice = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k, ++lattice) {
        const double delta = lattice % 2 ? 0.01 : 0.05;
        const long double ref = rho_check_ld(ms[i], gs[j], rs[k], delta);
        worst = std::max(worst, static_cast<double>(std::abs(generalization_bound(ms[i], gs[j], rs[k], delta) - ref) / ref));
      }
  int ok = 0;
  const int runs = 50;
  for (int run = 0; run < runs; ++run) {
    const RunConfig cfg = linear_config(100, 10, 900 + run);
    const SnapshotDataset train = draw(cfg, cfg.sampling.seed, 100);
    const KoopmanModel model = fit(cfg, train);
    const SnapshotDataset held = draw(cfg, cfg.sampling.seed + 10000, 500);
    const double bound = empirical_risk(model) + generalization_bound(100, hs_norm(model), 10, 0.05);
    ok += heldout_risk(model, held) <= bound;
  }
  const double rate = static_cast<double>(ok) / runs;
  return {worst <= 1e-10 && rate >= 0.95, std::to_string(lattice) + "-point lattice max rel error " + fmt_num(worst) +
                                               "; held-out risk within bound in " + std::to_string(ok) + "/" +
                                               std::to_string(runs) + " runs (" +
                                               std::to_string(runs - ok) + " violations)"};
}

Outcome c10_zubov_oracle() {
  const RunConfig& cfg = fx.ex2;
  const KoopmanModel& model = fx.example2();
  const SnapshotDataset held = draw(cfg, cfg.sampling.seed + 1, cfg.sampling.m);
  const double rho = heldout_risk(model, held);
  const double alpha = std::max(op_norm(model), check_damped_decay_ratio(*fx.ex2_data, cfg.kernel.weight));
  const PointSet pts = sample_uniform(cfg.domain, 200, 101);
  bool pass = true;
  std::string detail = "plug-in alpha " + fmt_num(alpha) + ", held-out risk " + fmt_num(rho) + ";";
  for (int t : {1, 3, 6}) {
    const ZubovEstimate est(model, t, cfg.certificate.nu, cfg.certificate.varsigma);
    const Vector zh = est.values(pts);
    double mae = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      mae += std::abs(zh(i) - oracle_zubov(cfg.system, cfg.kernel.weight, *cfg.eta, pts.row(i).transpose(),
                                           cfg.sampling.dt, t, cfg.certificate.nu, cfg.certificate.varsigma));
    mae /= static_cast<double>(pts.rows());
    const double bound = zubov_error_bound(t, alpha, rho, cfg.certificate.nu, cfg.certificate.varsigma);
    pass = pass && mae <= bound;
    detail += " t=" + std::to_string(t) + " mae " + fmt_num(mae) + " <= " + fmt_num(bound);
  }
  return {pass, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(WKOOPMAN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome c11_truncation_determinism() {
  // Truncation tail on the linear fit (plain contraction) and on example 1
  // (eventual contraction certificate).
  const RunConfig lin = linear_config(200, 20, 11);
  const KoopmanModel lin_model = fit(lin, draw(lin, 11, 200));
  std::mt19937_64 rng(11);
  const PointSet pts = uniform_matrix(50, 2, rng, -1.4, 1.4);
  int checked = 0, within = 0;
  for (const KoopmanModel* model : {&lin_model, &fx.example1()}) {
    for (int t : {0, 3, 10, 40}) {
      const LyapunovEstimate a(*model, t);
      const LyapunovEstimate b(*model, t + 10);
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const Vector x = pts.row(i).transpose();
        ++checked;
        within += std::abs(a.value(x) - b.value(x)) <= a.tail_bound_at(x) * (1 + 1e-9) + 1e-14;
      }
    }
  }
  // Plain geometric form for the contractive fit.
  const LyapunovEstimate lt(lin_model, 1e-8);
  const double a = op_norm(lin_model);
  const double geometric = std::pow(a, 2.0 * (lt.horizon() + 1)) / (1 - a * a) * lt.c_max();
  const LyapunovEstimate lt10(lin_model, lt.horizon() + 10);
  bool geometric_ok = true;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vector x = pts.row(i).transpose();
    geometric_ok = geometric_ok && std::abs(lt.value(x) - lt10.value(x)) <= geometric * (1 + 1e-9) + 1e-14;
  }

  const fs::path root = fs::temp_directory_path() / "wkoopman_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "linear.ini") << render_config(lin);
  // Same config and output directory twice; the first run is set aside.
  bool same = true;
  std::vector<std::string> compared;
  const fs::path work = root / "run";
  for (int run = 0; run < 2; ++run) {
    const std::string out = " --quiet --out " + work.string();
    const std::string config = " --config " + (root / "linear.ini").string();
    for (const char* cmd : {"sample", "fit", "lyapunov", "report"})
      same = same && run_cli(std::string(cmd) + config + out) == 0;
    same = same && run_cli("reproduce example2 --quiet --out " + (work / "example2").string()) == 0;
    if (run == 0) fs::rename(work, root / "first");
  }
  for (const auto& entry : fs::recursive_directory_iterator(root / "first")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "first");
    compared.push_back(rel.string());
    same = same && fs::exists(work / rel) && slurp(entry.path()) == slurp(work / rel);
  }
  return {within == checked && geometric_ok && same && compared.size() >= 10,
          "tail bound held at " + std::to_string(within) + "/" + std::to_string(checked) +
              " point-horizon pairs, geometric form " + (geometric_ok ? "ok" : "violated") + "; " +
              std::to_string(compared.size()) + " artifacts " + (same ? "byte-identical" : "DIFFER") + " across reruns"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "closed-form single-sample fit", 1, c1_single_sample},
      {2, "pencil correctness", 10, c2_pencil},
      {3, "operator norm bound", 120, c3_norm_bound},
      {4, "contraction premise", 30, c4_decay_ratio},
      {5, "RRR local optimality", 300, c5_local_optimality},
      {6, "Lyapunov estimate vs oracle (linear)", 120, c6_linear_lyapunov},
      {7, "example 1 qualitative reproduction", 300, c7_example1},
      {8, "example 2 qualitative reproduction", 300, c8_example2},
      {9, "generalization bound formula and sanity", 300, c9_generalization},
      {10, "Zubov oracle agreement", 180, c10_zubov_oracle},
      {11, "truncation and determinism", 300, c11_truncation_determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = out.pass && in_time;
    failed += !pass;
    std::printf("[%s] criterion %2d: %s: %s; %.2f s (budget %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
