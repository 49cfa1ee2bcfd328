#include "wkoopman/io.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "wkoopman/error.hpp"

namespace wkoopman {

namespace {

double parse_double(const std::string& text, const std::string& where) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) fail(ErrorKind::InvalidInput, where + ": cannot parse number '" + text + "'");
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  if (*end != '\0') fail(ErrorKind::InvalidInput, where + ": trailing characters in '" + text + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Config, "cannot open '" + path.string() + "' for writing");
  return out;
}

void write_matrix(std::ostream& out, const std::string& name, const Matrix& a) {
  out << "matrix " << name << ' ' << a.rows() << ' ' << a.cols() << '\n';
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(a(i, j));
    }
    out << '\n';
  }
}

void write_domain(boost::property_tree::ptree& tree, const DomainSpec& dom) {
  tree.put("domain.kind", to_string(dom.kind));
  tree.put("domain.dimension", dom.dimension);
  if (dom.kind == DomainKind::Ball) {
    tree.put("domain.radius", format_double(dom.radius));
    return;
  }
  std::string lo;
  std::string hi;
  for (Eigen::Index c = 0; c < dom.lo.size(); ++c) {
    lo += (c ? "," : "") + format_double(dom.lo(c));
    hi += (c ? "," : "") + format_double(dom.hi(c));
  }
  tree.put("domain.lo", lo);
  tree.put("domain.hi", hi);
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_dataset_csv(const std::filesystem::path& path, const SnapshotDataset& ds) {
  std::ofstream out = open_out(path);
  const Eigen::Index n = ds.dimension();
  for (Eigen::Index c = 0; c < n; ++c) out << (c ? "," : "") << 'x' << c + 1;
  for (Eigen::Index c = 0; c < n; ++c) out << ",y" << c + 1;
  if (ds.eta_x) out << ",eta";
  out << '\n';
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index c = 0; c < n; ++c) out << (c ? "," : "") << format_double(ds.x(i, c));
    for (Eigen::Index c = 0; c < n; ++c) out << ',' << format_double(ds.y(i, c));
    if (ds.eta_x) out << ',' << format_double((*ds.eta_x)(i));
    out << '\n';
  }
}

SnapshotDataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open dataset '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::InvalidInput, "dataset '" + path.string() + "' is empty");
  const std::vector<std::string> header = split(line, ',');
  const bool has_eta = !header.empty() && header.back() == "eta";
  const std::size_t value_cols = header.size() - (has_eta ? 1 : 0);
  if (value_cols == 0 || value_cols % 2 != 0)
    fail(ErrorKind::InvalidInput, "dataset header must be x1..xn,y1..yn[,eta]");
  const auto n = static_cast<Eigen::Index>(value_cols / 2);
  for (Eigen::Index c = 0; c < n; ++c) {
    if (header[c] != "x" + std::to_string(c + 1) || header[n + c] != "y" + std::to_string(c + 1))
      fail(ErrorKind::InvalidInput, "dataset header must be x1..xn,y1..yn[,eta]");
  }

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size())
      fail(ErrorKind::InvalidInput, path.string() + ":" + std::to_string(lineno) + ": wrong column count");
    std::vector<double> row;
    for (const auto& cell : cells) row.push_back(parse_double(cell, path.string() + ":" + std::to_string(lineno)));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::DegenerateData, "dataset '" + path.string() + "' has no rows");

  SnapshotDataset ds;
  const auto m = static_cast<Eigen::Index>(rows.size());
  ds.x.resize(m, n);
  ds.y.resize(m, n);
  if (has_eta) ds.eta_x = Vector(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index c = 0; c < n; ++c) {
      ds.x(i, c) = rows[i][c];
      ds.y(i, c) = rows[i][n + c];
    }
    if (has_eta) (*ds.eta_x)(i) = rows[i][2 * n];
  }
  if (!ds.x.allFinite() || !ds.y.allFinite() || (has_eta && !ds.eta_x->allFinite()))
    fail(ErrorKind::InvalidInput, "dataset contains non-finite values");

  const auto meta = metadata_path(path);
  if (std::filesystem::exists(meta)) {
    const DatasetMetadata md = read_dataset_metadata(meta);
    ds.seed = md.seed;
    ds.dt = md.dt;
    ds.rejected_count = md.rejected_count;
  }
  return ds;
}

std::filesystem::path metadata_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p += ".meta";
  return p;
}

void write_dataset_metadata(const std::filesystem::path& path, const DatasetMetadata& meta) {
  boost::property_tree::ptree tree;
  tree.put("dataset.seed", meta.seed);
  tree.put("dataset.dt", format_double(meta.dt));
  tree.put("dataset.m", meta.m);
  tree.put("dataset.rejected_count", meta.rejected_count);
  tree.put("dataset.system", meta.system);
  write_domain(tree, meta.domain);
  std::ofstream out = open_out(path);
  boost::property_tree::write_ini(out, tree);
}

DatasetMetadata read_dataset_metadata(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ptree_error& e) {
    fail(ErrorKind::InvalidInput, std::string("dataset metadata: ") + e.what());
  }
  DatasetMetadata meta;
  meta.seed = tree.get<std::uint64_t>("dataset.seed", 0);
  meta.dt = parse_double(tree.get<std::string>("dataset.dt", "0"), "dataset.dt");
  meta.m = tree.get<int>("dataset.m", 0);
  meta.rejected_count = tree.get<int>("dataset.rejected_count", 0);
  meta.system = tree.get<std::string>("dataset.system", "");
  return meta;
}

void save_model(const std::filesystem::path& path, const KoopmanModel& model) {
  std::ostringstream out;
  const WeightedKernelSpec& kw = model.kernel();
  out << "# weighted-RKHS Koopman model\n";
  out << "format = 1\n";
  out << "mode = " << (model.mode() == ModelMode::Zubov ? "zubov" : "koopman") << '\n';
  out << "dimension = " << model.dimension() << '\n';
  out << "size = " << model.size() << '\n';
  out << "rank = " << model.rank() << '\n';
  out << "beta = " << format_double(model.beta()) << '\n';
  out << "normalization = " << to_string(model.normalization()) << '\n';
  out << "kernel.kind = " << to_string(kw.kernel.kind) << '\n';
  out << "kernel.gamma = " << format_double(kw.kernel.gamma) << '\n';
  out << "weight.kind = " << to_string(kw.weight.kind) << '\n';
  out << "weight.exponent = " << format_double(kw.weight.exponent) << '\n';
  out << "weight.floor = " << format_double(kw.weight.floor) << '\n';
  if (model.eta()) {
    out << "eta.kind = quadratic-norm\n";
    out << "eta.scale = " << format_double(model.eta()->scale) << '\n';
  }
  const FitDiagnostics& d = model.diagnostics();
  out << "diagnostics.max_imag = " << format_double(d.max_imag) << '\n';
  out << "diagnostics.tie_at_rank = " << (d.tie_at_rank ? 1 : 0) << '\n';
  out << "diagnostics.empirical_risk = " << format_double(d.empirical_risk) << '\n';
  write_matrix(out, "sigma2", d.sigma2);
  write_matrix(out, "anchors_x", model.anchors_x());
  write_matrix(out, "anchors_y", model.anchors_y());
  write_matrix(out, "theta", model.theta());
  std::ofstream file = open_out(path);
  file << out.str();
}

KoopmanModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open model '" + path + "'");
  std::map<std::string, std::string> keys;
  std::map<std::string, Matrix> matrices;
  std::string line;
  int lineno = 0;
  const auto where = [&] { return path + ":" + std::to_string(lineno); };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.rfind("matrix ", 0) == 0) {
      std::istringstream head(t.substr(7));
      std::string name;
      Eigen::Index rows = -1;
      Eigen::Index cols = -1;
      if (!(head >> name >> rows >> cols) || rows < 0 || cols < 0)
        fail(ErrorKind::InvalidInput, where() + ": malformed matrix header");
      Matrix a(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) fail(ErrorKind::InvalidInput, where() + ": truncated matrix " + name);
        ++lineno;
        std::istringstream row(line);
        std::string cell;
        for (Eigen::Index j = 0; j < cols; ++j) {
          if (!(row >> cell)) fail(ErrorKind::InvalidInput, where() + ": short row in matrix " + name);
          a(i, j) = parse_double(cell, where());
        }
      }
      matrices[name] = std::move(a);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorKind::InvalidInput, where() + ": expected key = value");
    keys[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }

  const auto get = [&](const std::string& key) -> const std::string& {
    const auto it = keys.find(key);
    if (it == keys.end()) fail(ErrorKind::InvalidInput, path + ": missing key '" + key + "'");
    return it->second;
  };
  const auto mat = [&](const std::string& name) -> Matrix& {
    const auto it = matrices.find(name);
    if (it == matrices.end()) fail(ErrorKind::InvalidInput, path + ": missing matrix '" + name + "'");
    return it->second;
  };
  if (get("format") != "1") fail(ErrorKind::InvalidInput, path + ": unsupported model format");

  WeightedKernelSpec kw;
  kw.kernel.kind = parse_kernel_kind(get("kernel.kind"));
  kw.kernel.gamma = parse_double(get("kernel.gamma"), "kernel.gamma");
  kw.weight.kind = parse_weight_kind(get("weight.kind"));
  kw.weight.exponent = parse_double(get("weight.exponent"), "weight.exponent");
  kw.weight.floor = parse_double(get("weight.floor"), "weight.floor");
  std::optional<EtaSpec> eta;
  const std::string& mode = get("mode");
  if (mode == "zubov") {
    EtaSpec e;
    if (get("eta.kind") != "quadratic-norm") fail(ErrorKind::InvalidInput, path + ": unknown eta.kind");
    e.scale = parse_double(get("eta.scale"), "eta.scale");
    eta = e;
  } else if (mode != "koopman") {
    fail(ErrorKind::InvalidInput, path + ": unknown mode '" + mode + "'");
  }

  KoopmanModel model(mat("anchors_x"), mat("anchors_y"), mat("theta"), kw, eta,
                     parse_double(get("beta"), "beta"), std::stoi(get("rank")),
                     parse_normalization(get("normalization")));
  if (!(model.beta() > 0.0)) fail(ErrorKind::InvalidInput, path + ": beta must be positive");
  const Matrix& sigma = mat("sigma2");
  model.diag_.sigma2 = sigma.col(0);
  model.diag_.max_imag = parse_double(get("diagnostics.max_imag"), "diagnostics.max_imag");
  model.diag_.tie_at_rank = get("diagnostics.tie_at_rank") == "1";
  model.refresh_diagnostics();
  return model;
}

void write_grid_csv(const std::filesystem::path& path, const GridTable& grid, const std::string& value_name) {
  std::ofstream out = open_out(path);
  const Eigen::Index n = grid.points.cols();
  for (Eigen::Index c = 0; c < n; ++c) out << 'x' << c + 1 << ',';
  out << value_name << '\n';
  for (Eigen::Index i = 0; i < grid.points.rows(); ++i) {
    for (Eigen::Index c = 0; c < n; ++c) out << format_double(grid.points(i, c)) << ',';
    out << format_double(grid.values(i)) << '\n';
  }
}

void write_bound_report(const std::filesystem::path& path, const BoundReport& rep) {
  std::ofstream out = open_out(path);
  const auto kv = [&](const char* key, double v) { out << key << " = " << format_double(v) << '\n'; };
  out << "[inputs]\n";
  out << "m = " << rep.m << '\n';
  out << "r = " << rep.r << '\n';
  kv("delta", rep.delta);
  kv("gamma", rep.gamma);
  kv("beta", rep.beta);
  kv("qnorm", rep.qnorm);
  out << "heldout_size = " << rep.heldout_size << '\n';
  out << "\n[risk]\n";
  kv("empirical_risk", rep.empirical_risk);
  kv("heldout_risk", rep.heldout_risk);
  out << "\n[generalization]\n";
  kv("eps_x", rep.generalization.eps_x);
  kv("eps_y", rep.generalization.eps_y);
  kv("rho_check", rep.generalization.rho_check);
  kv("risk_bound", rep.empirical_risk + rep.generalization.rho_check);
  out << "\n[operator]\n";
  kv("op_norm", rep.op_norm);
  kv("op_norm_k_congruence", rep.op_norm_k_congruence);
  kv("lambda_max_l", rep.lambda_max_l);
  kv("norm_bound", rep.norm_bound);
  out << "\n[plugin]\n";
  out << "# alpha_bar = max(op_norm, alpha_hat); the true operator norm is not observable\n";
  kv("alpha_hat", rep.alpha_hat);
  kv("alpha_bar", rep.alpha_bar);
  kv("lyapunov_constant", rep.lyapunov_constant);
  kv("lyapunov_bound", rep.lyapunov_bound);
  if (rep.zubov) {
    out << "\n[zubov]\n";
    out << "steps = " << rep.zubov_steps << '\n';
    kv("nu", rep.nu);
    kv("varsigma", rep.varsigma);
    kv("c_nu", rep.c_nu);
    kv("zubov_bound", rep.zubov_bound);
  }
}

}  // namespace wkoopman
