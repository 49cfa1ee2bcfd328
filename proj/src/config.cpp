#include "wkoopman/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "wkoopman/error.hpp"
#include "wkoopman/io.hpp"

namespace wkoopman {

namespace {

using boost::property_tree::ptree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"system", {"kind", "dimension", "contraction"}},
      {"domain", {"kind", "radius", "lo", "hi"}},
      {"sampling", {"m", "seed", "dt"}},
      {"kernel", {"kind", "gamma"}},
      {"weight", {"kind", "exponent", "floor"}},
      {"eta", {"kind", "scale"}},
      {"rrr", {"beta_mode", "beta", "rank", "realness_tol", "normalization"}},
      {"certificate", {"mode", "tolerance", "max_power", "nu", "varsigma", "horizon", "delta"}},
      {"grid", {"resolution"}},
      {"output", {"dir"}},
  };
  return keys;
}

template <typename T>
T get_or(const ptree& tree, const std::string& key, T fallback) {
  const auto node = tree.get_optional<std::string>(key);
  if (!node) return fallback;
  std::istringstream in(*node);
  T value{};
  if (!(in >> value) || !(in >> std::ws).eof())
    fail(ErrorKind::Config, "config key '" + key + "': cannot parse '" + *node + "'");
  return value;
}

Vector parse_vector(const std::string& text, const std::string& key) {
  std::vector<double> vals;
  std::istringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    std::istringstream c(cell);
    double v = 0.0;
    if (!(c >> v)) fail(ErrorKind::Config, "config key '" + key + "': bad number '" + cell + "'");
    vals.push_back(v);
  }
  Vector out(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) out(static_cast<Eigen::Index>(i)) = vals[i];
  return out;
}

std::string join(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v(i));
  return s;
}

}  // namespace

void RunConfig::validate() const {
  try {
    system.validate();
    domain.validate();
    if (domain.dimension != system.dimension)
      fail(ErrorKind::Config, "domain dimension does not match system.dimension");
    if (sampling.m < 1) fail(ErrorKind::Config, "sampling.m must be >= 1");
    if (!(sampling.dt > 0.0)) fail(ErrorKind::Config, "sampling.dt must be positive");
    kernel.validate();
    if (eta) eta->validate();
    rrr.validate();
    if (rrr.rank > sampling.m) fail(ErrorKind::Config, "rrr.rank exceeds sampling.m");
    if (certificate.mode == CertificateMode::Zubov && !eta)
      fail(ErrorKind::Config, "certificate.mode = zubov requires an [eta] section");
    if (!(certificate.tolerance > 0.0)) fail(ErrorKind::Config, "certificate.tolerance must be positive");
    if (certificate.max_power < 1) fail(ErrorKind::Config, "certificate.max_power must be >= 1");
    if (!(certificate.nu >= 1.0)) fail(ErrorKind::Config, "certificate.nu must be >= 1");
    if (!(certificate.varsigma > 0.0)) fail(ErrorKind::Config, "certificate.varsigma must be positive");
    if (!(certificate.horizon >= 0.0)) fail(ErrorKind::Config, "certificate.horizon must be >= 0");
    if (!(certificate.delta > 0.0 && certificate.delta < 1.0))
      fail(ErrorKind::Config, "certificate.delta must lie in (0, 1)");
    if (grid_resolution < 1) fail(ErrorKind::Config, "grid.resolution must be >= 1");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, e.what());
  }
}

RunConfig parse_config(const std::string& text) {
  ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ptree_error& e) {
    fail(ErrorKind::Config, std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) fail(ErrorKind::Config, "config: unknown section [" + section + "]");
    if (body.empty() && !body.data().empty())
      fail(ErrorKind::Config, "config: key '" + section + "' outside a section");
    for (const auto& [key, _] : body)
      if (!it->second.count(key)) fail(ErrorKind::Config, "config: unknown key " + section + "." + key);
  }

  RunConfig cfg;
  cfg.system.kind = parse_system_kind(get_or<std::string>(tree, "system.kind", "example1"));
  cfg.system.dimension = get_or(tree, "system.dimension", 2);
  cfg.system.contraction = get_or(tree, "system.contraction", 0.5);

  const DomainKind dk = parse_domain_kind(get_or<std::string>(tree, "domain.kind", "ball"));
  if (dk == DomainKind::Ball) {
    cfg.domain = DomainSpec::ball(cfg.system.dimension, get_or(tree, "domain.radius", 2.0));
  } else {
    const auto lo = tree.get_optional<std::string>("domain.lo");
    const auto hi = tree.get_optional<std::string>("domain.hi");
    if (!lo || !hi) fail(ErrorKind::Config, "box domain requires domain.lo and domain.hi");
    cfg.domain = DomainSpec::box(parse_vector(*lo, "domain.lo"), parse_vector(*hi, "domain.hi"));
  }

  cfg.sampling.m = get_or(tree, "sampling.m", cfg.sampling.m);
  cfg.sampling.seed = get_or(tree, "sampling.seed", cfg.sampling.seed);
  cfg.sampling.dt = get_or(tree, "sampling.dt", cfg.sampling.dt);

  cfg.kernel.kernel.kind = parse_kernel_kind(get_or<std::string>(tree, "kernel.kind", "gaussian"));
  cfg.kernel.kernel.gamma = get_or(tree, "kernel.gamma", cfg.kernel.kernel.gamma);
  cfg.kernel.weight.kind = parse_weight_kind(get_or<std::string>(tree, "weight.kind", "norm-power"));
  cfg.kernel.weight.exponent = get_or(tree, "weight.exponent", cfg.kernel.weight.exponent);
  cfg.kernel.weight.floor = get_or(tree, "weight.floor", cfg.kernel.weight.floor);

  if (tree.get_child_optional("eta")) {
    EtaSpec eta;
    if (get_or<std::string>(tree, "eta.kind", "quadratic-norm") != "quadratic-norm")
      fail(ErrorKind::Config, "unknown eta.kind");
    eta.scale = get_or(tree, "eta.scale", eta.scale);
    cfg.eta = eta;
  }

  const std::string beta_mode = get_or<std::string>(tree, "rrr.beta_mode", "relative");
  if (beta_mode == "relative") cfg.rrr.beta_mode = BetaMode::Relative;
  else if (beta_mode == "absolute") cfg.rrr.beta_mode = BetaMode::Absolute;
  else fail(ErrorKind::Config, "unknown rrr.beta_mode '" + beta_mode + "'");
  cfg.rrr.beta = get_or(tree, "rrr.beta", cfg.rrr.beta);
  cfg.rrr.rank = get_or(tree, "rrr.rank", 50);
  cfg.rrr.realness_tol = get_or(tree, "rrr.realness_tol", cfg.rrr.realness_tol);
  cfg.rrr.normalization = parse_normalization(get_or<std::string>(tree, "rrr.normalization", "consistent"));

  const std::string mode = get_or<std::string>(tree, "certificate.mode", "lyapunov");
  if (mode == "lyapunov") cfg.certificate.mode = CertificateMode::Lyapunov;
  else if (mode == "zubov") cfg.certificate.mode = CertificateMode::Zubov;
  else fail(ErrorKind::Config, "unknown certificate.mode '" + mode + "'");
  cfg.certificate.tolerance = get_or(tree, "certificate.tolerance", cfg.certificate.tolerance);
  cfg.certificate.max_power = get_or(tree, "certificate.max_power", cfg.certificate.max_power);
  cfg.certificate.nu = get_or(tree, "certificate.nu", cfg.certificate.nu);
  cfg.certificate.varsigma = get_or(tree, "certificate.varsigma", cfg.certificate.varsigma);
  cfg.certificate.horizon = get_or(tree, "certificate.horizon", cfg.certificate.horizon);
  cfg.certificate.delta = get_or(tree, "certificate.delta", cfg.certificate.delta);

  cfg.grid_resolution = get_or(tree, "grid.resolution", cfg.grid_resolution);
  cfg.out_dir = get_or<std::string>(tree, "output.dir", "out");
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string render_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[system]\nkind = " << to_string(cfg.system.kind) << "\ndimension = " << cfg.system.dimension
      << "\ncontraction = " << format_double(cfg.system.contraction) << "\n\n";
  out << "[domain]\nkind = " << to_string(cfg.domain.kind) << '\n';
  if (cfg.domain.kind == DomainKind::Ball) out << "radius = " << format_double(cfg.domain.radius) << '\n';
  else out << "lo = " << join(cfg.domain.lo) << "\nhi = " << join(cfg.domain.hi) << '\n';
  out << "\n[sampling]\nm = " << cfg.sampling.m << "\nseed = " << cfg.sampling.seed
      << "\ndt = " << format_double(cfg.sampling.dt) << "\n\n";
  out << "[kernel]\nkind = " << to_string(cfg.kernel.kernel.kind)
      << "\ngamma = " << format_double(cfg.kernel.kernel.gamma) << "\n\n";
  out << "[weight]\nkind = " << to_string(cfg.kernel.weight.kind)
      << "\nexponent = " << format_double(cfg.kernel.weight.exponent)
      << "\nfloor = " << format_double(cfg.kernel.weight.floor) << "\n\n";
  if (cfg.eta) out << "[eta]\nkind = quadratic-norm\nscale = " << format_double(cfg.eta->scale) << "\n\n";
  out << "[rrr]\nbeta_mode = " << (cfg.rrr.beta_mode == BetaMode::Relative ? "relative" : "absolute")
      << "\nbeta = " << format_double(cfg.rrr.beta) << "\nrank = " << cfg.rrr.rank
      << "\nrealness_tol = " << format_double(cfg.rrr.realness_tol)
      << "\nnormalization = " << to_string(cfg.rrr.normalization) << "\n\n";
  out << "[certificate]\nmode = " << (cfg.certificate.mode == CertificateMode::Zubov ? "zubov" : "lyapunov")
      << "\ntolerance = " << format_double(cfg.certificate.tolerance)
      << "\nmax_power = " << cfg.certificate.max_power << "\nnu = " << format_double(cfg.certificate.nu)
      << "\nvarsigma = " << format_double(cfg.certificate.varsigma)
      << "\nhorizon = " << format_double(cfg.certificate.horizon)
      << "\ndelta = " << format_double(cfg.certificate.delta) << "\n\n";
  out << "[grid]\nresolution = " << cfg.grid_resolution << "\n\n";
  out << "[output]\ndir = " << cfg.out_dir.string() << '\n';
  return out.str();
}

RunConfig example1_config() {
  RunConfig cfg;
  cfg.system.kind = SystemKind::Example1;
  cfg.system.dimension = 2;
  cfg.domain = DomainSpec::ball(2, 2.0);
  cfg.sampling = {500, 42, 0.05};
  cfg.kernel.kernel.gamma = 4.0;
  cfg.kernel.weight = {WeightKind::NormPower, 1.0, 1e-8};
  cfg.rrr.beta_mode = BetaMode::Relative;
  cfg.rrr.beta = 0.01;
  cfg.rrr.rank = 50;
  cfg.certificate.mode = CertificateMode::Lyapunov;
  cfg.out_dir = "example1";
  return cfg;
}

RunConfig example2_config() {
  RunConfig cfg;
  cfg.system.kind = SystemKind::Example2;
  cfg.system.dimension = 2;
  cfg.domain = DomainSpec::box(Vector::Constant(2, -2.0), Vector::Constant(2, 2.0));
  cfg.sampling = {500, 42, 0.025};
  cfg.kernel.kernel.gamma = 4.0;
  cfg.kernel.weight = {WeightKind::NormPower, 0.5, 1e-8};
  cfg.eta = EtaSpec{EtaKind::QuadraticNorm, 0.5};
  cfg.rrr.beta_mode = BetaMode::Relative;
  cfg.rrr.beta = 0.01;
  cfg.rrr.rank = 50;
  cfg.certificate.mode = CertificateMode::Zubov;
  cfg.certificate.horizon = 0.15;
  cfg.out_dir = "example2";
  return cfg;
}

}  // namespace wkoopman
