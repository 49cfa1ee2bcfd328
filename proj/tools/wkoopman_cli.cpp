#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wkoopman/config.hpp"
#include "wkoopman/error.hpp"
#include "wkoopman/pipeline.hpp"

namespace fs = std::filesystem;
using namespace wkoopman;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "run configuration (INI)");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "override sampling.seed");
  cmd->add_option("--out", c.out, "override output.dir");
  cmd->add_flag("--quiet", c.quiet, "suppress progress output");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = load_config(c.config);
  if (c.seed) cfg.sampling.seed = *c.seed;
  if (c.out) cfg.out_dir = *c.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman and Zubov-Koopman operator learning in weighted RKHS"};
  app.require_subcommand(1);

  Common common;
  std::string dataset, model, heldout, example;

  auto* sample = app.add_subcommand("sample", "draw a snapshot dataset");
  add_common(sample, common, true);

  auto* fit = app.add_subcommand("fit", "fit the finite-rank operator");
  add_common(fit, common, true);
  fit->add_option("--dataset", dataset, "dataset CSV (default <out>/dataset.csv)");

  auto* lyap = app.add_subcommand("lyapunov", "Lyapunov estimate on a grid with bound report");
  add_common(lyap, common, true);
  lyap->add_option("--model", model, "model file (default <out>/model.txt)");

  auto* zubov = app.add_subcommand("zubov", "Zubov estimate on a grid with bound report");
  add_common(zubov, common, true);
  zubov->add_option("--model", model, "model file (default <out>/model.txt)");

  auto* report = app.add_subcommand("report", "generalization and plug-in bound report");
  add_common(report, common, true);
  report->add_option("--model", model, "model file (default <out>/model.txt)");
  report->add_option("--heldout", heldout, "held-out dataset CSV (default: fresh draw with seed + 1)");

  auto* repro = app.add_subcommand("reproduce", "full pipeline for a reference example");
  repro->add_option("example", example, "example1 or example2")->required();
  repro->add_option("--seed", common.seed, "override the sampling seed");
  repro->add_option("--out", common.out, "artifact directory (default: the example name)");
  repro->add_flag("--quiet", common.quiet, "suppress progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const Console con{common.quiet};
    if (*repro) {
      cmd_reproduce(example, common.seed, common.out ? fs::path(*common.out) : fs::path(example), con);
      return 0;
    }
    const RunConfig cfg = resolve(common);
    const auto or_default = [&](const std::string& given, const char* name) {
      return given.empty() ? cfg.out_dir / name : fs::path(given);
    };
    if (*sample) cmd_sample(cfg, con);
    else if (*fit) cmd_fit(cfg, or_default(dataset, artifacts::kDataset), con);
    else if (*lyap) cmd_lyapunov(cfg, or_default(model, artifacts::kModel), con);
    else if (*zubov) cmd_zubov(cfg, or_default(model, artifacts::kModel), con);
    else if (*report)
      cmd_report(cfg, or_default(model, artifacts::kModel),
                 heldout.empty() ? std::nullopt : std::optional<fs::path>(heldout), con);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
