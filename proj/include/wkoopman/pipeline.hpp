#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "wkoopman/certificates.hpp"
#include "wkoopman/config.hpp"

namespace wkoopman {

struct Console {
  bool quiet = false;
  std::ostream* out = nullptr;  // defaults to std::cout
  std::ostream* err = nullptr;  // defaults to std::cerr

  void info(const std::string& line) const;
  void warn(const std::string& line) const;
};

/// Fixed file names inside the output directory.
namespace artifacts {
inline constexpr const char* kDataset = "dataset.csv";
inline constexpr const char* kModel = "model.txt";
inline constexpr const char* kLyapunovGrid = "lyapunov_grid.csv";
inline constexpr const char* kLyapunovReport = "lyapunov_report.txt";
inline constexpr const char* kZubovGrid = "zubov_grid.csv";
inline constexpr const char* kZubovReport = "zubov_report.txt";
inline constexpr const char* kBoundReport = "bound_report.txt";
}  // namespace artifacts

/// Held-out draw: same distribution as training, seed + 1.
SnapshotDataset heldout_dataset(const RunConfig& cfg);

/// Training pairs recovered from a model's anchors.
SnapshotDataset anchor_dataset(const KoopmanModel& model);

std::filesystem::path cmd_sample(const RunConfig& cfg, const Console& con);
std::filesystem::path cmd_fit(const RunConfig& cfg, const std::filesystem::path& dataset, const Console& con);
std::filesystem::path cmd_lyapunov(const RunConfig& cfg, const std::filesystem::path& model_path,
                                   const Console& con);
std::filesystem::path cmd_zubov(const RunConfig& cfg, const std::filesystem::path& model_path,
                                const Console& con);
BoundReport cmd_report(const RunConfig& cfg, const std::filesystem::path& model_path,
                       const std::optional<std::filesystem::path>& heldout, const Console& con);

/// Full pipeline for "example1" or "example2" with the reference settings.
void cmd_reproduce(const std::string& example, const std::optional<std::uint64_t>& seed,
                   const std::filesystem::path& out_dir, const Console& con);

}  // namespace wkoopman
