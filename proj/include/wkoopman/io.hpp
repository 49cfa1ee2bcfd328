#pragma once

#include <filesystem>
#include <string>

#include "wkoopman/certificates.hpp"
#include "wkoopman/dynsys.hpp"
#include "wkoopman/estimator.hpp"

namespace wkoopman {

/// 17 significant decimal digits, enough to round-trip any double.
std::string format_double(double v);

/// CSV `x1,...,xn,y1,...,yn[,eta]`.
void write_dataset_csv(const std::filesystem::path& path, const SnapshotDataset& ds);
SnapshotDataset read_dataset_csv(const std::filesystem::path& path);

struct DatasetMetadata {
  std::uint64_t seed = 0;
  double dt = 0.0;
  int m = 0;
  int rejected_count = 0;
  std::string system;
  DomainSpec domain;
};

/// Sidecar in the sectioned key=value config format.
void write_dataset_metadata(const std::filesystem::path& path, const DatasetMetadata& meta);
DatasetMetadata read_dataset_metadata(const std::filesystem::path& path);

/// Conventional sidecar location: `<csv path>.meta`.
std::filesystem::path metadata_path(const std::filesystem::path& csv);

void save_model(const std::filesystem::path& path, const KoopmanModel& model);
KoopmanModel load_model(const std::string& path);

/// CSV `x1,...,xn,value`.
void write_grid_csv(const std::filesystem::path& path, const GridTable& grid,
                    const std::string& value_name = "value");

void write_bound_report(const std::filesystem::path& path, const BoundReport& rep);

}  // namespace wkoopman
