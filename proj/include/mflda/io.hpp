#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mflda/dynamics.hpp"
#include "mflda/geometry.hpp"
#include "mflda/grid.hpp"

namespace mflda {

class ParseError : public Error {
 public:
  using Error::Error;
};

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// CSV with header `x,value`, one row per node.
void write_density_csv(const std::filesystem::path& path, const Density& rho);

/// Reads a density CSV; nodes must start at 0 and be equally spaced.
Density read_density_csv(const std::filesystem::path& path);

nlohmann::json density_array(const Density& rho);
Density density_from_array(const nlohmann::json& values);

/// Long format `t,x,mu,nu`, one row per (snapshot, node).
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec);

/// Snapshots of a long-format trajectory file; the step diagnostics are empty.
TrajectoryRecord read_trajectory_csv(const std::filesystem::path& path);

inline constexpr const char* kMetricsHeader =
    "t,w2_mu,w2_nu,kl_mu,kl_nu,ni,f_value,mass_mu,mass_nu,min_mu,min_nu";
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricSample>& rows);
std::vector<MetricSample> read_metrics_csv(const std::filesystem::path& path);

}  // namespace mflda
