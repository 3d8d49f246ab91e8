#pragma once

// Deterministic CSV/JSON emission for records and ensemble summaries.

#include "fermimon/trajectory.hpp"

#include "json.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace fermimon {

/// Shortest round-trip decimal representation.
std::string format_double(double x);

void write_text(const std::string& path, const std::string& body);
void write_json(const std::string& path, const nlohmann::json& j);

/// t, norm2, N_ph[, purity], observable columns; one row per snapshot.
std::string record_csv(const TrajectoryRecord& rec);
nlohmann::json record_sidecar(const TrajectoryRecord& rec);

/// Per-time median and quartiles of the scalar columns shared by all records
/// (S_Q first when present), plus the mean photocount. Uses the common time prefix.
std::string summary_csv(const std::vector<TrajectoryRecord>& records);

/// Long format: trajectory, t, variable, value.
std::string plot_data_csv(const std::vector<TrajectoryRecord>& records);

/// Linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> v, double q);

}  // namespace fermimon
