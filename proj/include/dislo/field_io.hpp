#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dislo/analysis.hpp"
#include "dislo/grid.hpp"
#include "dislo/hj.hpp"
#include "dislo/nonlocal.hpp"

namespace dislo::io {

/// Field snapshot file:
///   dislo-field v1; dim=N; n=n1[,n2[,n3]]; lo=...; hi=...; t=<time>
/// followed by node values in row-major order, one per line, 17 significant
/// digits.
void write_field(const std::filesystem::path& path, const ScalarField& field);
ScalarField read_field(const std::filesystem::path& path);

/// Snapshot files <prefix>_NNN.field plus <prefix>_index.txt with one
/// "time file" row per snapshot.
void write_trajectory(const std::filesystem::path& dir, const hj::Trajectory& traj,
                      const std::string& prefix);

void write_indicator_density(const std::filesystem::path& dir,
                             const nonlocal::IndicatorDensity& rho, const std::string& prefix);

/// One "name,t,lhs,rhs,margin,pass" row per report.
void write_report(const std::filesystem::path& path,
                  std::span<const analysis::EstimateReport> reports);

}  // namespace dislo::io
