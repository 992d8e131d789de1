#pragma once

#include "amrpbs/benchmarks.hpp"
#include "amrpbs/optimizer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace amrpbs {

/// Writes a run's files into dir (created if needed):
///   trace.csv         iter,gbest,modal_error,refined,n_samples
///   events.csv        iteration,batch_size,epsilon_target
///   checks.csv        every refinement test
///   error_models.csv  every error model fitted
///   batches.csv       every infill point with its acquisition value
///   convergence.dat   iteration and global best, two columns
///   model_error.dat   iteration and modal error, two columns
///   summary.json      final result and refinement events
/// Throws IoError when dir cannot be written.
void emit_outputs(const RunTrace& trace,
                  const std::filesystem::path& dir,
                  const std::string& problem,
                  std::uint64_t seed);

/// runs.csv and table.md.
void emit_experiment1(const Experiment1Table& table, const std::filesystem::path& dir);
/// runs.csv, experiment2.csv and table.md.
void emit_experiment2(const Experiment2Table& table, const std::filesystem::path& dir);
/// runs.csv and summary.json.
void emit_bego(const RunResult& result, const std::filesystem::path& dir);

} // namespace amrpbs
