#pragma once

#include "amrpbs/optimizer.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace amrpbs {

enum class Command
{
  run,
  experiment1,
  experiment2,
  bego
};

std::string to_string(Command command);

/// A parsed `key = value` configuration.
///
/// Only the keys present in the text are stored, each in normalized form;
/// everything else takes its default when a RunConfig is built. Keys:
///
///   command            run | experiment1 | experiment2 | bego
///   problem            three-hump | branin | hartmann6 | riblet
///   evaluator          external evaluator command line (program and arguments)
///   lower, upper       bounds for a problem answered only by the evaluator
///   out                output directory
///   n_initial, budget, n_pop, max_iter, delta_f, stop_window, seed,
///   penalty_weight, pemf_levels, pemf_repeats, p_cr, tau, eta
///   stop_on            population-mean | global-best
///   sampling_range     population | population+samples
///   surrogates         comma list of rbf-gaussian, rbf-multiquadric,
///                      rbf-cubic, kriging
///   functions          comma list of benchmarks for experiment1
///   runs               seeds per benchmark (seed, seed + 1, ...)
///   n0_values          comma list of initial sample sizes for experiment2
///   experiment2_budget total budget for experiment2
struct CliConfig
{
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  const std::string& get(const std::string& key) const { return values.at(key); }

  Command command() const;
  std::string problem() const;
  std::string out_dir() const;

  /// `base` overridden by every run setting present.
  RunConfig run_config(RunConfig base = {}) const;

  friend bool operator==(const CliConfig&, const CliConfig&) = default;
};

/// Defaults of the keys that are not RunConfig fields.
inline constexpr const char* default_problem = "branin";
inline constexpr const char* default_out_dir = "amrpbs-out";

/// Throws ConfigError naming the offending line.
CliConfig parse_config(const std::string& text);
std::string render_config(const CliConfig& config);

/// Applies one `key = value` setting with the same validation as parsing.
void set_value(CliConfig& config, const std::string& key, const std::string& value, int line = 0);

std::vector<Candidate> parse_candidates(const std::string& list);
std::vector<std::string> split_list(const std::string& list);

} // namespace amrpbs
