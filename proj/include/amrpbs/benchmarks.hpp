#pragma once

#include "amrpbs/batch_sampler.hpp"
#include "amrpbs/optimizer.hpp"
#include "amrpbs/problem.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace amrpbs {

/// Three-hump camel on [-5, 5]^2; minimum 0 at the origin.
double three_hump(const Vector& x);
/// Branin-Hoo on [-5, 10] x [0, 15]; minimum 0.397887 at three points.
double branin(const Vector& x);
/// Six-dimensional Hartmann on the unit cube; minimum -3.32237.
double hartmann6(const Vector& x);

Problem three_hump_problem();
Problem branin_problem();
Problem hartmann6_problem();

// Riblet stand-in: x = (h, s, sigma) with h in [0.2, 0.6], s in [0.72, 3.6],
// sigma in [0.12, 0.46]. The drag surface is a smooth analytic invention
// whose unconstrained minimum violates sigma <= 0.6 h, so the constraints bind.
double riblet_drag(const Vector& x);
std::vector<Objective> riblet_constraints();
DesignSpace riblet_space();
Problem riblet_problem();

enum class Method
{
  amr_pbs,
  bego
};

std::string to_string(Method method);

struct RunResult
{
  Method method = Method::amr_pbs;
  std::string function;
  std::uint64_t seed = 0;
  Vector point;
  double value = 0.0;
  double rae = 0.0;
  int n_initial = 0;
  int evaluations = 0;
};

/// |found - f_star| / max(|f_star|, 1).
double compute_rae(double found, double f_star);

/// Sequential single-point EI on a kriging model over the whole design space,
/// from the same initial design as run_amr_pbs with this seed. The result is
/// the best observed sample.
RunResult run_bego(const Problem& problem,
                   int n_initial,
                   int budget,
                   std::uint64_t seed,
                   const InnerOptimizerSettings& settings = {});

/// run_amr_pbs reported as a RunResult: the best observed sample.
RunResult run_amr(const Problem& problem, const RunConfig& cfg);

struct BenchmarkSpec
{
  std::string name;
  Problem problem;
  int n_initial;
  int n_final;
  int n_runs;
};

/// Benchmark rows by name: three-hump, branin, hartmann6.
BenchmarkSpec benchmark_spec(const std::string& name);
std::vector<std::string> benchmark_names();

struct MethodSummary
{
  std::string function;
  Method method;
  int runs;
  double median_rae;
  double max_rae;
};

struct WinLoss
{
  std::string function;
  int amr_wins = 0;
  int bego_wins = 0;
  int ties = 0;

  double win_rate() const;
};

struct Experiment1Table
{
  std::vector<RunResult> runs;
  std::vector<MethodSummary> summary;
  std::vector<WinLoss> wins;
};

/// Run settings for the comparison study: the defaults with a kriging-only
/// surrogate pool, so AMR-PBS and BEGO share one model family.
RunConfig benchmark_config();

/// One seed of the comparison: AMR-PBS, then BEGO from the same initial
/// design with exactly the number of true evaluations AMR-PBS consumed.
std::vector<RunResult> compare_on_seed(const BenchmarkSpec& spec, std::uint64_t seed, const RunConfig& base = benchmark_config());

/// For every spec and seed, runs AMR-PBS (with `base` supplying everything
/// but n_initial, budget and seed) and then BEGO with exactly the number of
/// true evaluations AMR-PBS consumed. An empty seed list means seeds
/// 1..spec.n_runs.
Experiment1Table experiment1(const std::vector<BenchmarkSpec>& specs,
                             const std::vector<std::uint64_t>& seeds,
                             const RunConfig& base = benchmark_config());

/// Summaries of a flat run list, grouped by function then method.
Experiment1Table tabulate(std::vector<RunResult> runs);

struct Experiment2Row
{
  int n_initial;
  int runs;
  double median_rae;
  double max_rae;
};

struct Experiment2Table
{
  std::vector<RunResult> runs;
  std::vector<Experiment2Row> rows;
};

/// Rows of median and max RAE per initial sample size, in order of first
/// appearance.
Experiment2Table tabulate_experiment2(std::vector<RunResult> runs);

/// The settings for the initial-sample-size study on Hartmann6.
RunConfig experiment2_config();

/// AMR-PBS on Hartmann6 for each initial sample size under a fixed total
/// budget.
Experiment2Table experiment2(const std::vector<int>& n0_values,
                             int budget,
                             const std::vector<std::uint64_t>& seeds,
                             const RunConfig& base = experiment2_config());

double median(std::vector<double> values);

/// method,function,seed,rae,evals
void write_runs_csv(std::ostream& out, const std::vector<RunResult>& runs);
void write_experiment1_markdown(std::ostream& out, const Experiment1Table& table);
void write_experiment2_csv(std::ostream& out, const Experiment2Table& table);
void write_experiment2_markdown(std::ostream& out, const Experiment2Table& table);

} // namespace amrpbs
