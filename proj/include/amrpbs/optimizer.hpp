#pragma once

#include "amrpbs/amr_metric.hpp"
#include "amrpbs/batch_sampler.hpp"
#include "amrpbs/pemf.hpp"
#include "amrpbs/problem.hpp"
#include "amrpbs/surrogate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace amrpbs {

/// Particle swarm. Index k is the particle identity for the whole run.
struct SwarmState
{
  std::vector<Vector> positions;
  std::vector<Vector> velocities;
  /// Fitness at the current positions.
  std::vector<double> fitness;
  std::vector<Vector> best_positions;
  std::vector<double> best_values;
  Vector global_best_position;
  double global_best_value = 0.0;
  int iteration = 1;
  /// Consecutive iterations each particle has sat on the global best.
  std::vector<int> stall;

  std::size_t size() const { return positions.size(); }
};

struct PsoParams
{
  double inertia = 0.729;
  double cognitive = 1.494;
  double social = 1.494;
  int stall_limit = 10;
  double stall_radius = 1e-9;
};

/// Fitness of a whole population.
using PopulationFitness = std::function<std::vector<double>(const std::vector<Vector>&)>;

/// Uniform random positions, zero velocities, bests from the initial fitness.
SwarmState init_swarm(const DesignSpace& space, int n_pop, const PopulationFitness& fitness, Rng& rng);

/// One inertia-weight update with bound clipping (the clipped velocity
/// component is zeroed), best tracking, and re-initialization of particles
/// stuck on the global best for stall_limit iterations.
SwarmState pso_step(SwarmState swarm,
                    const PopulationFitness& fitness,
                    const DesignSpace& space,
                    Rng& rng,
                    const PsoParams& params = {});

/// Re-evaluates current and personal-best fitness under a new fitness
/// function and recomputes the global best.
void rescore(SwarmState& swarm, const PopulationFitness& fitness);

/// Which series the convergence test watches.
enum class StopMonitor
{
  global_best,
  population_mean
};

/// Where refinement batches are drawn from.
enum class RangeRule
{
  /// The box spanned by the current swarm.
  population,
  /// The box spanned by the swarm and every existing sample.
  population_and_samples
};

struct RunConfig
{
  int n_initial = 20;
  int budget = 30;
  int n_pop = 30;
  int max_iter = 100;
  double delta_f = 1e-4;
  /// Consecutive iteration pairs the global best must stay within delta_f.
  int stop_window = 5;
  StopMonitor stop_monitor = StopMonitor::population_mean;
  RangeRule range_rule = RangeRule::population;
  std::vector<Candidate> candidates = default_candidates();
  AmrConfig amr;
  std::uint64_t seed = 1;
  double penalty_weight = default_penalty_weight;
  int pemf_levels = default_pemf_levels;
  int pemf_repeats = default_pemf_repeats;

  void validate() const;
};

struct IterationRecord
{
  int iteration;
  double global_best;
  /// Mean surrogate fitness of the population.
  double population_mean;
  double modal_error;
  bool refined;
  int n_samples;
};

struct RefinementEvent
{
  int iteration;
  int batch_size;
  double epsilon_target;
};

struct AmrCheck
{
  int iteration;
  double q_error;
  double q_improve;
  bool refine;
  std::optional<double> epsilon_target;
};

struct ErrorModelRecord
{
  int iteration;
  bool degenerate;
  double modal_error;
  double a;
  double b;
  VesdType type;
};

struct BatchRecord
{
  int iteration;
  std::vector<Vector> points;
  std::vector<double> acquisition;
};

struct FinalResult
{
  Vector best_point;
  double predicted = 0.0;
  std::optional<double> true_value;
  /// Best true response among every evaluated sample.
  Vector best_sample_point;
  double best_sample_value = 0.0;
  int evaluations = 0;
  std::string surrogate;
};

struct RunTrace
{
  std::vector<IterationRecord> iterations;
  std::vector<RefinementEvent> events;
  std::vector<AmrCheck> checks;
  std::vector<ErrorModelRecord> error_models;
  std::vector<BatchRecord> batches;
  FinalResult final;
  bool aborted = false;
  std::string abort_reason;
};

struct StopCriteria
{
  double delta_f = 1e-4;
  int window = 5;
  StopMonitor monitor = StopMonitor::global_best;
  std::optional<int> max_iter;
  /// With both set, stops once the evaluations used reach the budget.
  std::optional<int> budget;
  int evaluations_used = 0;
};

/// True once the monitored value moved less than delta_f (relative) across
/// each of the last `window` consecutive iteration pairs, or a limit is reached.
bool stopping_check(const RunTrace& trace, const StopCriteria& criteria);

/// Counts true evaluations and refuses any that would exceed the budget.
class TruthBudget
{
public:
  TruthBudget(const Problem& problem, int budget);

  std::vector<double> evaluate(const std::vector<Vector>& xs);
  int used() const { return used_; }
  int budget() const { return budget_; }
  int remaining() const { return budget_ - used_; }

private:
  const Problem* problem_;
  int budget_;
  int used_ = 0;
};

/// The Latin hypercube design a run with this seed starts from.
std::vector<Vector> initial_design(const DesignSpace& space, int n, std::uint64_t seed);

/// Surrogate-based optimization with adaptive model refinement and
/// penalized batch sampling.
RunTrace run_amr_pbs(const Problem& problem, const RunConfig& cfg);

} // namespace amrpbs
