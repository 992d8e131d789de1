#include "amrpbs/optimizer.hpp"

#include "amrpbs/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace amrpbs {

// ---------------------------------------------------------------------------
// Particle swarm

namespace {

void update_global_best(SwarmState& s)
{
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s.best_values[k] < s.global_best_value) {
      s.global_best_value = s.best_values[k];
      s.global_best_position = s.best_positions[k];
    }
  }
}

Vector uniform_point(const DesignSpace& space, Rng& rng)
{
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector x(space.dims());
  for (Eigen::Index j = 0; j < x.size(); ++j)
    x[j] = space.lower()[j] + unit(rng) * (space.upper()[j] - space.lower()[j]);
  return x;
}

} // namespace

SwarmState init_swarm(const DesignSpace& space, int n_pop, const PopulationFitness& fitness, Rng& rng)
{
  if (n_pop < 1)
    throw InvalidArgument("swarm needs at least one particle");
  SwarmState s;
  for (int k = 0; k < n_pop; ++k) {
    s.positions.push_back(uniform_point(space, rng));
    s.velocities.push_back(Vector::Zero(space.dims()));
  }
  s.fitness = fitness(s.positions);
  s.best_positions = s.positions;
  s.best_values = s.fitness;
  s.stall.assign(static_cast<std::size_t>(n_pop), 0);
  s.global_best_value = std::numeric_limits<double>::infinity();
  s.global_best_position = s.positions.front();
  update_global_best(s);
  s.iteration = 1;
  return s;
}

SwarmState pso_step(SwarmState s, const PopulationFitness& fitness, const DesignSpace& space, Rng& rng, const PsoParams& params)
{
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index d = space.dims();
  for (std::size_t k = 0; k < s.size(); ++k) {
    Vector& x = s.positions[k];
    Vector& v = s.velocities[k];
    for (Eigen::Index j = 0; j < d; ++j) {
      const double r1 = unit(rng);
      const double r2 = unit(rng);
      v[j] = params.inertia * v[j] + params.cognitive * r1 * (s.best_positions[k][j] - x[j]) +
             params.social * r2 * (s.global_best_position[j] - x[j]);
      x[j] += v[j];
      if (x[j] < space.lower()[j]) {
        x[j] = space.lower()[j];
        v[j] = 0.0;
      } else if (x[j] > space.upper()[j]) {
        x[j] = space.upper()[j];
        v[j] = 0.0;
      }
    }
  }
  s.fitness = fitness(s.positions);
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s.fitness[k] < s.best_values[k]) {
      s.best_values[k] = s.fitness[k];
      s.best_positions[k] = s.positions[k];
    }
  }
  update_global_best(s);

  // Diversity preservation.
  std::vector<std::size_t> restarted;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if ((s.positions[k] - s.global_best_position).norm() <= params.stall_radius)
      ++s.stall[k];
    else
      s.stall[k] = 0;
    if (s.stall[k] >= params.stall_limit) {
      s.positions[k] = uniform_point(space, rng);
      s.velocities[k].setZero();
      s.stall[k] = 0;
      restarted.push_back(k);
    }
  }
  if (!restarted.empty()) {
    std::vector<Vector> pts;
    for (auto k : restarted)
      pts.push_back(s.positions[k]);
    const std::vector<double> f = fitness(pts);
    for (std::size_t i = 0; i < restarted.size(); ++i) {
      const auto k = restarted[i];
      s.fitness[k] = f[i];
      if (f[i] < s.best_values[k]) {
        s.best_values[k] = f[i];
        s.best_positions[k] = s.positions[k];
      }
    }
    update_global_best(s);
  }
  ++s.iteration;
  return s;
}

void rescore(SwarmState& s, const PopulationFitness& fitness)
{
  s.fitness = fitness(s.positions);
  s.best_values = fitness(s.best_positions);
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s.fitness[k] < s.best_values[k]) {
      s.best_values[k] = s.fitness[k];
      s.best_positions[k] = s.positions[k];
    }
  }
  s.global_best_value = std::numeric_limits<double>::infinity();
  update_global_best(s);
}

// ---------------------------------------------------------------------------
// Run control

void RunConfig::validate() const
{
  if (n_initial < 1)
    throw InvalidArgument("n_initial must be at least 1");
  if (n_initial > budget)
    throw InvalidArgument("n_initial must not exceed the budget");
  if (n_pop < 2)
    throw InvalidArgument("n_pop must be at least 2");
  if (max_iter < 1)
    throw InvalidArgument("max_iter must be at least 1");
  if (!(delta_f > 0))
    throw InvalidArgument("delta_f must be positive");
  if (stop_window < 1)
    throw InvalidArgument("stop_window must be at least 1");
  if (!(penalty_weight >= 0))
    throw InvalidArgument("penalty_weight must be nonnegative");
  if (pemf_levels < 3 || pemf_repeats < 3)
    throw InvalidArgument("pemf levels and repeats must be at least 3");
  if (candidates.empty())
    throw InvalidArgument("the surrogate candidate pool is empty");
  amr.validate();
}

std::vector<Vector> initial_design(const DesignSpace& space, int n, std::uint64_t seed)
{
  return lhs_sample(space, static_cast<std::size_t>(n), derive_seed(seed, 1));
}

bool stopping_check(const RunTrace& trace, const StopCriteria& c)
{
  if (c.budget && c.evaluations_used >= *c.budget)
    return true;
  const auto& it = trace.iterations;
  if (c.max_iter && !it.empty() && it.back().iteration >= *c.max_iter)
    return true;
  if (c.window < 1 || it.size() < static_cast<std::size_t>(c.window) + 1)
    return false;
  auto value = [&](const IterationRecord& r) {
    return c.monitor == StopMonitor::global_best ? r.global_best : r.population_mean;
  };
  double worst = 0.0;
  for (std::size_t i = it.size() - static_cast<std::size_t>(c.window); i < it.size(); ++i)
    worst = std::max(worst, relative_improvement(value(it[i]), value(it[i - 1])));
  return worst < c.delta_f;
}

TruthBudget::TruthBudget(const Problem& problem, int budget)
  : problem_(&problem)
  , budget_(budget)
{}

std::vector<double> TruthBudget::evaluate(const std::vector<Vector>& xs)
{
  if (used_ + static_cast<int>(xs.size()) > budget_)
    throw BudgetExceeded("true evaluation of " + std::to_string(xs.size()) + " points would exceed the budget (" +
                         std::to_string(used_) + " of " + std::to_string(budget_) + " used)");
  std::vector<double> ys = problem_->evaluate(xs);
  if (ys.size() != xs.size())
    throw EvaluatorFailure("evaluator returned a wrong number of responses");
  for (double y : ys)
    if (!std::isfinite(y))
      throw EvaluatorFailure("evaluator returned a non-finite response");
  used_ += static_cast<int>(xs.size());
  return ys;
}

namespace {

TrainedSurrogate fit_surrogate(const SampleSet& samples, const std::vector<Candidate>& candidates)
{
  if (candidates.size() == 1 || samples.size() >= 2 * static_cast<std::size_t>(samples.dims() + 1))
    return select_model(samples, candidates);
  // Too few samples to cross-validate.
  return train(candidates.front().kind, candidates.front().kernel, samples);
}

std::optional<ErrorModel> fit_error_model(const SampleSet& samples,
                                          const TrainedSurrogate& surrogate,
                                          const RunConfig& cfg,
                                          std::uint64_t seed)
{
  try {
    return estimate_error_distribution(samples, trainer_like(surrogate), cfg.pemf_levels, cfg.pemf_repeats, seed);
  } catch (const DegenerateErrorModel&) {
    return std::nullopt;
  } catch (const InvalidArgument&) {
    return std::nullopt;
  }
}

double mean_of(const std::vector<double>& v)
{
  double s = 0.0;
  for (double e : v)
    s += e;
  return s / static_cast<double>(v.size());
}

ErrorModelRecord error_record(int iteration, const std::optional<ErrorModel>& em)
{
  if (!em)
    return {iteration, true, 0.0, 0.0, 0.0, VesdType::type1};
  return {iteration, false, em->modal_error_at_full, em->fit.a, em->fit.b, em->fit.type};
}

} // namespace

RunTrace run_amr_pbs(const Problem& problem, const RunConfig& cfg)
{
  cfg.validate();
  RunTrace trace;
  TruthBudget truth(problem, cfg.budget);
  SampleSet samples(problem.space);
  const std::vector<Vector> initial = initial_design(problem.space, cfg.n_initial, cfg.seed);

  try {
    // Step 1: initial design, surrogate, error model and swarm.
    const std::vector<double> y0 = truth.evaluate(initial);
    for (std::size_t i = 0; i < initial.size(); ++i)
      samples.add(initial[i], y0[i]);

    TrainedSurrogate surrogate = fit_surrogate(samples, cfg.candidates);
    std::optional<ErrorModel> error_model = fit_error_model(samples, surrogate, cfg, derive_seed(cfg.seed, 3));
    trace.error_models.push_back(error_record(1, error_model));

    const PopulationFitness fitness = [&](const std::vector<Vector>& pts) {
      std::vector<double> f = surrogate.predict(pts);
      if (!problem.constraints.empty())
        for (std::size_t i = 0; i < pts.size(); ++i)
          f[i] += constraint_penalty(problem, pts[i], cfg.penalty_weight);
      return f;
    };

    Rng rng(derive_seed(cfg.seed, 2));
    SwarmState swarm = init_swarm(problem.space, cfg.n_pop, fitness, rng);
    std::vector<std::vector<double>> history{{}, swarm.fitness}; // indexed by iteration
    auto modal = [&] { return error_model ? error_model->modal_error_at_full : 0.0; };
    trace.iterations.push_back({swarm.iteration, swarm.global_best_value, mean_of(swarm.fitness), modal(), false, static_cast<int>(samples.size())});

    int last_check = swarm.iteration;
    std::optional<double> previous_q;
    std::uint64_t event_count = 0;
    const StopCriteria stop{cfg.delta_f, cfg.stop_window, cfg.stop_monitor, cfg.max_iter, std::nullopt, 0};

    while (!stopping_check(trace, stop)) {
      // Step 2: advance the swarm on the surrogate.
      swarm = pso_step(std::move(swarm), fitness, problem.space, rng);
      const int t = swarm.iteration;
      history.push_back(swarm.fitness);
      bool refined = false;

      // Step 4: the refinement test every tau iterations. One evaluation is
      // held back for confirming the final optimum.
      const int infill_budget = truth.remaining() - 1;
      if (t - last_check >= cfg.amr.tau && infill_budget >= 1) {
        last_check = t;
        const ImprovementRecord rec = improvement_record(t, history[static_cast<std::size_t>(t)],
                                                         history[static_cast<std::size_t>(t - cfg.amr.tau)]);
        const ImprovementDistribution improvements(rec.deltas);
        RefinementDecision decision;
        if (error_model) {
          decision = amr_test(*error_model, improvements, cfg.amr);
        } else {
          // Collapsed error: the surrogate reproduces its data; nothing to refine.
          decision.q_improve = improvements.all_zero() ? 0.0 : kde_quantile(improvements, 1.0 - cfg.amr.p_cr).value;
        }
        if (decision.refine)
          decision.epsilon_target =
            desired_fidelity(decision.q_improve, previous_q.value_or(decision.q_improve), error_model->modal_error_at_full);
        trace.checks.push_back({t, decision.q_error, decision.q_improve, decision.refine, decision.epsilon_target});
        previous_q = decision.q_improve;

        if (decision.refine) {
          // Step 5: batch size, sampling range, batch location, truth, retrain.
          int gamma = 1;
          try {
            gamma = compute_batch_size(error_model->fit, static_cast<int>(samples.size()), *decision.epsilon_target,
                                       infill_budget);
          } catch (const NonDecreasingError&) {
            gamma = 1;
          }
          SamplingRange range = cfg.range_rule == RangeRule::population
                                  ? population_range(problem.space, swarm.positions)
                                  : update_sampling_range(problem.space, swarm.positions, samples);
          if (!(range.width().array() > 0).any())
            range = update_sampling_range(problem.space, swarm.positions, samples);
          const Batch batch = select_batch(samples, range, gamma, derive_seed(cfg.seed, 1000 + event_count));
          const std::vector<double> yb = truth.evaluate(batch.points);
          for (std::size_t i = 0; i < batch.points.size(); ++i)
            if (!samples.find(batch.points[i]))
              samples.add(batch.points[i], yb[i]);

          surrogate = fit_surrogate(samples, cfg.candidates);
          error_model = fit_error_model(samples, surrogate, cfg, derive_seed(cfg.seed, 2000 + event_count));
          trace.error_models.push_back(error_record(t, error_model));
          rescore(swarm, fitness);
          history.back() = swarm.fitness;

          trace.events.push_back({t, gamma, *decision.epsilon_target});
          trace.batches.push_back({t, batch.points, batch.acquisition});
          refined = true;
          ++event_count;
        }
      }
      trace.iterations.push_back({t, swarm.global_best_value, mean_of(swarm.fitness), modal(), refined, static_cast<int>(samples.size())});
    }

    FinalResult& fin = trace.final;
    fin.best_point = swarm.global_best_position;
    fin.predicted = surrogate.predict(fin.best_point);
    fin.surrogate = surrogate.describe();
    if (auto i = samples.find(fin.best_point)) {
      fin.true_value = samples.response(*i);
    } else if (truth.remaining() >= 1) {
      const double y = truth.evaluate({fin.best_point}).front();
      fin.true_value = y;
      samples.add(fin.best_point, y);
    }
  } catch (const EvaluatorFailure& e) {
    trace.aborted = true;
    trace.abort_reason = e.what();
  }

  FinalResult& fin = trace.final;
  fin.evaluations = truth.used();
  if (!samples.empty()) {
    const std::size_t best = best_sample_index(problem, samples, cfg.penalty_weight);
    fin.best_sample_point = samples.point(best);
    fin.best_sample_value = samples.response(best);
  }
  return trace;
}

} // namespace amrpbs
