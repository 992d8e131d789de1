#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace amrpbs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// Mixes a run seed with a stream id so that independent consumers of
/// randomness (LHS, swarm, batch sampler, ...) never share a sequence.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Axis-aligned box of admissible designs.
class DesignSpace
{
public:
  DesignSpace(Vector lower, Vector upper);

  Eigen::Index dims() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Vector width() const { return upper_ - lower_; }

  bool contains(const Vector& x, double tol = 0.0) const;
  Vector clip(Vector x) const;

private:
  Vector lower_;
  Vector upper_;
};

/// Paired design points and high-fidelity responses.
///
/// Points are kept pairwise distinct (per-coordinate tolerance 1e-12) so the
/// kernel systems built from them stay non-singular. When constructed from a
/// DesignSpace, every point must also lie inside it.
class SampleSet
{
public:
  static constexpr double duplicate_tolerance = 1e-12;

  explicit SampleSet(Eigen::Index dims);
  explicit SampleSet(const DesignSpace& space);

  void add(const Vector& x, double y);
  /// Index of an existing point equal to x within the duplicate tolerance.
  std::optional<std::size_t> find(const Vector& x) const;

  std::size_t size() const { return responses_.size(); }
  bool empty() const { return responses_.empty(); }
  Eigen::Index dims() const { return dims_; }

  const std::vector<Vector>& points() const { return points_; }
  const std::vector<double>& responses() const { return responses_; }
  const Vector& point(std::size_t i) const { return points_[i]; }
  double response(std::size_t i) const { return responses_[i]; }

  /// Row-major copy of the points, one row per sample.
  Matrix point_matrix() const;
  Vector response_vector() const;

  std::size_t best_index() const;
  SampleSet subset(const std::vector<std::size_t>& indices) const;

private:
  Eigen::Index dims_;
  std::optional<DesignSpace> space_;
  std::vector<Vector> points_;
  std::vector<double> responses_;
};

using Objective = std::function<double(const Vector&)>;
using BatchObjective = std::function<std::vector<double>(const std::vector<Vector>&)>;

enum class CostModel
{
  cheap_analytic,
  expensive_external
};

struct KnownOptimum
{
  Vector argmin;
  double value;
};

/// An objective to minimize over a DesignSpace, with inequality constraints
/// g_i(x) <= 0.
struct Problem
{
  std::string name;
  DesignSpace space;
  Objective objective;
  /// Optional whole-batch evaluator; used in preference to `objective` for
  /// batches (external evaluators answer a batch with one child process).
  BatchObjective batch_objective;
  std::vector<Objective> constraints;
  std::optional<KnownOptimum> known_optimum;
  CostModel cost_model = CostModel::cheap_analytic;

  double evaluate(const Vector& x) const;
  /// Evaluates all points; analytic objectives are dispatched concurrently,
  /// so `objective` must be reentrant.
  std::vector<double> evaluate(const std::vector<Vector>& xs) const;
};

inline constexpr double default_penalty_weight = 1e3;

/// Static quadratic penalty term: weight * sum_i max(0, g_i(x))^2.
double constraint_penalty(const Problem& problem, const Vector& x, double penalty_weight);

/// f(x) plus the quadratic constraint penalty.
double penalized_objective(const Problem& problem, const Vector& x, double penalty_weight);

/// True when every constraint holds within tol.
bool feasible(const Problem& problem, const Vector& x, double tol = 0.0);

/// Best sample of a constrained problem: the lowest response among feasible
/// samples, or the lowest penalized response when none is feasible.
std::size_t best_sample_index(const Problem& problem, const SampleSet& samples, double penalty_weight);

/// Latin hypercube design: one point per equal-width stratum in every dimension.
std::vector<Vector> lhs_sample(const DesignSpace& space, std::size_t n, std::uint64_t seed);

/// Box from which infill points are drawn.
struct SamplingRange
{
  Vector lower;
  Vector upper;

  Eigen::Index dims() const { return lower.size(); }
  Vector width() const { return upper - lower; }
  bool contains(const Vector& x, double tol = 0.0) const;
};

/// Per dimension, the min/max over the union of the population and the
/// existing samples, clipped to the design space.
SamplingRange update_sampling_range(const DesignSpace& space,
                                    const std::vector<Vector>& population,
                                    const SampleSet& samples);

/// Per dimension, the min/max spanned by the population alone, clipped to
/// the design space.
SamplingRange population_range(const DesignSpace& space, const std::vector<Vector>& population);

/// Subprocess evaluator: writes one design point per line (space-separated
/// decimals) to the child's stdin and reads one response per line from its
/// stdout. One child process is spawned per batch.
class ExternalEvaluator
{
public:
  explicit ExternalEvaluator(std::string command, std::vector<std::string> args = {});

  std::vector<double> operator()(const std::vector<Vector>& points) const;
  double operator()(const Vector& x) const;

  const std::string& command() const { return command_; }

private:
  std::string command_;
  std::vector<std::string> args_;
};

/// Formats a real with enough digits to round-trip exactly.
std::string format_real(double v);

} // namespace amrpbs
