#pragma once

#include "amrpbs/kernels.hpp"
#include "amrpbs/problem.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace amrpbs {

enum class SurrogateKind
{
  rbf,
  kriging
};

std::string to_string(SurrogateKind kind);
std::string to_string(kernels::Family family);

inline constexpr double default_nugget = 1e-8;

struct KernelSpec
{
  kernels::Family family = kernels::Family::gaussian;
  /// Per-dimension length scales. Empty means "fit from the data"; a single
  /// entry is broadcast to every dimension.
  Vector length_scale;
  double regularization = default_nugget;
};

/// Posterior of a kriging model at one point.
struct Posterior
{
  double mean;
  double variance;
  Vector mean_gradient;
};

/// A fitted predictor. Immutable after training and safe to share.
///
/// RBF models interpolate with a linear polynomial tail,
///   f(x) = sum_i w_i phi(|x - x_i|) + c_0 + c^T x,
/// and store [w; c_0; c] as their weights. Kriging models are ordinary
/// kriging with a constant trend and the gaussian correlation; their
/// weights are R^{-1}(y - mu 1).
class TrainedSurrogate
{
public:
  SurrogateKind kind() const { return kind_; }
  const KernelSpec& kernel() const { return kernel_; }
  const SampleSet& training() const { return training_; }
  const Vector& weights() const { return weights_; }
  /// Kriging only; zero for RBF models.
  double process_variance() const { return process_variance_; }
  double trend_mean() const { return trend_mean_; }
  /// Concentrated log marginal likelihood (kriging) or negative LOO
  /// sum of squares (RBF) at the chosen length scale.
  double fit_score() const { return fit_score_; }

  double predict(const Vector& x) const;
  /// Batch prediction; parallel over the points.
  std::vector<double> predict(const std::vector<Vector>& xs) const;
  Vector gradient(const Vector& x) const;
  Posterior posterior(const Vector& x) const;

  std::string describe() const;

private:
  friend TrainedSurrogate train(SurrogateKind, const KernelSpec&, const SampleSet&);
  friend TrainedSurrogate read_model(std::istream&);

  TrainedSurrogate(SurrogateKind kind, KernelSpec kernel, SampleSet training);
  void check_dims(const Vector& x) const;

  SurrogateKind kind_;
  KernelSpec kernel_;
  SampleSet training_;
  kernels::RowMatrix points_;
  Vector inv_scale_;
  Vector weights_;
  double process_variance_ = 0.0;
  double trend_mean_ = 0.0;
  double fit_score_ = 0.0;
  Eigen::LLT<Matrix> factor_;
};

/// Fits a surrogate. Unspecified length scales are chosen over 25 log-spaced
/// multiples in [1e-2, 1e1] of the per-dimension data range: kriging by
/// maximum concentrated log marginal likelihood, RBF by minimum
/// leave-one-out error.
TrainedSurrogate train(SurrogateKind kind, const KernelSpec& kernel, const SampleSet& data);

double predict(const TrainedSurrogate& model, const Vector& x);
/// Posterior mean, variance and analytic mean gradient; kriging only.
Posterior gp_posterior(const TrainedSurrogate& model, const Vector& x);

struct Candidate
{
  SurrogateKind kind;
  KernelSpec kernel;
};

/// RBF x {gaussian, multiquadric, cubic} and kriging x {gaussian}.
std::vector<Candidate> default_candidates();

inline constexpr std::uint64_t model_selection_seed = 0x5eedc0de;

/// Median absolute held-out error of a candidate under 5-fold cross-validation.
double cross_validation_error(const SampleSet& data, const Candidate& candidate, std::uint64_t seed = model_selection_seed);

/// Picks the candidate with the smallest 5-fold median absolute error and
/// retrains it on all data. Ties go to the earlier candidate.
TrainedSurrogate select_model(const SampleSet& data,
                              std::span<const Candidate> candidates,
                              std::uint64_t seed = model_selection_seed);

/// Self-describing text checkpoint: kind, kernel, hyperparameters,
/// training data and weights.
void write_model(std::ostream& out, const TrainedSurrogate& model);
TrainedSurrogate read_model(std::istream& in);

} // namespace amrpbs
