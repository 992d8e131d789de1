#pragma once

#include "amrpbs/surrogate.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace amrpbs {

/// Lognormal law of the relative surrogate error: log(error) ~ N(mu, sigma²).
struct LognormalError
{
  double mu = 0.0;
  double sigma = 1.0;
};

/// Mode exp(mu - sigma²) of the lognormal error.
double modal_error(const LognormalError& dist);
double lognormal_cdf(const LognormalError& dist, double x);
double lognormal_quantile(const LognormalError& dist, double p);

/// Moment matching on log-errors. Errors below 1e-10 count as zero and are
/// dropped; fewer than three positive errors throws DegenerateErrorModel.
LognormalError fit_lognormal(std::span<const double> errors);

/// Variation of error with sample density.
enum class VesdType
{
  type1, ///< eps(n) = a * exp(b n)
  type2  ///< eps(n) = a * n^b
};

std::string to_string(VesdType type);

struct VesdFit
{
  VesdType type = VesdType::type1;
  double a = 1.0;
  double b = -1.0;
  /// Sum of squared residuals in log space.
  double residual = 0.0;

  double operator()(double n) const;
};

/// Least-squares fit of both VESD forms to (n, error) pairs in log space;
/// returns the form with the lower residual (type1 on ties).
VesdFit fit_vesd(std::span<const double> n, std::span<const double> error);

struct LevelError
{
  int n;
  LognormalError dist;
};

struct ErrorModel
{
  /// Sorted by strictly increasing training size.
  std::vector<LevelError> per_size_errors;
  VesdFit fit;
  int n_samples = 0;
  /// VESD fit evaluated at n_samples.
  double modal_error_at_full = 0.0;
  /// Error law at the full sample size: the spread of the largest level with
  /// its location shifted so that its mode equals modal_error_at_full.
  LognormalError full;
};

using Trainer = std::function<TrainedSurrogate(const SampleSet&)>;

/// Trainer refitting the kind and kernel family of an existing model.
Trainer trainer_like(const TrainedSurrogate& model);

inline constexpr int default_pemf_levels = 5;
inline constexpr int default_pemf_repeats = 10;

/// Resampled sub-model error estimation. For each level k the sub-models are
/// trained on random subsets of size n_k = round(N (0.5 + 0.5 (k-1)/levels)),
/// capped at N-3, and scored by relative absolute error on the held-out
/// points. Throws DegenerateErrorModel when held-out errors vanish.
ErrorModel estimate_error_distribution(const SampleSet& data,
                                       const Trainer& trainer,
                                       int levels,
                                       int repeats,
                                       std::uint64_t seed);

/// Samples to add so the VESD prediction reaches epsilon_target, clamped to
/// [1, budget_remaining]. Throws NonDecreasingError when fit.b >= 0.
int compute_batch_size(const VesdFit& fit, int n_current, double epsilon_target, int budget_remaining);

} // namespace amrpbs
