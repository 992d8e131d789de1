#pragma once

#include "amrpbs/pemf.hpp"

#include <optional>
#include <span>
#include <vector>

namespace amrpbs {

/// Relative change |(f_now - f_prev) / f_now|, or the absolute change when
/// |f_now| < 1e-12.
double relative_improvement(double f_now, double f_prev);

/// Relative improvements of one population between iterations t - tau and t,
/// matched by particle identity (index).
struct ImprovementRecord
{
  int iteration;
  std::vector<double> deltas;
};

ImprovementRecord improvement_record(int iteration,
                                     std::span<const double> fitness_now,
                                     std::span<const double> fitness_prev);

/// Gaussian KDE over pooled relative improvements with Silverman's bandwidth.
class ImprovementDistribution
{
public:
  explicit ImprovementDistribution(std::vector<double> points);

  const std::vector<double>& points() const { return points_; }
  double bandwidth() const { return bandwidth_; }
  /// True when every point is identical (no spread to smooth).
  bool degenerate() const { return degenerate_; }
  bool all_zero() const;

  double cdf(double x) const;

private:
  std::vector<double> points_;
  double bandwidth_ = 0.0;
  bool degenerate_ = false;
};

struct KdeQuantile
{
  double value;
  bool degenerate;
};

/// inf{x : p <= cdf(x)} by bisection to 1e-10 of the value range.
KdeQuantile kde_quantile(const ImprovementDistribution& dist, double p);

struct AmrConfig
{
  /// Critical probability (indicator of conservativeness), 0 < p_cr < 1.
  double p_cr = 0.3;
  /// Check period in iterations.
  int tau = 3;
  /// Optional acceptable error level; see p_cr_from_eta.
  std::optional<double> eta;

  void validate() const;
};

struct RefinementDecision
{
  bool refine = false;
  double q_error = 0.0;
  double q_improve = 0.0;
  /// Desired modal error for the refinement; set when refine is true and a
  /// target has been computed.
  std::optional<double> epsilon_target;
};

/// Refine when the p_cr-quantile of the model error is at least the
/// (1 - p_cr)-quantile of the observed improvement. A pool of only zero
/// improvements always refines.
RefinementDecision amr_test(const ErrorModel& error_model,
                            const ImprovementDistribution& improvements,
                            const AmrConfig& cfg);

/// Tightened target error from the history of improvement quantiles:
/// (q_prev / q_now) * epsilon_current with the multiplier clamped to [0.25, 0.95].
double desired_fidelity(double q_now, double q_prev, double epsilon_current);

/// Probability that the model error is below eta under the error law.
double p_cr_from_eta(const LognormalError& error, double eta);

} // namespace amrpbs
