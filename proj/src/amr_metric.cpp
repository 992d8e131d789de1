#include "amrpbs/amr_metric.hpp"

#include "amrpbs/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace amrpbs {

double relative_improvement(double f_now, double f_prev)
{
  if (std::abs(f_now) < 1e-12)
    return std::abs(f_now - f_prev);
  return std::abs((f_now - f_prev) / f_now);
}

ImprovementRecord improvement_record(int iteration,
                                     std::span<const double> fitness_now,
                                     std::span<const double> fitness_prev)
{
  if (fitness_now.size() != fitness_prev.size())
    throw InvalidArgument("improvement record needs matched populations");
  ImprovementRecord rec{iteration, std::vector<double>(fitness_now.size())};
  for (std::size_t k = 0; k < fitness_now.size(); ++k)
    rec.deltas[k] = relative_improvement(fitness_now[k], fitness_prev[k]);
  return rec;
}

namespace {

double sample_quantile(std::vector<double> sorted, double p)
{
  // linear interpolation between order statistics
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

ImprovementDistribution::ImprovementDistribution(std::vector<double> points)
  : points_(std::move(points))
{
  if (points_.empty())
    throw InvalidArgument("improvement distribution needs at least one point");
  for (double v : points_)
    if (!std::isfinite(v))
      throw InvalidArgument("improvement distribution points must be finite");
  std::sort(points_.begin(), points_.end());
  const auto n = static_cast<double>(points_.size());
  const double mean = std::accumulate(points_.begin(), points_.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : points_)
    ss += (v - mean) * (v - mean);
  const double sd = points_.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double iqr = sample_quantile(points_, 0.75) - sample_quantile(points_, 0.25);
  double spread = sd;
  if (iqr > 0)
    spread = std::min(sd, iqr / 1.34);
  bandwidth_ = 0.9 * spread * std::pow(n, -0.2);
  degenerate_ = !(points_.back() > points_.front()) || !(bandwidth_ > 0);
  if (degenerate_)
    bandwidth_ = 0.0;
}

bool ImprovementDistribution::all_zero() const
{
  return points_.front() == 0.0 && points_.back() == 0.0;
}

double ImprovementDistribution::cdf(double x) const
{
  if (degenerate_)
    return x >= points_.front() ? 1.0 : 0.0;
  double s = 0.0;
  const double scale = 1.0 / (bandwidth_ * std::sqrt(2.0));
  for (double v : points_)
    s += 0.5 * std::erfc(-(x - v) * scale);
  return s / static_cast<double>(points_.size());
}

KdeQuantile kde_quantile(const ImprovementDistribution& dist, double p)
{
  if (!(p > 0 && p < 1))
    throw InvalidArgument("quantile probability must lie in (0, 1)");
  if (dist.degenerate())
    return {dist.points().front(), true};
  const double h = dist.bandwidth();
  double lo = dist.points().front() - 40.0 * h;
  double hi = dist.points().back() + 40.0 * h;
  const double tol = 1e-10 * (hi - lo);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (p <= dist.cdf(mid))
      hi = mid;
    else
      lo = mid;
  }
  return {hi, false};
}

void AmrConfig::validate() const
{
  if (!(p_cr > 0 && p_cr < 1))
    throw InvalidArgument("p_cr must lie in (0, 1)");
  if (tau < 1)
    throw InvalidArgument("tau must be at least 1");
  if (eta && !(*eta > 0))
    throw InvalidArgument("eta must be positive");
}

RefinementDecision amr_test(const ErrorModel& error_model,
                            const ImprovementDistribution& improvements,
                            const AmrConfig& cfg)
{
  cfg.validate();
  RefinementDecision d;
  d.q_error = lognormal_quantile(error_model.full, cfg.p_cr);
  if (improvements.all_zero()) {
    d.q_improve = 0.0;
    d.refine = true;
    return d;
  }
  d.q_improve = kde_quantile(improvements, 1.0 - cfg.p_cr).value;
  d.refine = d.q_error >= d.q_improve;
  return d;
}

double desired_fidelity(double q_now, double q_prev, double epsilon_current)
{
  if (!(epsilon_current > 0))
    throw InvalidArgument("current modal error must be positive");
  double multiplier = 0.25;
  if (q_now > 1e-12)
    multiplier = std::clamp(q_prev / q_now, 0.25, 0.95);
  return multiplier * epsilon_current;
}

double p_cr_from_eta(const LognormalError& error, double eta)
{
  if (!(eta > 0))
    throw InvalidArgument("eta must be positive");
  return lognormal_cdf(error, eta);
}

} // namespace amrpbs
