#include "amrpbs/pemf.hpp"

#include "amrpbs/error.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace amrpbs {

namespace {

constexpr double zero_error = 1e-10;
constexpr double min_sigma = 1e-12;
constexpr double relative_error_floor = 1e-8;

double standard_normal_quantile(double p)
{
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

struct LineFit
{
  double slope;
  double intercept;
  double sse;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y)
{
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f{sxy / sxx, 0.0, 0.0};
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.sse += r * r;
  }
  return f;
}

} // namespace

double modal_error(const LognormalError& dist)
{
  return std::exp(dist.mu - dist.sigma * dist.sigma);
}

double lognormal_cdf(const LognormalError& dist, double x)
{
  if (x <= 0)
    return 0.0;
  return 0.5 * std::erfc(-(std::log(x) - dist.mu) / (dist.sigma * std::sqrt(2.0)));
}

double lognormal_quantile(const LognormalError& dist, double p)
{
  if (!(p > 0 && p < 1))
    throw InvalidArgument("quantile probability must lie in (0, 1)");
  return std::exp(dist.mu + dist.sigma * standard_normal_quantile(p));
}

LognormalError fit_lognormal(std::span<const double> errors)
{
  std::vector<double> logs;
  logs.reserve(errors.size());
  for (double e : errors)
    if (e > zero_error && std::isfinite(e))
      logs.push_back(std::log(e));
  if (logs.size() < 3)
    throw DegenerateErrorModel("fewer than three non-zero held-out errors; the error distribution collapses");
  const auto n = static_cast<double>(logs.size());
  const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
  double ss = 0.0;
  for (double l : logs)
    ss += (l - mean) * (l - mean);
  return {mean, std::max(std::sqrt(ss / (n - 1.0)), min_sigma)};
}

std::string to_string(VesdType type)
{
  return type == VesdType::type1 ? "type1" : "type2";
}

double VesdFit::operator()(double n) const
{
  return type == VesdType::type1 ? a * std::exp(b * n) : a * std::pow(n, b);
}

VesdFit fit_vesd(std::span<const double> n, std::span<const double> error)
{
  if (n.size() != error.size() || n.size() < 2)
    throw InvalidArgument("VESD fit needs at least two (n, error) pairs");
  std::vector<double> log_e(error.size()), log_n(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(error[i] > 0) || !(n[i] > 0))
      throw InvalidArgument("VESD fit needs positive sizes and errors");
    log_e[i] = std::log(error[i]);
    log_n[i] = std::log(n[i]);
  }
  const LineFit t1 = least_squares(n, log_e);
  const LineFit t2 = least_squares(log_n, log_e);
  if (t2.sse < t1.sse)
    return {VesdType::type2, std::exp(t2.intercept), t2.slope, t2.sse};
  return {VesdType::type1, std::exp(t1.intercept), t1.slope, t1.sse};
}

Trainer trainer_like(const TrainedSurrogate& model)
{
  KernelSpec spec = model.kernel();
  spec.length_scale = Vector();
  const SurrogateKind kind = model.kind();
  return [kind, spec](const SampleSet& data) { return train(kind, spec, data); };
}

ErrorModel estimate_error_distribution(const SampleSet& data,
                                       const Trainer& trainer,
                                       int levels,
                                       int repeats,
                                       std::uint64_t seed)
{
  if (levels < 3 || repeats < 3)
    throw InvalidArgument("error estimation needs levels >= 3 and repeats >= 3");
  const int total = static_cast<int>(data.size());
  const int dims = static_cast<int>(data.dims());
  if (total < levels + dims + 2)
    throw InvalidArgument("error estimation needs at least levels + dims + 2 = " + std::to_string(levels + dims + 2) +
                          " samples, got " + std::to_string(total));

  std::vector<int> sizes;
  for (int k = 1; k <= levels; ++k) {
    const double frac = 0.5 + 0.5 * static_cast<double>(k - 1) / levels;
    int n = static_cast<int>(std::lround(total * frac));
    n = std::clamp(n, dims + 1, total - 3);
    if (sizes.empty() || n > sizes.back())
      sizes.push_back(n);
  }
  if (sizes.size() < 2)
    throw InvalidArgument("error estimation produced fewer than two distinct training sizes");

  const int jobs = static_cast<int>(sizes.size()) * repeats;
  std::vector<std::vector<double>> job_errors(static_cast<std::size_t>(jobs));
#pragma omp parallel for schedule(dynamic)
  for (int job = 0; job < jobs; ++job) {
    const int level = job / repeats;
    const int rep = job % repeats;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(level) * 100003u + static_cast<std::uint64_t>(rep)));
    std::shuffle(order.begin(), order.end(), rng);
    const auto n = static_cast<std::size_t>(sizes[static_cast<std::size_t>(level)]);
    const std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    try {
      const TrainedSurrogate m = trainer(data.subset(train_idx));
      auto& out = job_errors[static_cast<std::size_t>(job)];
      for (std::size_t i = n; i < order.size(); ++i) {
        const double y = data.response(order[i]);
        out.push_back(std::abs(y - m.predict(data.point(order[i]))) / std::max(std::abs(y), relative_error_floor));
      }
    } catch (const Error&) {
      // a failed sub-model contributes no errors
    }
  }

  ErrorModel model;
  model.n_samples = total;
  std::vector<double> ns, modes;
  for (std::size_t level = 0; level < sizes.size(); ++level) {
    std::vector<double> pooled;
    for (int rep = 0; rep < repeats; ++rep) {
      const auto& e = job_errors[level * static_cast<std::size_t>(repeats) + static_cast<std::size_t>(rep)];
      pooled.insert(pooled.end(), e.begin(), e.end());
    }
    const LognormalError dist = fit_lognormal(pooled);
    model.per_size_errors.push_back({sizes[level], dist});
    ns.push_back(sizes[level]);
    modes.push_back(modal_error(dist));
  }
  model.fit = fit_vesd(ns, modes);
  model.modal_error_at_full = model.fit(total);
  const double sigma = model.per_size_errors.back().dist.sigma;
  model.full = {std::log(model.modal_error_at_full) + sigma * sigma, sigma};
  return model;
}

int compute_batch_size(const VesdFit& fit, int n_current, double epsilon_target, int budget_remaining)
{
  if (!(epsilon_target > 0))
    throw InvalidArgument("target error must be positive");
  if (budget_remaining < 1)
    throw InvalidArgument("batch sizing needs a remaining budget of at least one sample");
  if (!(fit.b < 0))
    throw NonDecreasingError("VESD slope b = " + std::to_string(fit.b) + " is not negative; more samples do not reduce error");
  const double t = (std::log(epsilon_target) - std::log(fit.a)) / fit.b;
  const double n_needed = fit.type == VesdType::type1 ? t : std::exp(std::min(t, 700.0));
  // Absorb round-off so an exact solution (e.g. 20.000000000000004) is not pushed up a step.
  const double ceiled = std::ceil(n_needed - 1e-9 * std::max(1.0, std::abs(n_needed)));
  const double raw = ceiled - n_current;
  if (!(raw >= 1))
    return 1;
  if (raw >= budget_remaining)
    return budget_remaining;
  return static_cast<int>(raw);
}

} // namespace amrpbs
