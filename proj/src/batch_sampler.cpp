#include "amrpbs/batch_sampler.hpp"

#include "amrpbs/error.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>

namespace amrpbs {

namespace {

constexpr double min_sigma = 1e-12;
constexpr double min_penalizer_std = 1e-9;
constexpr double min_separation = 1e-9;
constexpr int lipschitz_block = 100;
constexpr Eigen::Index max_corner_dims = 8;

double normal_cdf(double u)
{
  return 0.5 * std::erfc(-u / std::numbers::sqrt2);
}

double normal_pdf(double u)
{
  return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

// log Phi(z), stable for very negative z.
double log_normal_cdf(double z)
{
  const double t = -z / std::numbers::sqrt2;
  if (t > 25.0)
    return std::log(0.5) - t * t - std::log(t * std::sqrt(std::numbers::pi)) + std::log1p(-0.5 / (t * t));
  return std::log(0.5 * std::erfc(t));
}

std::vector<Vector> range_lhs(const SamplingRange& range, std::size_t n, std::uint64_t seed)
{
  const Eigen::Index d = range.dims();
  const DesignSpace unit(Vector::Zero(d), Vector::Ones(d));
  std::vector<Vector> pts = lhs_sample(unit, n, seed);
  const Vector w = range.width();
  for (auto& p : pts)
    p = range.lower + p.cwiseProduct(w);
  return pts;
}

double golden_section_max(const std::function<double(double)>& f, double a, double b, double tol, double& best_t)
{
  constexpr double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  double best = std::max(fc, fd);
  best_t = fc >= fd ? c : d;
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      if (fc > best) {
        best = fc;
        best_t = c;
      }
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      if (fd > best) {
        best = fd;
        best_t = d;
      }
    }
  }
  return best;
}

Maximum refine_coordinatewise(const std::function<double(const Vector&)>& acquisition,
                              const SamplingRange& range,
                              Maximum start,
                              const InnerOptimizerSettings& settings)
{
  const Vector width = range.width();
  Vector trial = start.x;
  double half = settings.initial_window;
  for (int level = 0; level < settings.sweeps; ++level, half *= 0.1) {
    for (int pass = 0; pass < settings.passes; ++pass) {
      bool moved = false;
      for (Eigen::Index j = 0; j < range.dims(); ++j) {
        if (!(width[j] > 0))
          continue;
        const double a = std::max(range.lower[j], start.x[j] - half * width[j]);
        const double b = std::min(range.upper[j], start.x[j] + half * width[j]);
        if (!(b > a))
          continue;
        trial = start.x;
        auto line = [&](double t) {
          trial[j] = t;
          return acquisition(trial);
        };
        double best_t = start.x[j];
        const double v = golden_section_max(line, a, b, settings.tolerance * width[j], best_t);
        if (v > start.value) {
          start.value = v;
          start.x[j] = best_t;
          moved = true;
        }
      }
      if (!moved)
        break;
    }
  }
  return start;
}

} // namespace

double expected_improvement(double mean_g, double sigma, double incumbent_g)
{
  if (!(sigma >= min_sigma))
    return 0.0;
  const double u = (mean_g - incumbent_g) / sigma;
  const double ei = (u * normal_cdf(u) + normal_pdf(u)) * sigma;
  // Analytically positive whenever sigma > 0; keep underflow off the softplus branch.
  return std::max(ei, std::numeric_limits<double>::min());
}

double expected_improvement(const TrainedSurrogate& gp, const Vector& x, double incumbent_g)
{
  const Posterior p = gp.posterior(x);
  return expected_improvement(-p.mean, std::sqrt(std::max(0.0, p.variance)), incumbent_g);
}

double softplus_floor(double alpha)
{
  if (alpha > 0)
    return alpha;
  return std::log1p(std::exp(alpha));
}

double estimate_lipschitz(const TrainedSurrogate& gp, const SamplingRange& range, int probes, std::uint64_t seed)
{
  if (probes < lipschitz_block)
    throw InvalidArgument("Lipschitz estimation needs at least 100 probes");
  double best = 1e-6;
  for (int block = 0, done = 0; done < probes; ++block) {
    const int n = std::min(lipschitz_block, probes - done);
    for (const auto& x : range_lhs(range, static_cast<std::size_t>(n), derive_seed(seed, static_cast<std::uint64_t>(block))))
      best = std::max(best, gp.posterior(x).mean_gradient.norm());
    done += n;
  }
  return best;
}

double local_penalizer(const Vector& x, const Vector& x_i, double mean_i, double std_i, double lipschitz, double extremum)
{
  const double s = std::max(std_i, min_penalizer_std);
  const double z = (lipschitz * (x - x_i).norm() - extremum + mean_i) / std::sqrt(2.0 * s * s);
  return 0.5 * std::erfc(-z);
}

namespace {

double log_penalizer(const Vector& x, const ChosenPoint& c, double lipschitz, double extremum)
{
  const double s = std::max(c.std, min_penalizer_std);
  const double z = (lipschitz * (x - c.x).norm() - extremum + c.mean_g) / s;
  return log_normal_cdf(z);
}

double log_penalized(const AcquisitionState& st, const Vector& x)
{
  double v = std::log(st.base(x));
  for (const auto& c : st.chosen)
    v += log_penalizer(x, c, st.lipschitz, st.extremum);
  return v;
}

} // namespace

double AcquisitionState::base(const Vector& x) const
{
  return softplus_floor(expected_improvement(gp, x, incumbent));
}

double AcquisitionState::penalized(const Vector& x) const
{
  return std::exp(log_penalized(*this, x));
}

void AcquisitionState::choose(const Vector& x)
{
  const Posterior p = gp.posterior(x);
  chosen.push_back({x, -p.mean, std::sqrt(std::max(0.0, p.variance))});
}

AcquisitionState make_acquisition(const SampleSet& data, const SamplingRange& range, std::uint64_t seed)
{
  if (data.empty())
    throw InvalidArgument("batch sampling needs data");
  TrainedSurrogate gp = train(SurrogateKind::kriging, KernelSpec{}, data);
  double incumbent = -std::numeric_limits<double>::infinity();
  for (double y : data.responses())
    incumbent = std::max(incumbent, -y);
  const double lipschitz = estimate_lipschitz(gp, range, default_lipschitz_probes, derive_seed(seed, 1));
  return AcquisitionState{std::move(gp), incumbent, lipschitz, incumbent, {}};
}

Maximum maximize_acquisition(const std::function<double(const Vector&)>& acquisition,
                             const SamplingRange& range,
                             std::uint64_t seed,
                             const InnerOptimizerSettings& settings)
{
  const Vector width = range.width();
  if (!(width.array() > 0).any())
    throw CannotSample("sampling range is degenerate in every dimension");
  const auto n_starts = static_cast<std::size_t>(std::max<Eigen::Index>(1, settings.screen_per_dim * range.dims()));
  std::vector<Vector> starts = range_lhs(range, n_starts, seed);
  // Acquisitions often peak on the boundary, where a Latin hypercube never
  // lands; screen the corners of the range as well.
  if (range.dims() <= max_corner_dims) {
    const auto n_corners = std::size_t{1} << range.dims();
    for (std::size_t mask = 0; mask < n_corners; ++mask) {
      Vector c = range.lower;
      for (Eigen::Index j = 0; j < range.dims(); ++j)
        if (mask >> j & 1u)
          c[j] = range.upper[j];
      starts.push_back(c);
    }
  }

  std::vector<double> values(starts.size());
  const auto ns = static_cast<std::ptrdiff_t>(starts.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < ns; ++i)
    values[static_cast<std::size_t>(i)] = acquisition(starts[static_cast<std::size_t>(i)]);

  std::vector<std::size_t> order(starts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] > values[b]; });
  const auto n_refine = std::min<std::size_t>(
    order.size(), static_cast<std::size_t>(std::max<Eigen::Index>(1, settings.starts_per_dim * range.dims())));

  std::vector<Maximum> refined(n_refine);
  const auto nr = static_cast<std::ptrdiff_t>(n_refine);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < nr; ++k) {
    const std::size_t i = order[static_cast<std::size_t>(k)];
    refined[static_cast<std::size_t>(k)] = refine_coordinatewise(acquisition, range, {starts[i], values[i]}, settings);
  }
  Maximum best = refined.front();
  for (const auto& m : refined)
    if (m.value > best.value)
      best = m;
  return best;
}

Batch select_batch(const SampleSet& data,
                   const SamplingRange& range,
                   int batch_size,
                   std::uint64_t seed,
                   const InnerOptimizerSettings& settings)
{
  if (batch_size < 1)
    throw InvalidArgument("batch size must be at least 1");
  if (range.dims() != data.dims())
    throw InvalidArgument("sampling range and data differ in dimension");
  const Vector width = range.width();
  if (!(width.array() > 0).any())
    throw CannotSample("sampling range is degenerate in every dimension");

  AcquisitionState state = make_acquisition(data, range, seed);
  Batch batch;
  batch.lipschitz = state.lipschitz;
  const auto acquisition = [&state](const Vector& x) { return log_penalized(state, x); };

  auto too_close = [&](const Vector& x) {
    for (const auto& p : data.points())
      if ((p - x).norm() < min_separation)
        return true;
    for (const auto& c : state.chosen)
      if ((c.x - x).norm() < min_separation)
        return true;
    return false;
  };

  for (int i = 0; i < batch_size; ++i) {
    const Maximum m = maximize_acquisition(acquisition, range, derive_seed(seed, 100 + static_cast<std::uint64_t>(i)), settings);
    Vector x = m.x;
    for (int attempt = 0; too_close(x) && attempt < 64; ++attempt) {
      // Step off the duplicate along the widest free directions, staying in range.
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (!(width[j] > 0))
          continue;
        const double step = 1e-6 * width[j] * (1 + attempt);
        x[j] = x[j] + step <= range.upper[j] ? x[j] + step : x[j] - step;
        x[j] = std::clamp(x[j], range.lower[j], range.upper[j]);
      }
      if (attempt == 0) {
        ++batch.perturbed;
        std::cerr << "amrpbs: warning: batch point " << i << " duplicated an existing point; perturbed by 1e-6 of the range width\n";
      }
    }
    batch.acquisition.push_back(std::exp(acquisition(x)));
    state.choose(x);
    batch.points.push_back(x);
  }
  return batch;
}

} // namespace amrpbs
