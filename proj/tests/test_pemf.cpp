#include "amrpbs/error.hpp"
#include "amrpbs/pemf.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace amrpbs;

namespace {

// Maximizer of the lognormal density found on a fine grid.
double grid_mode(const LognormalError& d)
{
  double best_x = 0, best = -1;
  for (int i = 1; i < 400000; ++i) {
    const double x = i * 1e-5;
    const double z = (std::log(x) - d.mu) / d.sigma;
    const double pdf = std::exp(-0.5 * z * z) / (x * d.sigma * std::sqrt(2 * std::numbers::pi));
    if (pdf > best) {
      best = pdf;
      best_x = x;
    }
  }
  return best_x;
}

SampleSet grid_data(const std::function<double(double, double)>& f, int per_side)
{
  SampleSet s(2);
  for (int i = 0; i < per_side; ++i)
    for (int j = 0; j < per_side; ++j) {
      const double a = (i + 0.5) / per_side, b = (j + 0.3 * (i % 2) + 0.2) / per_side;
      Vector x(2);
      x << a, b;
      s.add(x, f(a, b));
    }
  return s;
}

Trainer kind_trainer(SurrogateKind kind, kernels::Family family = kernels::Family::gaussian)
{
  KernelSpec k;
  k.family = family;
  return [kind, k](const SampleSet& d) { return train(kind, k, d); };
}

} // namespace

TEST_CASE("modal error of a lognormal")
{
  CHECK(modal_error({0.0, 1e-9}) == doctest::Approx(1.0));
  CHECK(modal_error({0.0, 1.0}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(modal_error({std::log(2.0), 1.0}) == doctest::Approx(2 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(modal_error({0.0, 1.0}) == doctest::Approx(grid_mode({0.0, 1.0})).epsilon(1e-4));
  CHECK(modal_error({std::log(2.0), 1.0}) == doctest::Approx(grid_mode({std::log(2.0), 1.0})).epsilon(1e-4));
}

TEST_CASE("lognormal quantile inverts the cdf")
{
  const LognormalError d{-1.3, 0.7};
  for (double p : {0.01, 0.3, 0.5, 0.9, 0.999})
    CHECK(lognormal_cdf(d, lognormal_quantile(d, p)) == doctest::Approx(p).epsilon(1e-10));
  CHECK(lognormal_quantile(d, 0.5) == doctest::Approx(std::exp(-1.3)));
}

TEST_CASE("lognormal fit by log moments")
{
  Rng rng(1);
  std::lognormal_distribution<double> draw(-2.0, 0.5);
  std::vector<double> e(20000);
  for (auto& x : e)
    x = draw(rng);
  const auto d = fit_lognormal(e);
  CHECK(d.mu == doctest::Approx(-2.0).epsilon(0.02));
  CHECK(d.sigma == doctest::Approx(0.5).epsilon(0.02));

  const std::vector<double> zeros{0.0, 0.0, 1e-12, 0.3, 0.2};
  CHECK_THROWS_AS(fit_lognormal(zeros), DegenerateErrorModel);
}

TEST_CASE("VESD recovers a planted type 1 curve")
{
  Rng rng(42);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> n, e;
  for (int k = 10; k <= 100; k += 10) {
    n.push_back(k);
    e.push_back(0.8 * std::exp(-0.05 * k) * (1 + noise(rng)));
  }
  const auto fit = fit_vesd(n, e);
  CHECK(fit.type == VesdType::type1);
  CHECK(fit.a == doctest::Approx(0.8).epsilon(0.2));
  CHECK(fit.b == doctest::Approx(-0.05).epsilon(0.2));
}

TEST_CASE("VESD recovers a planted type 2 curve")
{
  std::vector<double> n, e;
  for (int k = 10; k <= 100; k += 10) {
    n.push_back(k);
    e.push_back(2 * std::pow(k, -0.7));
  }
  const auto fit = fit_vesd(n, e);
  CHECK(fit.type == VesdType::type2);
  CHECK(fit.b >= -0.9);
  CHECK(fit.b <= -0.5);
  CHECK(fit.a == doctest::Approx(2.0).epsilon(0.2));
  CHECK(fit.residual < 1e-20);
}

TEST_CASE("batch size examples")
{
  CHECK(compute_batch_size({VesdType::type1, 1.0, -0.1, 0.0}, 10, std::exp(-2.0), 100) == 10);
  CHECK(compute_batch_size({VesdType::type2, 2.0, -1.0, 0.0}, 5, 0.1, 100) == 15);
  CHECK(compute_batch_size({VesdType::type1, 1.0, -0.1, 0.0}, 50, 0.9, 100) == 1);
  CHECK(compute_batch_size({VesdType::type1, 1.0, -0.1, 0.0}, 10, 1e-9, 7) == 7);
  CHECK_THROWS_AS(compute_batch_size({VesdType::type1, 1.0, 0.0, 0.0}, 10, 0.1, 5), NonDecreasingError);
  CHECK_THROWS_AS(compute_batch_size({VesdType::type2, 1.0, 0.2, 0.0}, 10, 0.1, 5), NonDecreasingError);
}

TEST_CASE("batch size properties over random fits")
{
  Rng rng(8);
  std::uniform_real_distribution<double> ua(0.05, 3.0), ub(-1.5, -0.01), ueps(1e-3, 1.0);
  std::uniform_int_distribution<int> un(5, 80);
  for (int t = 0; t < 100; ++t) {
    const VesdFit fit{t % 2 ? VesdType::type1 : VesdType::type2, ua(rng), ub(rng) * (t % 2 ? 0.1 : 1.0), 0.0};
    const int n = un(rng);
    const int budget = 100000;
    double lo = ueps(rng), hi = ueps(rng);
    if (lo > hi)
      std::swap(lo, hi);
    const int at_lo = compute_batch_size(fit, n, lo, budget);
    const int at_hi = compute_batch_size(fit, n, hi, budget);
    CHECK(at_lo >= at_hi);
    // Round trip: the predicted error at n + gamma reaches the target unless
    // the clamps bind, and one fewer sample does not.
    for (double eps : {lo, hi}) {
      const int g = compute_batch_size(fit, n, eps, budget);
      if (g > 1 && g < budget) {
        CHECK(fit(n + g) <= eps * (1 + 1e-9));
        CHECK(fit(n + g - 1) > eps * (1 - 1e-9));
      }
      if (g == 1)
        CHECK((fit(n + 1) <= eps * (1 + 1e-9) || fit(n) <= eps));
    }
  }
}

TEST_CASE("error estimation on a smooth function")
{
  const auto data = grid_data([](double a, double b) { return 2 + std::sin(4 * a) * std::cos(3 * b); }, 6);
  const auto m = estimate_error_distribution(data, kind_trainer(SurrogateKind::kriging), 5, 10, 17);
  REQUIRE(m.per_size_errors.size() >= 2);
  for (std::size_t i = 1; i < m.per_size_errors.size(); ++i)
    CHECK(m.per_size_errors[i].n > m.per_size_errors[i - 1].n);
  CHECK(m.per_size_errors.front().n == 18);
  CHECK(m.per_size_errors.back().n <= 33);
  CHECK(m.n_samples == 36);
  CHECK(m.modal_error_at_full > 0);
  CHECK(m.modal_error_at_full == doctest::Approx(m.fit(36)).epsilon(1e-12));
  CHECK(modal_error(m.full) == doctest::Approx(m.modal_error_at_full).epsilon(1e-9));

  const auto again = estimate_error_distribution(data, kind_trainer(SurrogateKind::kriging), 5, 10, 17);
  CHECK(again.fit.a == m.fit.a);
  CHECK(again.fit.b == m.fit.b);
  CHECK(again.full.mu == m.full.mu);
}

TEST_CASE("error estimation collapses on data the surrogate reproduces exactly")
{
  // The RBF tail is linear, so a linear response is reproduced exactly.
  const auto data = grid_data([](double a, double b) { return 1 + a + 2 * b; }, 5);
  CHECK_THROWS_AS(estimate_error_distribution(data, kind_trainer(SurrogateKind::rbf, kernels::Family::cubic), 5, 10, 1),
                  DegenerateErrorModel);
}

TEST_CASE("error estimation input checks")
{
  const auto data = grid_data([](double a, double b) { return a * b; }, 2);
  CHECK_THROWS_AS(estimate_error_distribution(data, kind_trainer(SurrogateKind::kriging), 5, 10, 1), InvalidArgument);
  CHECK_THROWS_AS(estimate_error_distribution(data, kind_trainer(SurrogateKind::kriging), 2, 10, 1), InvalidArgument);
}
