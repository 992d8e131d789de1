#include "amrpbs/amr_metric.hpp"
#include "amrpbs/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace amrpbs;

namespace {

// An error model whose full-size p-quantile equals q.
ErrorModel error_with_quantile(double q, double p, double sigma = 0.5)
{
  ErrorModel m;
  LognormalError unit{0.0, sigma};
  m.full = {std::log(q) - std::log(lognormal_quantile(unit, p)), sigma};
  m.modal_error_at_full = modal_error(m.full);
  return m;
}

// Two points whose KDE (1 - p)-quantile is known by symmetry: the midpoint
// at p = 0.5.
ImprovementDistribution symmetric_pair(double centre)
{
  return ImprovementDistribution({centre - 0.05, centre + 0.05});
}

} // namespace

TEST_CASE("relative improvement")
{
  CHECK(relative_improvement(2, 3) == 0.5);
  CHECK(relative_improvement(0, 0.4) == 0.4);
  CHECK(relative_improvement(1.7, 1.7) == 0.0);
  CHECK(relative_improvement(-2, -1) == 0.5);
  const std::vector<double> now{1, 2}, prev{2, 2};
  const auto rec = improvement_record(7, now, prev);
  CHECK(rec.iteration == 7);
  CHECK(rec.deltas == std::vector<double>{1.0, 0.0});
}

TEST_CASE("KDE quantile examples")
{
  const ImprovementDistribution pair({0.0, 1.0});
  CHECK(kde_quantile(pair, 0.5).value == doctest::Approx(0.5).epsilon(0).scale(1).epsilon(1e-6));
  CHECK(kde_quantile(pair, 1 - 1e-9).value >= 1.0);

  Rng rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> pts(1000);
  for (auto& x : pts)
    x = u(rng);
  auto sorted = pts;
  std::sort(sorted.begin(), sorted.end());
  const double empirical = sorted[899];
  const double q = kde_quantile(ImprovementDistribution(pts), 0.9).value;
  CHECK(std::abs(q - 0.9) <= 0.05);
  CHECK(std::abs(q - empirical) <= 0.05);
}

TEST_CASE("KDE quantile of identical points is flagged degenerate")
{
  const ImprovementDistribution same({0.3, 0.3, 0.3});
  CHECK(same.degenerate());
  const auto q = kde_quantile(same, 0.7);
  CHECK(q.degenerate);
  CHECK(q.value == 0.3);
  CHECK_THROWS_AS(kde_quantile(same, 1.0), InvalidArgument);
}

TEST_CASE("KDE quantile is monotone in p")
{
  Rng rng(9);
  std::exponential_distribution<double> e(3.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> pts(40);
    for (auto& x : pts)
      x = e(rng);
    const ImprovementDistribution d(pts);
    double prev = -1e300;
    for (int i = 1; i <= 99; ++i) {
      const double q = kde_quantile(d, i / 100.0).value;
      CHECK(q >= prev);
      prev = q;
    }
  }
}

TEST_CASE("hypothesis test decisions")
{
  AmrConfig cfg;
  cfg.p_cr = 0.5;
  const auto improve = symmetric_pair(0.2);

  auto d = amr_test(error_with_quantile(0.1, 0.5), improve, cfg);
  CHECK(d.q_error == doctest::Approx(0.1));
  CHECK(d.q_improve == doctest::Approx(0.2).epsilon(1e-6));
  CHECK_FALSE(d.refine);

  d = amr_test(error_with_quantile(0.3, 0.5), improve, cfg);
  CHECK(d.refine);

  // boundary: equal quantiles refine
  const double q_improve = kde_quantile(improve, 0.5).value;
  d = amr_test(error_with_quantile(q_improve, 0.5), improve, cfg);
  CHECK(d.q_error == doctest::Approx(d.q_improve).epsilon(1e-12));
  CHECK(d.refine == (d.q_error >= d.q_improve));

  // a pool of zero improvements always refines
  d = amr_test(error_with_quantile(1e-9, 0.5), ImprovementDistribution({0.0, 0.0, 0.0}), cfg);
  CHECK(d.refine);
}

TEST_CASE("decision depends only on the sign of the quantile gap")
{
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  AmrConfig cfg;
  for (int t = 0; t < 50; ++t) {
    const auto improve = symmetric_pair(u(rng));
    const auto d = amr_test(error_with_quantile(u(rng), cfg.p_cr), improve, cfg);
    CHECK(d.refine == (d.q_error >= d.q_improve));
  }
}

TEST_CASE("raising p_cr keeps a dominating error model refining")
{
  // Error law far above the improvements: refine at every p_cr.
  const auto err = error_with_quantile(1.0, 0.5, 0.3);
  const ImprovementDistribution improve({0.001, 0.002, 0.004, 0.003});
  bool was = false;
  for (double p = 0.05; p < 0.96; p += 0.05) {
    AmrConfig cfg;
    cfg.p_cr = p;
    const bool now = amr_test(err, improve, cfg).refine;
    CHECK(now);
    CHECK((!was || now));
    was = now;
  }
}

TEST_CASE("desired fidelity")
{
  CHECK(desired_fidelity(0.2, 0.1, 0.04) == doctest::Approx(0.02));
  CHECK(desired_fidelity(0.3, 0.3, 0.5) == doctest::Approx(0.95 * 0.5));
  CHECK(desired_fidelity(0.5, 0.01, 0.1) == doctest::Approx(0.025));
  CHECK(desired_fidelity(0.01, 0.5, 0.1) == doctest::Approx(0.095));
  CHECK(desired_fidelity(0.0, 0.5, 0.1) == doctest::Approx(0.025));
  CHECK_THROWS_AS(desired_fidelity(0.1, 0.1, 0.0), InvalidArgument);

  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 200; ++t) {
    const double eps = u(rng) + 1e-3;
    CHECK(desired_fidelity(u(rng), u(rng), eps) < eps);
  }
}

TEST_CASE("config validation and the eta helper")
{
  AmrConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.p_cr = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.p_cr = 0.3;
  cfg.tau = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);

  const LognormalError e{std::log(0.1), 0.4};
  CHECK(p_cr_from_eta(e, 0.1) == doctest::Approx(0.5));
  CHECK(p_cr_from_eta(e, lognormal_quantile(e, 0.8)) == doctest::Approx(0.8));
}
