#include "amrpbs/error.hpp"
#include "amrpbs/problem.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace amrpbs;

namespace {

Vector vec(std::initializer_list<double> v)
{
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v)
    x[i++] = e;
  return x;
}

DesignSpace unit(Eigen::Index d)
{
  return DesignSpace(Vector::Zero(d), Vector::Ones(d));
}

// Every stratum [k/n, (k+1)/n) of every dimension holds exactly one point.
bool stratified(const DesignSpace& space, const std::vector<Vector>& pts)
{
  const auto n = pts.size();
  for (Eigen::Index j = 0; j < space.dims(); ++j) {
    std::vector<int> count(n, 0);
    for (const auto& p : pts) {
      const double u = (p[j] - space.lower()[j]) / space.width()[j];
      auto k = static_cast<std::size_t>(std::floor(u * static_cast<double>(n)));
      k = std::min(k, n - 1);
      ++count[k];
    }
    if (std::any_of(count.begin(), count.end(), [](int c) { return c != 1; }))
      return false;
  }
  return true;
}

} // namespace

TEST_CASE("design space rejects bad bounds")
{
  CHECK_THROWS_AS(DesignSpace(vec({0, 1}), vec({1, 1})), InvalidArgument);
  CHECK_THROWS_AS(DesignSpace(vec({0}), vec({1, 1})), InvalidArgument);
  const DesignSpace s(vec({-1, 0}), vec({1, 2}));
  CHECK(s.contains(vec({1, 2})));
  CHECK_FALSE(s.contains(vec({1.5, 0})));
  CHECK(s.clip(vec({3, -1})) == vec({1, 0}));
}

TEST_CASE("sample set enforces distinct points inside the space")
{
  SampleSet s(unit(2));
  s.add(vec({0.1, 0.2}), 1.0);
  CHECK_THROWS_AS(s.add(vec({0.1, 0.2 + 1e-13}), 2.0), InvalidArgument);
  CHECK_THROWS_AS(s.add(vec({1.1, 0.2}), 2.0), InvalidArgument);
  CHECK_THROWS_AS(s.add(vec({0.3}), 2.0), InvalidArgument);
  s.add(vec({0.1, 0.2 + 1e-9}), 0.5);
  CHECK(s.size() == 2);
  CHECK(s.best_index() == 1);
  CHECK(s.find(vec({0.1, 0.2})) == std::size_t{0});
}

TEST_CASE("latin hypercube on the unit square, n = 4")
{
  const auto pts = lhs_sample(unit(2), 4, 7);
  REQUIRE(pts.size() == 4);
  for (Eigen::Index j = 0; j < 2; ++j) {
    std::vector<double> c;
    for (const auto& p : pts)
      c.push_back(p[j]);
    std::sort(c.begin(), c.end());
    for (int k = 0; k < 4; ++k) {
      CHECK(c[k] >= 0.25 * k);
      CHECK(c[k] <= 0.25 * (k + 1));
    }
  }
}

TEST_CASE("latin hypercube single point")
{
  const auto pts = lhs_sample(unit(1), 1, 99);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0][0] >= 0.0);
  CHECK(pts[0][0] <= 1.0);
  CHECK_THROWS_AS(lhs_sample(unit(1), 0, 1), InvalidArgument);
}

TEST_CASE("latin hypercube seeds give different stratified designs")
{
  const auto a = lhs_sample(unit(3), 20, 1);
  const auto b = lhs_sample(unit(3), 20, 2);
  CHECK(stratified(unit(3), a));
  CHECK(stratified(unit(3), b));
  bool differ = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    differ = differ || a[i] != b[i];
  CHECK(differ);
  const auto again = lhs_sample(unit(3), 20, 1);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] == again[i]);
}

TEST_CASE("latin hypercube property over random sizes and boxes")
{
  Rng rng(11);
  std::uniform_int_distribution<int> dims(1, 6), size(1, 60);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = dims(rng);
    Vector lo(d), hi(d);
    for (int j = 0; j < d; ++j) {
      lo[j] = u(rng);
      hi[j] = lo[j] + 0.1 + std::abs(u(rng));
    }
    const DesignSpace space(lo, hi);
    const auto pts = lhs_sample(space, static_cast<std::size_t>(size(rng)), static_cast<std::uint64_t>(trial));
    CHECK(stratified(space, pts));
    for (const auto& p : pts)
      CHECK(space.contains(p));
  }
}

TEST_CASE("constraint penalty")
{
  Problem p{"line", unit(1), [](const Vector& x) { return x[0] * x[0]; }, {}, {}, {}, CostModel::cheap_analytic};
  p.space = DesignSpace(vec({-5}), vec({5}));
  CHECK(penalized_objective(p, vec({2}), 10) == 4.0);

  p.constraints.push_back([](const Vector& x) { return x[0] - 1; });
  CHECK(penalized_objective(p, vec({2}), 10) == doctest::Approx(4.0 + 10.0));
  CHECK(penalized_objective(p, vec({0.5}), 10) == 0.25);
  CHECK(feasible(p, vec({0.5})));
  CHECK_FALSE(feasible(p, vec({1.5})));

  // continuity across the boundary x = 1
  for (double h : {1e-3, 1e-5, 1e-7})
    CHECK(std::abs(penalized_objective(p, vec({1 + h}), 10) - penalized_objective(p, vec({1 - h}), 10)) < 5 * h);
}

TEST_CASE("best sample of a constrained problem prefers feasibility")
{
  Problem p{"c", unit(1), [](const Vector& x) { return -x[0]; }, {}, {}, {}, CostModel::cheap_analytic};
  p.constraints.push_back([](const Vector& x) { return x[0] - 0.5; });
  SampleSet s(unit(1));
  s.add(vec({0.9}), -0.9);
  s.add(vec({0.4}), -0.4);
  s.add(vec({0.2}), -0.2);
  CHECK(best_sample_index(p, s, 1e3) == 1);

  SampleSet infeasible(unit(1));
  infeasible.add(vec({0.9}), -0.9);
  infeasible.add(vec({0.6}), -0.6);
  CHECK(best_sample_index(p, infeasible, 1e3) == 1);
}

TEST_CASE("sampling range examples")
{
  const DesignSpace space = unit(1);
  SampleSet samples(space);
  samples.add(vec({0.1}), 0);
  samples.add(vec({0.7}), 0);
  auto r = update_sampling_range(space, {vec({0.2}), vec({0.8})}, samples);
  CHECK(r.lower[0] == 0.1);
  CHECK(r.upper[0] == 0.8);

  r = update_sampling_range(space, {vec({0.5})}, SampleSet(space));
  CHECK(r.lower[0] == 0.5);
  CHECK(r.upper[0] == 0.5);

  r = update_sampling_range(space, {vec({1.3}), vec({0.4})}, SampleSet(space));
  CHECK(r.upper[0] == 1.0);

  CHECK_THROWS_AS(update_sampling_range(space, {}, samples), InvalidArgument);

  r = population_range(space, {vec({0.2}), vec({0.8})});
  CHECK(r.lower[0] == 0.2);
  CHECK(r.upper[0] == 0.8);
}

TEST_CASE("sampling range never shrinks when the population grows")
{
  Rng rng(5);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  const DesignSpace space = unit(3);
  SampleSet samples(space);
  for (const auto& x : lhs_sample(space, 5, 3))
    samples.add(x, 0);
  std::vector<Vector> pop{space.clip(Vector::NullaryExpr(3, [&] { return u(rng); }))};
  auto prev = update_sampling_range(space, pop, samples);
  for (int i = 0; i < 100; ++i) {
    pop.push_back(Vector::NullaryExpr(3, [&] { return u(rng); }));
    const auto next = update_sampling_range(space, pop, samples);
    CHECK((next.lower.array() <= prev.lower.array()).all());
    CHECK((next.upper.array() >= prev.upper.array()).all());
    CHECK((next.lower.array() >= 0).all());
    CHECK((next.upper.array() <= 1).all());
    prev = next;
  }
}

TEST_CASE("seed streams are distinct")
{
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 10; ++s)
    for (std::uint64_t stream = 0; stream < 10; ++stream)
      seen.insert(derive_seed(s, stream));
  CHECK(seen.size() == 100);
}

TEST_CASE("format_real round-trips")
{
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23})
    CHECK(std::stod(format_real(v)) == v);
}
