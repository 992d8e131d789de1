// Acceptance suite: one PASS/FAIL line per criterion. Criteria can be
// selected by number on the command line (e.g. `acceptance 4 5 6`); the
// external evaluator check is number 11.

#include "amrpbs/benchmarks.hpp"
#include "amrpbs/error.hpp"
#include "amrpbs/output.hpp"
#include "amrpbs/registry.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <unistd.h>

using namespace amrpbs;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0)
{
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::vector<std::uint64_t> seeds(int n)
{
  std::vector<std::uint64_t> s;
  for (int i = 1; i <= n; ++i)
    s.push_back(static_cast<std::uint64_t>(i));
  return s;
}

double summary_median(const Experiment1Table& t, Method m)
{
  for (const auto& s : t.summary)
    if (s.method == m)
      return s.median_rae;
  return NAN;
}

bool equal_budgets(const Experiment1Table& t)
{
  for (std::size_t i = 0; i + 1 < t.runs.size(); i += 2)
    if (t.runs[i].evaluations != t.runs[i + 1].evaluations || t.runs[i].seed != t.runs[i + 1].seed)
      return false;
  return true;
}

std::string ordering_detail(const std::string& name, const Experiment1Table& t)
{
  const auto& w = t.wins.front();
  return name + ": median RAE amr-pbs " + fmt("%.4g", summary_median(t, Method::amr_pbs)) + " vs bego " +
         fmt("%.4g", summary_median(t, Method::bego)) + ", per-seed wins " + std::to_string(w.amr_wins) + "/" +
         std::to_string(w.bego_wins) + "/" + std::to_string(w.ties) + " (amr/bego/tie)";
}

Outcome criterion1()
{
  const auto t = experiment1({benchmark_spec("branin")}, seeds(40));
  const double a = summary_median(t, Method::amr_pbs), b = summary_median(t, Method::bego);
  return {a < b && equal_budgets(t), ordering_detail("branin", t)};
}

Outcome criterion2()
{
  const auto camel = experiment1({benchmark_spec("three-hump")}, seeds(20));
  const auto hart = experiment1({benchmark_spec("hartmann6")}, seeds(20));
  const bool camel_ok = summary_median(camel, Method::amr_pbs) < summary_median(camel, Method::bego);
  bool hart_ok = summary_median(hart, Method::amr_pbs) < summary_median(hart, Method::bego);
  std::string extra;
  if (!hart_ok) {
    const double rate = hart.wins.front().win_rate();
    hart_ok = rate > 0.5;
    extra = fmt(" (median ordering failed; win rate %.2f)", rate);
  }
  return {camel_ok && hart_ok && equal_budgets(camel) && equal_budgets(hart),
          ordering_detail("three-hump", camel) + "; " + ordering_detail("hartmann6", hart) + extra};
}

Outcome criterion3()
{
  const auto t = experiment2({60, 180}, 210, seeds(10));
  const double small = t.rows.at(0).median_rae, large = t.rows.at(1).median_rae;
  return {small <= large, fmt("median RAE at N0=60 %.4g, at N0=180 %.4g", small, large)};
}

Outcome criterion4()
{
  Rng rng(2718);
  std::uniform_real_distribution<double> um(-2, 2), us(0.05, 1);
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    const double mean = um(rng), sigma = us(rng), inc = um(rng);
    Rng draw_rng(derive_seed(99, static_cast<std::uint64_t>(t)));
    std::normal_distribution<double> z(0.0, 1.0);
    // 10^6 draws as antithetic pairs.
    double s = 0;
    const int draws = 1000000;
    for (int i = 0; i < draws / 2; ++i) {
      const double e = z(draw_rng);
      s += std::max(0.0, mean + sigma * e - inc) + std::max(0.0, mean - sigma * e - inc);
    }
    worst = std::max(worst, std::abs(expected_improvement(mean, sigma, inc) - s / draws));
  }
  return {worst <= 1e-3, fmt("max |EI - MC| over 50 triples = %.3g", worst)};
}

Outcome criterion5()
{
  Vector xi(2), dir(2);
  xi << 0.3, -0.1;
  dir << 0.6, 0.8;
  const double L = 3.0, M = 2.0, mean = 0.5, sd = 0.2;
  const double r = (M - mean) / L;
  const double at_radius = local_penalizer(xi + r * dir, xi, mean, sd, L, M);
  const double far = local_penalizer(xi + 10 * r * dir, xi, mean, sd, L, M);
  const double inside = local_penalizer(xi + 0.5 * r * dir, xi, mean, 1e-4, L, M);
  return {std::abs(at_radius - 0.5) <= 1e-12 && far >= 0.999 && inside <= 1e-3,
          fmt("gamma at radius %.6g, at 10x radius %.6g, inside certain ball %.3g", at_radius, far, inside)};
}

Outcome criterion6()
{
  const DesignSpace space = branin_problem().space;
  SampleSet data(space);
  for (const auto& x : lhs_sample(space, 15, 31))
    data.add(x, branin(x));
  const SamplingRange range{space.lower(), space.upper()};
  const int gamma = 4;
  const Batch batch = select_batch(data, range, gamma, 77);
  AcquisitionState st = make_acquisition(data, range, 77);
  double worst = 1.0;
  for (int i = 0; i < gamma; ++i) {
    double grid_best = 0;
    for (int a = 0; a < 200; ++a)
      for (int b = 0; b < 200; ++b) {
        Vector x(2);
        x << range.lower[0] + range.width()[0] * a / 199.0, range.lower[1] + range.width()[1] * b / 199.0;
        grid_best = std::max(grid_best, st.penalized(x));
      }
    worst = std::min(worst, batch.acquisition[static_cast<std::size_t>(i)] / grid_best);
    st.choose(batch.points[static_cast<std::size_t>(i)]);
  }
  return {worst >= 0.99, fmt("worst batch/grid acquisition ratio over %g steps = %.6f", gamma, worst)};
}

Outcome criterion7()
{
  Rng rng(5);
  std::normal_distribution<double> noise(0, 0.05);
  std::vector<double> n, e1, e2;
  for (int k = 10; k <= 100; k += 10) {
    n.push_back(k);
    e1.push_back(0.8 * std::exp(-0.05 * k) * (1 + noise(rng)));
    e2.push_back(2 * std::pow(k, -0.7));
  }
  const VesdFit f1 = fit_vesd(n, e1), f2 = fit_vesd(n, e2);
  auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
  const bool ok1 = f1.type == VesdType::type1 && rel(f1.a, 0.8) <= 0.2 && rel(f1.b, -0.05) <= 0.2;
  const bool ok2 = f2.type == VesdType::type2 && rel(f2.a, 2.0) <= 0.2 && rel(f2.b, -0.7) <= 0.2;

  int round_trip_failures = 0, clamped = 0;
  std::uniform_real_distribution<double> ua(0.1, 3), ub(-1.2, -0.02), ueps(1e-3, 0.5);
  std::uniform_int_distribution<int> un(5, 60);
  for (int t = 0; t < 200; ++t) {
    const VesdFit fit{t % 2 ? VesdType::type1 : VesdType::type2, ua(rng), ub(rng) * (t % 2 ? 0.1 : 1.0), 0};
    const int cur = un(rng);
    const double eps = ueps(rng);
    const int budget = 1000000;
    const int g = compute_batch_size(fit, cur, eps, budget);
    if (g == budget) {
      ++clamped;
      continue;
    }
    if (fit(cur + g) > eps * (1 + 1e-9) && g > 1)
      ++round_trip_failures;
    if (g > 1 && fit(cur + g - 1) <= eps * (1 - 1e-9))
      ++round_trip_failures;
  }
  return {ok1 && ok2 && round_trip_failures == 0,
          "type1 a=" + fmt("%.4g b=%.4g", f1.a, f1.b) + " (" + to_string(f1.type) + "), type2 a=" + fmt("%.4g b=%.4g", f2.a, f2.b) +
              " (" + to_string(f2.type) + "), round-trip failures " + std::to_string(round_trip_failures) + "/" +
              std::to_string(200 - clamped) + " (" + std::to_string(clamped) + " clamped at the budget)"};
}

Outcome criterion8()
{
  const DesignSpace space = hartmann6_problem().space;
  SampleSet data(space);
  for (const auto& x : lhs_sample(space, 40, 8))
    data.add(x, hartmann6(x));
  const TrainedSurrogate gp = train(SurrogateKind::kriging, KernelSpec{}, data);
  Rng rng(12);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  double worst_grad = 0;
  for (int t = 0; t < 20; ++t) {
    const Vector x = Vector::NullaryExpr(6, [&] { return u(rng); });
    const Vector g = gp_posterior(gp, x).mean_gradient;
    Vector fd(6);
    for (int j = 0; j < 6; ++j) {
      Vector a = x, b = x;
      a[j] += 1e-5;
      b[j] -= 1e-5;
      fd[j] = (gp.predict(a) - gp.predict(b)) / 2e-5;
    }
    worst_grad = std::max(worst_grad, (g - fd).norm() / std::max(fd.norm(), 1e-8));
  }
  KernelSpec exact;
  exact.regularization = 0.0;
  SampleSet small(space);
  for (const auto& x : lhs_sample(space, 25, 9))
    small.add(x, hartmann6(x));
  const TrainedSurrogate interp = train(SurrogateKind::kriging, exact, small);
  double worst_interp = 0;
  for (std::size_t i = 0; i < small.size(); ++i)
    worst_interp = std::max(worst_interp, std::abs(interp.predict(small.point(i)) - small.response(i)));
  return {worst_grad <= 1e-4 && worst_interp <= 1e-6,
          fmt("max relative gradient error %.3g, max interpolation error %.3g", worst_grad, worst_interp)};
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion9()
{
  const fs::path root = fs::temp_directory_path() / ("amrpbs-acceptance-" + std::to_string(getpid()));
  int compared = 0, differing = 0;
  for (const auto& name : {"branin", "three-hump", "riblet"}) {
    const Problem p = make_problem(name);
    for (std::uint64_t seed : {1u, 2u}) {
      RunConfig c;
      c.seed = seed;
      c.amr.tau = 2;
      c.max_iter = 60;
      if (std::string(name) == "riblet") {
        c.n_initial = 15;
        c.budget = 25;
      }
      const fs::path a = root / (std::string(name) + std::to_string(seed) + "a");
      const fs::path b = root / (std::string(name) + std::to_string(seed) + "b");
      emit_outputs(run_amr_pbs(p, c), a, name, seed);
      emit_outputs(run_amr_pbs(p, c), b, name, seed);
      for (const auto& e : fs::directory_iterator(a)) {
        ++compared;
        if (slurp(e.path()) != slurp(b / e.path().filename()))
          ++differing;
      }
    }
  }
  std::uint64_t bego_seed = 3;
  const RunResult r1 = run_bego(branin_problem(), 20, 30, bego_seed);
  const RunResult r2 = run_bego(branin_problem(), 20, 30, bego_seed);
  if (r1.point != r2.point || r1.value != r2.value)
    ++differing;
  fs::remove_all(root);
  return {differing == 0 && compared > 0,
          std::to_string(compared) + " trace files compared across repeated runs, " + std::to_string(differing) + " differ"};
}

Outcome criterion10()
{
  int runs = 0, overruns = 0;
  for (const auto& name : {"branin", "three-hump"})
    for (int budget : {20, 21, 23, 26, 30, 40}) {
      auto calls = std::make_shared<std::atomic<int>>(0);
      Problem p = make_problem(name);
      auto f = p.objective;
      p.objective = [f, calls](const Vector& x) {
        ++*calls;
        return f(x);
      };
      RunConfig c;
      c.n_initial = 20;
      c.budget = budget;
      c.seed = static_cast<std::uint64_t>(budget);
      c.amr.p_cr = 0.95;
      c.amr.tau = 1;
      const RunTrace t = run_amr_pbs(p, c);
      ++runs;
      if (*calls > budget || t.final.evaluations > budget)
        ++overruns;
    }
  bool guard = false;
  try {
    TruthBudget truth(branin_problem(), 2);
    truth.evaluate({Vector::Zero(2), Vector::Ones(2), Vector::Constant(2, 2.0)});
  } catch (const BudgetExceeded&) {
    guard = true;
  }
  return {overruns == 0 && guard,
          std::to_string(runs) + " budget-exhaustion runs, " + std::to_string(overruns) + " over budget; over-budget request " +
              (guard ? "refused" : "accepted")};
}

Outcome criterion11()
{
  const Problem p = make_problem("riblet", ExternalEvaluator(MOCK_EVALUATOR));
  RunConfig c;
  c.n_initial = 15;
  c.budget = 30;
  c.seed = 4;
  const RunTrace t = run_amr_pbs(p, c);
  if (t.aborted)
    return {false, "run aborted: " + t.abort_reason};
  const Vector& x = t.final.best_sample_point;
  std::ostringstream detail;
  detail << "returned optimum (" << x[0] << ", " << x[1] << ", " << x[2] << "), drag " << t.final.best_sample_value
         << ", constraint values";
  for (const auto& g : p.constraints)
    detail << ' ' << g(x);
  return {feasible(p, x) && t.final.evaluations <= c.budget, detail.str()};
}

} // namespace

int main(int argc, char** argv)
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
    {"1 branin ordering", criterion1},
    {"2 three-hump and hartmann6 ordering", criterion2},
    {"3 initial sample size trend", criterion3},
    {"4 expected improvement vs Monte Carlo", criterion4},
    {"5 penalizer limits", criterion5},
    {"6 batch vs exhaustive grid", criterion6},
    {"7 VESD plant and recover", criterion7},
    {"8 GP numerics", criterion8},
    {"9 determinism", criterion9},
    {"10 budget safety", criterion10},
    {"11 external evaluator constraints", criterion11},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i)
    only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(static_cast<int>(i) + 1))
      continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << criteria[i].first << ": " << o.detail
              << fmt("  [%.1f s]", secs) << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
