#include "amrpbs/benchmarks.hpp"

#include "amrpbs/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>

namespace amrpbs {

namespace {

void require_dims(const Vector& x, Eigen::Index d, const char* name)
{
  if (x.size() != d)
    throw InvalidArgument(std::string(name) + " takes a " + std::to_string(d) + "-vector");
}

Vector vec(std::initializer_list<double> v)
{
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v)
    x[i++] = e;
  return x;
}

} // namespace

double three_hump(const Vector& x)
{
  require_dims(x, 2, "three_hump");
  const double a = x[0], b = x[1];
  const double a2 = a * a;
  return 2.0 * a2 - 1.05 * a2 * a2 + a2 * a2 * a2 / 6.0 + a * b + b * b;
}

double branin(const Vector& x)
{
  require_dims(x, 2, "branin");
  constexpr double pi = std::numbers::pi;
  const double b = 5.1 / (4.0 * pi * pi);
  const double c = 5.0 / pi;
  const double t = 1.0 / (8.0 * pi);
  const double u = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
  return u * u + 10.0 * (1.0 - t) * std::cos(x[0]) + 10.0;
}

double hartmann6(const Vector& x)
{
  require_dims(x, 6, "hartmann6");
  for (Eigen::Index j = 0; j < 6; ++j)
    if (!(x[j] >= 0.0 && x[j] <= 1.0))
      throw InvalidArgument("hartmann6 is defined on the unit cube");
  static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  static const double A[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                 {0.05, 10, 17, 0.1, 8, 14},
                                 {3, 3.5, 1.7, 10, 17, 8},
                                 {17, 8, 0.05, 10, 0.1, 14}};
  static const double P[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                 {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                 {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                 {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double e = 0.0;
    for (int j = 0; j < 6; ++j)
      e += A[i][j] * (x[j] - P[i][j]) * (x[j] - P[i][j]);
    s += alpha[i] * std::exp(-e);
  }
  return -s;
}

Problem three_hump_problem()
{
  Problem p{"three-hump", DesignSpace(vec({-5, -5}), vec({5, 5})), three_hump, {}, {}, {}, {}};
  p.known_optimum = KnownOptimum{vec({0, 0}), 0.0};
  return p;
}

Problem branin_problem()
{
  Problem p{"branin", DesignSpace(vec({-5, 0}), vec({10, 15})), branin, {}, {}, {}, {}};
  p.known_optimum = KnownOptimum{vec({std::numbers::pi, 2.275}), 0.39788735772973816};
  return p;
}

Problem hartmann6_problem()
{
  Problem p{"hartmann6", DesignSpace(Vector::Zero(6), Vector::Ones(6)), hartmann6, {}, {}, {}, {}};
  p.known_optimum = KnownOptimum{vec({0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573}), -3.32236801141551};
  return p;
}

double riblet_drag(const Vector& x)
{
  require_dims(x, 3, "riblet_drag");
  const double h = (x[0] - 0.35) / 0.12;
  const double s = (x[1] - 1.8) / 0.6;
  const double sigma = (x[2] - 0.26) / 0.08;
  return 0.0085 - 0.0009 * std::exp(-(h * h + s * s + sigma * sigma)) + 0.0002 * x[1] / 3.6;
}

std::vector<Objective> riblet_constraints()
{
  return {
    [](const Vector& x) { return 6.0 * x[2] - x[1]; },
    [](const Vector& x) { return x[1] - 6.0 * x[0]; },
    [](const Vector& x) { return x[2] - 0.6 * x[0]; },
  };
}

DesignSpace riblet_space()
{
  return DesignSpace(vec({0.2, 0.72, 0.12}), vec({0.6, 3.6, 0.46}));
}

Problem riblet_problem()
{
  return Problem{"riblet", riblet_space(), riblet_drag, {}, riblet_constraints(), {}, CostModel::cheap_analytic};
}

std::string to_string(Method method)
{
  return method == Method::amr_pbs ? "amr-pbs" : "bego";
}

double compute_rae(double found, double f_star)
{
  return std::abs(found - f_star) / std::max(std::abs(f_star), 1.0);
}

namespace {

RunResult make_result(Method method, const Problem& problem, std::uint64_t seed, const SampleSet& samples, int evals)
{
  RunResult r;
  r.method = method;
  r.function = problem.name;
  r.seed = seed;
  const std::size_t best = best_sample_index(problem, samples, default_penalty_weight);
  r.point = samples.point(best);
  r.value = samples.response(best);
  r.rae = problem.known_optimum ? compute_rae(r.value, problem.known_optimum->value) : 0.0;
  r.evaluations = evals;
  return r;
}

} // namespace

RunResult run_bego(const Problem& problem,
                   int n_initial,
                   int budget,
                   std::uint64_t seed,
                   const InnerOptimizerSettings& settings)
{
  if (n_initial < 1 || budget < n_initial)
    throw InvalidArgument("bego needs 1 <= n_initial <= budget");
  TruthBudget truth(problem, budget);
  SampleSet samples(problem.space);
  const std::vector<Vector> initial = initial_design(problem.space, n_initial, seed);
  const std::vector<double> y0 = truth.evaluate(initial);
  for (std::size_t i = 0; i < initial.size(); ++i)
    samples.add(initial[i], y0[i]);

  const SamplingRange whole{problem.space.lower(), problem.space.upper()};
  for (std::uint64_t step = 0; truth.remaining() > 0; ++step) {
    const Batch batch = select_batch(samples, whole, 1, derive_seed(seed, 5000 + step), settings);
    const double y = truth.evaluate(batch.points).front();
    samples.add(batch.points.front(), y);
  }
  RunResult r = make_result(Method::bego, problem, seed, samples, truth.used());
  r.n_initial = n_initial;
  return r;
}

RunResult run_amr(const Problem& problem, const RunConfig& cfg)
{
  const RunTrace trace = run_amr_pbs(problem, cfg);
  if (trace.aborted)
    throw EvaluatorFailure(trace.abort_reason);
  RunResult r;
  r.method = Method::amr_pbs;
  r.function = problem.name;
  r.seed = cfg.seed;
  r.point = trace.final.best_sample_point;
  r.value = trace.final.best_sample_value;
  r.rae = problem.known_optimum ? compute_rae(r.value, problem.known_optimum->value) : 0.0;
  r.n_initial = cfg.n_initial;
  r.evaluations = trace.final.evaluations;
  return r;
}

std::vector<std::string> benchmark_names()
{
  return {"three-hump", "branin", "hartmann6"};
}

BenchmarkSpec benchmark_spec(const std::string& name)
{
  if (name == "three-hump")
    return {name, three_hump_problem(), 20, 30, 20};
  if (name == "branin")
    return {name, branin_problem(), 20, 30, 40};
  if (name == "hartmann6")
    return {name, hartmann6_problem(), 60, 90, 20};
  throw InvalidArgument("unknown benchmark: " + name);
}

double median(std::vector<double> values)
{
  if (values.empty())
    throw InvalidArgument("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double WinLoss::win_rate() const
{
  const int n = amr_wins + bego_wins + ties;
  return n > 0 ? static_cast<double>(amr_wins) / n : 0.0;
}

Experiment1Table tabulate(std::vector<RunResult> runs)
{
  Experiment1Table t;
  t.runs = std::move(runs);
  std::vector<std::string> functions;
  for (const auto& r : t.runs)
    if (std::find(functions.begin(), functions.end(), r.function) == functions.end())
      functions.push_back(r.function);

  for (const auto& f : functions) {
    std::map<std::uint64_t, double> amr, bego;
    for (Method m : {Method::amr_pbs, Method::bego}) {
      std::vector<double> rae;
      for (const auto& r : t.runs) {
        if (r.function != f || r.method != m)
          continue;
        rae.push_back(r.rae);
        (m == Method::amr_pbs ? amr : bego)[r.seed] = r.rae;
      }
      if (!rae.empty())
        t.summary.push_back({f, m, static_cast<int>(rae.size()), median(rae), *std::max_element(rae.begin(), rae.end())});
    }
    WinLoss w{f};
    for (const auto& [seed, a] : amr) {
      auto it = bego.find(seed);
      if (it == bego.end())
        continue;
      if (a < it->second)
        ++w.amr_wins;
      else if (a > it->second)
        ++w.bego_wins;
      else
        ++w.ties;
    }
    t.wins.push_back(w);
  }
  return t;
}

std::vector<RunResult> compare_on_seed(const BenchmarkSpec& spec, std::uint64_t seed, const RunConfig& base)
{
  RunConfig cfg = base;
  cfg.n_initial = spec.n_initial;
  cfg.budget = spec.n_final;
  cfg.seed = seed;
  const RunResult amr = run_amr(spec.problem, cfg);
  return {amr, run_bego(spec.problem, spec.n_initial, amr.evaluations, seed)};
}

Experiment1Table experiment1(const std::vector<BenchmarkSpec>& specs,
                             const std::vector<std::uint64_t>& seeds,
                             const RunConfig& base)
{
  std::vector<RunResult> runs;
  for (const auto& spec : specs) {
    std::vector<std::uint64_t> s = seeds;
    if (s.empty())
      for (int i = 1; i <= spec.n_runs; ++i)
        s.push_back(static_cast<std::uint64_t>(i));
    for (std::uint64_t seed : s)
      for (auto& r : compare_on_seed(spec, seed, base))
        runs.push_back(std::move(r));
  }
  return tabulate(std::move(runs));
}

RunConfig benchmark_config()
{
  RunConfig cfg;
  cfg.candidates = {Candidate{SurrogateKind::kriging, KernelSpec{}}};
  return cfg;
}

RunConfig experiment2_config()
{
  RunConfig cfg = benchmark_config();
  cfg.amr.p_cr = 0.3;
  cfg.amr.tau = 2;
  cfg.n_pop = 60;
  cfg.max_iter = 100;
  cfg.budget = 210;
  return cfg;
}

Experiment2Table tabulate_experiment2(std::vector<RunResult> runs)
{
  Experiment2Table t;
  t.runs = std::move(runs);
  std::vector<int> sizes;
  for (const auto& r : t.runs)
    if (std::find(sizes.begin(), sizes.end(), r.n_initial) == sizes.end())
      sizes.push_back(r.n_initial);
  for (int n0 : sizes) {
    std::vector<double> rae;
    for (const auto& r : t.runs)
      if (r.n_initial == n0)
        rae.push_back(r.rae);
    t.rows.push_back({n0, static_cast<int>(rae.size()), median(rae), *std::max_element(rae.begin(), rae.end())});
  }
  return t;
}

Experiment2Table experiment2(const std::vector<int>& n0_values,
                             int budget,
                             const std::vector<std::uint64_t>& seeds,
                             const RunConfig& base)
{
  const Problem problem = hartmann6_problem();
  std::vector<RunResult> runs;
  for (int n0 : n0_values) {
    for (std::uint64_t seed : seeds) {
      RunConfig cfg = base;
      cfg.n_initial = n0;
      cfg.budget = budget;
      cfg.seed = seed;
      runs.push_back(run_amr(problem, cfg));
    }
  }
  return tabulate_experiment2(std::move(runs));
}

void write_runs_csv(std::ostream& out, const std::vector<RunResult>& runs)
{
  out << "method,function,seed,rae,evals\n";
  for (const auto& r : runs)
    out << to_string(r.method) << ',' << r.function << ',' << r.seed << ',' << format_real(r.rae) << ','
        << r.evaluations << '\n';
}

void write_experiment1_markdown(std::ostream& out, const Experiment1Table& t)
{
  out << "| function | method | runs | median RAE | max RAE | median RAE x100 | max RAE x100 |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const auto& s : t.summary)
    out << "| " << s.function << " | " << to_string(s.method) << " | " << s.runs << " | " << format_real(s.median_rae)
        << " | " << format_real(s.max_rae) << " | " << format_real(100 * s.median_rae) << " | "
        << format_real(100 * s.max_rae) << " |\n";
  out << "\n| function | amr-pbs wins | bego wins | ties | amr-pbs win rate |\n";
  out << "|---|---|---|---|---|\n";
  for (const auto& w : t.wins)
    out << "| " << w.function << " | " << w.amr_wins << " | " << w.bego_wins << " | " << w.ties << " | "
        << format_real(w.win_rate()) << " |\n";
}

void write_experiment2_csv(std::ostream& out, const Experiment2Table& t)
{
  out << "n_initial,runs,median_rae,max_rae\n";
  for (const auto& r : t.rows)
    out << r.n_initial << ',' << r.runs << ',' << format_real(r.median_rae) << ',' << format_real(r.max_rae) << '\n';
}

void write_experiment2_markdown(std::ostream& out, const Experiment2Table& t)
{
  out << "| N0 | runs | median RAE | max RAE | median RAE x100 |\n";
  out << "|---|---|---|---|---|\n";
  for (const auto& r : t.rows)
    out << "| " << r.n_initial << " | " << r.runs << " | " << format_real(r.median_rae) << " | "
        << format_real(r.max_rae) << " | " << format_real(100 * r.median_rae) << " |\n";
}

} // namespace amrpbs
