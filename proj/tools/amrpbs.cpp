// Command-line driver: single runs, the BEGO baseline and the two benchmark
// studies, all configured by a `key = value` file plus flags.

#include "amrpbs/benchmarks.hpp"
#include "amrpbs/config.hpp"
#include "amrpbs/error.hpp"
#include "amrpbs/output.hpp"
#include "amrpbs/registry.hpp"

#include <CLI11.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace amrpbs;

namespace {

constexpr int exit_config_error = 1;
constexpr int exit_runtime_error = 2;

Vector parse_vector(const std::string& text)
{
  std::istringstream in(text);
  std::vector<double> v;
  for (double x; in >> x;)
    v.push_back(x);
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Problem build_problem(const CliConfig& cfg)
{
  if (!cfg.has("evaluator"))
    return make_problem(cfg.problem());
  std::istringstream in(cfg.get("evaluator"));
  std::string program;
  in >> program;
  std::vector<std::string> args;
  for (std::string a; in >> a;)
    args.push_back(a);
  ExternalEvaluator evaluator(program, args);
  if (cfg.has("lower"))
    return make_external_problem(evaluator, DesignSpace(parse_vector(cfg.get("lower")), parse_vector(cfg.get("upper"))));
  return make_problem(cfg.problem(), evaluator);
}

std::vector<std::uint64_t> seed_list(std::uint64_t first, int n)
{
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n; ++i)
    seeds.push_back(first + static_cast<std::uint64_t>(i));
  return seeds;
}

std::vector<int> int_list(const std::string& text)
{
  std::vector<int> v;
  for (const auto& s : split_list(text))
    v.push_back(std::stoi(s));
  return v;
}

// Result lines exchanged between worker processes and the parent.
std::string encode(const RunResult& r)
{
  std::string s = to_string(r.method) + ' ' + r.function + ' ' + std::to_string(r.seed) + ' ' + format_real(r.rae) +
                  ' ' + std::to_string(r.n_initial) + ' ' + std::to_string(r.evaluations) + ' ' + format_real(r.value);
  for (Eigen::Index j = 0; j < r.point.size(); ++j)
    s += ' ' + format_real(r.point[j]);
  return s + '\n';
}

RunResult decode(const std::string& line)
{
  std::istringstream in(line);
  RunResult r;
  std::string method;
  in >> method >> r.function >> r.seed >> r.rae >> r.n_initial >> r.evaluations >> r.value;
  if (!in)
    throw IoError("malformed worker result: " + line);
  r.method = method == "bego" ? Method::bego : Method::amr_pbs;
  std::vector<double> x;
  for (double v; in >> v;)
    x.push_back(v);
  r.point = Eigen::Map<Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  return r;
}

using Task = std::function<std::vector<RunResult>()>;

// Runs tasks in order, or spread over `jobs` worker processes. Each worker
// writes the results of its own tasks to a task-numbered file under parts/.
std::vector<RunResult> run_tasks(const std::vector<Task>& tasks, int jobs, const fs::path& out)
{
  std::vector<RunResult> results;
  if (jobs <= 1 || tasks.size() <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      for (auto& r : tasks[i]())
        results.push_back(std::move(r));
      std::cerr << "amrpbs: task " << i + 1 << "/" << tasks.size() << " done\n";
    }
    return results;
  }
  const fs::path parts = out / "parts";
  fs::create_directories(parts);
  auto part_file = [&](std::size_t i) { return parts / ("task-" + std::to_string(i) + ".txt"); };

  std::vector<pid_t> workers;
  for (int w = 0; w < jobs; ++w) {
    std::cout.flush();
    const pid_t pid = fork();
    if (pid < 0)
      throw IoError("fork failed");
    if (pid == 0) {
      int status = 0;
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < tasks.size(); i += static_cast<std::size_t>(jobs)) {
          std::ofstream f(part_file(i));
          for (const auto& r : tasks[i]())
            f << encode(r);
          if (!f)
            status = exit_runtime_error;
        }
      } catch (const std::exception& e) {
        std::cerr << "amrpbs: worker " << w << ": " << e.what() << '\n';
        status = exit_runtime_error;
      }
      std::_Exit(status);
    }
    workers.push_back(pid);
  }
  bool failed = false;
  for (pid_t pid : workers) {
    int status = 0;
    if (waitpid(pid, &status, 0) < 0 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
      failed = true;
  }
  if (failed)
    throw Error("a worker process failed");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    std::ifstream f(part_file(i));
    for (std::string line; std::getline(f, line);)
      if (!line.empty())
        results.push_back(decode(line));
  }
  fs::remove_all(parts);
  return results;
}

int command_run(const CliConfig& cfg, const fs::path& out)
{
  const Problem problem = build_problem(cfg);
  const RunConfig rc = cfg.run_config();
  const RunTrace trace = run_amr_pbs(problem, rc);
  emit_outputs(trace, out, problem.name, rc.seed);
  if (trace.aborted) {
    std::cerr << "amrpbs: run aborted: " << trace.abort_reason << " (partial trace written to " << out.string() << ")\n";
    return exit_runtime_error;
  }
  const FinalResult& f = trace.final;
  std::cout << "problem " << problem.name << " seed " << rc.seed << ": best observed " << format_real(f.best_sample_value)
            << " after " << f.evaluations << " evaluations, " << trace.events.size() << " refinement events, "
            << trace.iterations.size() << " iterations\n";
  if (!problem.constraints.empty())
    std::cout << "best observed point is " << (feasible(problem, f.best_sample_point) ? "feasible" : "infeasible") << '\n';
  return 0;
}

int command_bego(const CliConfig& cfg, const fs::path& out)
{
  const Problem problem = build_problem(cfg);
  const RunConfig rc = cfg.run_config();
  const RunResult r = run_bego(problem, rc.n_initial, rc.budget, rc.seed);
  emit_bego(r, out);
  std::cout << "problem " << problem.name << " seed " << rc.seed << ": best observed " << format_real(r.value) << " after "
            << r.evaluations << " evaluations\n";
  return 0;
}

int command_experiment1(const CliConfig& cfg, const fs::path& out, int jobs)
{
  const RunConfig base = cfg.run_config(benchmark_config());
  const std::vector<std::string> names = cfg.has("functions") ? split_list(cfg.get("functions")) : benchmark_names();
  std::vector<Task> tasks;
  for (const auto& name : names) {
    const BenchmarkSpec spec = benchmark_spec(name);
    const int runs = cfg.has("runs") ? std::stoi(cfg.get("runs")) : spec.n_runs;
    for (std::uint64_t seed : seed_list(base.seed, runs))
      tasks.push_back([spec, seed, base] { return compare_on_seed(spec, seed, base); });
  }
  const Experiment1Table table = tabulate(run_tasks(tasks, jobs, out));
  emit_experiment1(table, out);
  write_experiment1_markdown(std::cout, table);
  return 0;
}

int command_experiment2(const CliConfig& cfg, const fs::path& out, int jobs)
{
  const RunConfig base = cfg.run_config(experiment2_config());
  const std::vector<int> sizes = cfg.has("n0_values") ? int_list(cfg.get("n0_values")) : std::vector<int>{60, 90, 120, 150, 180};
  const int budget = cfg.has("experiment2_budget") ? std::stoi(cfg.get("experiment2_budget")) : 210;
  const int runs = cfg.has("runs") ? std::stoi(cfg.get("runs")) : 10;
  const Problem problem = hartmann6_problem();
  std::vector<Task> tasks;
  for (int n0 : sizes) {
    if (n0 > budget)
      throw ConfigError(0, "n0_values: " + std::to_string(n0) + " exceeds experiment2_budget");
    for (std::uint64_t seed : seed_list(base.seed, runs)) {
      RunConfig rc = base;
      rc.n_initial = n0;
      rc.budget = budget;
      rc.seed = seed;
      tasks.push_back([problem, rc] { return std::vector<RunResult>{run_amr(problem, rc)}; });
    }
  }
  const Experiment2Table table = tabulate_experiment2(run_tasks(tasks, jobs, out));
  emit_experiment2(table, out);
  write_experiment2_markdown(std::cout, table);
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Surrogate-based optimization with adaptive model refinement and batch sampling"};
  std::string config_path;
  std::string command;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
  std::vector<std::string> overrides;
  app.add_option("command", command, "run | experiment1 | experiment2 | bego (overrides the config file)");
  app.add_option("-c,--config", config_path, "configuration file of key = value lines")->check(CLI::ExistingFile);
  app.add_option("-s,--seed", seed, "run seed (first seed for the studies)");
  app.add_option("-o,--out", out, "output directory (overrides AMRPBS_OUT and the config file)");
  app.add_option("-j,--jobs", jobs, "worker processes for the studies")->check(CLI::PositiveNumber);
  app.add_option("--set", overrides, "extra key=value setting, applied after the config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config_error;
  }

  CliConfig cfg;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      std::stringstream text;
      text << in.rdbuf();
      cfg = parse_config(text.str());
    }
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw ConfigError(0, "--set expects key=value, got '" + kv + "'");
      set_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!command.empty())
      set_value(cfg, "command", command);
    if (seed)
      set_value(cfg, "seed", std::to_string(*seed));
    cfg = parse_config(render_config(cfg));
  } catch (const ConfigError& e) {
    std::cerr << "amrpbs: config error: " << e.what() << '\n';
    return exit_config_error;
  }

  fs::path out_dir = cfg.out_dir();
  if (const char* env = std::getenv("AMRPBS_OUT"); env && *env)
    out_dir = env;
  if (!out.empty())
    out_dir = out;

  try {
    switch (cfg.command()) {
    case Command::run:
      return command_run(cfg, out_dir);
    case Command::bego:
      return command_bego(cfg, out_dir);
    case Command::experiment1:
      return command_experiment1(cfg, out_dir, jobs);
    case Command::experiment2:
      return command_experiment2(cfg, out_dir, jobs);
    }
  } catch (const ConfigError& e) {
    std::cerr << "amrpbs: config error: " << e.what() << '\n';
    return exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "amrpbs: " << e.what() << '\n';
    return exit_runtime_error;
  }
  return 0;
}
