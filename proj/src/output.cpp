#include "amrpbs/output.hpp"

#include "amrpbs/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace amrpbs {

namespace {

namespace fs = std::filesystem;

void make_dir(const fs::path& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_file(const fs::path& path, const std::string& content)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << content;
  out.close();
  if (!out)
    throw IoError("failed writing " + path.string());
}

nlohmann::json point_json(const Vector& x)
{
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    a.push_back(x[i]);
  return a;
}

std::string optional_real(const std::optional<double>& v)
{
  return v ? format_real(*v) : std::string();
}

} // namespace

void emit_outputs(const RunTrace& trace, const fs::path& dir, const std::string& problem, std::uint64_t seed)
{
  make_dir(dir);

  std::ostringstream t, conv, err;
  t << "iter,gbest,modal_error,refined,n_samples\n";
  for (const auto& r : trace.iterations) {
    t << r.iteration << ',' << format_real(r.global_best) << ',' << format_real(r.modal_error) << ','
      << (r.refined ? 1 : 0) << ',' << r.n_samples << '\n';
    conv << r.iteration << ' ' << format_real(r.global_best) << '\n';
    err << r.iteration << ' ' << format_real(r.modal_error) << '\n';
  }
  write_file(dir / "trace.csv", t.str());
  write_file(dir / "convergence.dat", conv.str());
  write_file(dir / "model_error.dat", err.str());

  std::ostringstream ev;
  ev << "iteration,batch_size,epsilon_target\n";
  for (const auto& e : trace.events)
    ev << e.iteration << ',' << e.batch_size << ',' << format_real(e.epsilon_target) << '\n';
  write_file(dir / "events.csv", ev.str());

  std::ostringstream ch;
  ch << "iteration,q_error,q_improve,refine,epsilon_target\n";
  for (const auto& c : trace.checks)
    ch << c.iteration << ',' << format_real(c.q_error) << ',' << format_real(c.q_improve) << ','
       << (c.refine ? 1 : 0) << ',' << optional_real(c.epsilon_target) << '\n';
  write_file(dir / "checks.csv", ch.str());

  std::ostringstream em;
  em << "iteration,degenerate,modal_error,vesd_type,a,b\n";
  for (const auto& m : trace.error_models)
    em << m.iteration << ',' << (m.degenerate ? 1 : 0) << ',' << format_real(m.modal_error) << ','
       << (m.degenerate ? "" : to_string(m.type)) << ',' << format_real(m.a) << ',' << format_real(m.b) << '\n';
  write_file(dir / "error_models.csv", em.str());

  std::ostringstream ba;
  Eigen::Index dims = 0;
  for (const auto& b : trace.batches)
    if (!b.points.empty())
      dims = b.points.front().size();
  ba << "iteration,index,acquisition";
  for (Eigen::Index j = 0; j < dims; ++j)
    ba << ",x" << j + 1;
  ba << '\n';
  for (const auto& b : trace.batches)
    for (std::size_t i = 0; i < b.points.size(); ++i) {
      ba << b.iteration << ',' << i << ',' << format_real(b.acquisition[i]);
      for (Eigen::Index j = 0; j < b.points[i].size(); ++j)
        ba << ',' << format_real(b.points[i][j]);
      ba << '\n';
    }
  write_file(dir / "batches.csv", ba.str());

  nlohmann::ordered_json s;
  s["problem"] = problem;
  s["seed"] = seed;
  s["aborted"] = trace.aborted;
  if (trace.aborted)
    s["abort_reason"] = trace.abort_reason;
  s["iterations"] = trace.iterations.empty() ? 0 : trace.iterations.back().iteration;
  const FinalResult& f = trace.final;
  nlohmann::ordered_json fin;
  fin["best_point"] = point_json(f.best_point);
  fin["predicted"] = f.predicted;
  fin["true_value"] = f.true_value ? nlohmann::ordered_json(*f.true_value) : nlohmann::ordered_json(nullptr);
  fin["best_sample_point"] = point_json(f.best_sample_point);
  fin["best_sample_value"] = f.best_sample_value;
  fin["evaluations"] = f.evaluations;
  fin["surrogate"] = f.surrogate;
  s["final"] = fin;
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const auto& e : trace.events)
    events.push_back({{"iteration", e.iteration}, {"batch_size", e.batch_size}, {"epsilon_target", e.epsilon_target}});
  s["events"] = events;
  write_file(dir / "summary.json", s.dump(2) + "\n");
}

void emit_experiment1(const Experiment1Table& table, const fs::path& dir)
{
  make_dir(dir);
  std::ostringstream runs, md;
  write_runs_csv(runs, table.runs);
  write_experiment1_markdown(md, table);
  write_file(dir / "runs.csv", runs.str());
  write_file(dir / "table.md", md.str());
}

void emit_experiment2(const Experiment2Table& table, const fs::path& dir)
{
  make_dir(dir);
  std::ostringstream runs, csv, md;
  write_runs_csv(runs, table.runs);
  write_experiment2_csv(csv, table);
  write_experiment2_markdown(md, table);
  write_file(dir / "runs.csv", runs.str());
  write_file(dir / "experiment2.csv", csv.str());
  write_file(dir / "table.md", md.str());
}

void emit_bego(const RunResult& result, const fs::path& dir)
{
  make_dir(dir);
  std::ostringstream runs;
  write_runs_csv(runs, {result});
  write_file(dir / "runs.csv", runs.str());
  nlohmann::ordered_json s;
  s["problem"] = result.function;
  s["seed"] = result.seed;
  s["best_point"] = point_json(result.point);
  s["best_value"] = result.value;
  s["rae"] = result.rae;
  s["evaluations"] = result.evaluations;
  write_file(dir / "summary.json", s.dump(2) + "\n");
}

} // namespace amrpbs
