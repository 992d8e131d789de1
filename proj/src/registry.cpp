#include "amrpbs/registry.hpp"

#include "amrpbs/benchmarks.hpp"
#include "amrpbs/error.hpp"

namespace amrpbs {

std::vector<std::string> problem_names()
{
  return {"three-hump", "branin", "hartmann6", "riblet"};
}

Problem make_problem(const std::string& name)
{
  if (name == "three-hump")
    return three_hump_problem();
  if (name == "branin")
    return branin_problem();
  if (name == "hartmann6")
    return hartmann6_problem();
  if (name == "riblet")
    return riblet_problem();
  std::string known;
  for (const auto& n : problem_names())
    known += (known.empty() ? "" : ", ") + n;
  throw InvalidArgument("unknown problem '" + name + "' (known: " + known + ")");
}

namespace {

void attach(Problem& p, const ExternalEvaluator& evaluator)
{
  p.objective = [evaluator](const Vector& x) { return evaluator(x); };
  p.batch_objective = [evaluator](const std::vector<Vector>& xs) { return evaluator(xs); };
  p.cost_model = CostModel::expensive_external;
}

} // namespace

Problem make_problem(const std::string& name, const ExternalEvaluator& evaluator)
{
  Problem p = make_problem(name);
  attach(p, evaluator);
  return p;
}

Problem make_external_problem(const ExternalEvaluator& evaluator, DesignSpace space, std::string name)
{
  Problem p{std::move(name), std::move(space), {}, {}, {}, {}, CostModel::expensive_external};
  attach(p, evaluator);
  return p;
}

} // namespace amrpbs
