#pragma once

#include "amrpbs/problem.hpp"

#include <string>
#include <vector>

namespace amrpbs {

/// three-hump, branin, hartmann6, riblet.
std::vector<std::string> problem_names();

Problem make_problem(const std::string& name);

/// The named problem with its objective answered by an external evaluator;
/// bounds and constraints stay those of the named problem.
Problem make_problem(const std::string& name, const ExternalEvaluator& evaluator);

/// A box-constrained problem answered entirely by an external evaluator.
Problem make_external_problem(const ExternalEvaluator& evaluator, DesignSpace space, std::string name = "external");

} // namespace amrpbs
