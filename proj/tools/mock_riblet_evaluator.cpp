// Stand-in for the expensive riblet simulation. Reads one design
// (h s sigma) per line on stdin and answers one drag value per line.

#include "amrpbs/benchmarks.hpp"
#include "amrpbs/problem.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>

int main(int argc, char** argv)
{
  CLI::App app{"mock riblet drag evaluator"};
  int fail_after = -1;
  app.add_option("--fail-after", fail_after, "exit with status 3 after answering this many designs");
  CLI11_PARSE(app, argc, argv);

  int answered = 0;
  for (std::string line; std::getline(std::cin, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    if (answered == fail_after)
      return 3;
    std::istringstream in(line);
    amrpbs::Vector x(3);
    if (!(in >> x[0] >> x[1] >> x[2])) {
      std::cerr << "mock_riblet_evaluator: expected three numbers, got '" << line << "'\n";
      return 2;
    }
    std::cout << amrpbs::format_real(amrpbs::riblet_drag(x)) << '\n';
    ++answered;
  }
  return 0;
}
