#include "amrpbs/config.hpp"

#include "amrpbs/benchmarks.hpp"
#include "amrpbs/error.hpp"
#include "amrpbs/registry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace amrpbs {

std::string to_string(Command command)
{
  switch (command) {
  case Command::run:
    return "run";
  case Command::experiment1:
    return "experiment1";
  case Command::experiment2:
    return "experiment2";
  case Command::bego:
    return "bego";
  }
  return "run";
}

namespace {

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_words(const std::string& s)
{
  std::istringstream in(s);
  std::vector<std::string> words;
  for (std::string w; in >> w;)
    words.push_back(w);
  return words;
}

long long parse_integer(const std::string& key, const std::string& text, long long min, int line)
{
  long long v = 0;
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ConfigError(line, key + ": expected an integer, got '" + text + "'");
  if (v < min)
    throw ConfigError(line, key + " must be at least " + std::to_string(min));
  return v;
}

double parse_double(const std::string& key, const std::string& text, int line)
{
  double v = 0;
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v))
    throw ConfigError(line, key + ": expected a finite number, got '" + text + "'");
  return v;
}

std::uint64_t parse_seed(const std::string& text, int line)
{
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ConfigError(line, "seed: expected a nonnegative integer, got '" + text + "'");
  return v;
}

std::string one_of(const std::string& key, const std::string& value, const std::vector<std::string>& allowed, int line)
{
  if (std::find(allowed.begin(), allowed.end(), value) != allowed.end())
    return value;
  std::string list;
  for (const auto& a : allowed)
    list += (list.empty() ? "" : ", ") + a;
  throw ConfigError(line, key + ": '" + value + "' is not one of " + list);
}

std::string join(const std::vector<std::string>& items)
{
  std::string s;
  for (const auto& i : items)
    s += (s.empty() ? "" : ",") + i;
  return s;
}

const std::vector<std::string>& integer_keys()
{
  static const std::vector<std::string> keys = {"n_initial",   "budget", "n_pop", "max_iter", "stop_window",
                                                "pemf_levels", "pemf_repeats", "tau", "runs", "experiment2_budget"};
  return keys;
}

long long integer_minimum(const std::string& key)
{
  if (key == "n_pop")
    return 2;
  if (key == "pemf_levels" || key == "pemf_repeats")
    return 3;
  return 1;
}

std::string normalize(const std::string& key, const std::string& raw, int line)
{
  const std::string value = trim(raw);
  if (value.empty())
    throw ConfigError(line, key + " has no value");

  if (key == "command")
    return one_of(key, value, {"run", "experiment1", "experiment2", "bego"}, line);
  if (key == "problem")
    return one_of(key, value, problem_names(), line);
  if (key == "evaluator") {
    std::string s;
    for (const auto& w : split_words(value))
      s += (s.empty() ? "" : " ") + w;
    return s;
  }
  if (key == "out")
    return value;
  if (key == "lower" || key == "upper") {
    std::string s;
    for (const auto& w : split_words(value))
      s += (s.empty() ? "" : " ") + format_real(parse_double(key, w, line));
    return s;
  }
  if (std::find(integer_keys().begin(), integer_keys().end(), key) != integer_keys().end())
    return std::to_string(parse_integer(key, value, integer_minimum(key), line));
  if (key == "seed")
    return std::to_string(parse_seed(value, line));
  if (key == "p_cr") {
    const double v = parse_double(key, value, line);
    if (!(v > 0 && v < 1))
      throw ConfigError(line, "p_cr must lie in (0, 1), got " + value);
    return format_real(v);
  }
  if (key == "delta_f" || key == "eta") {
    const double v = parse_double(key, value, line);
    if (!(v > 0))
      throw ConfigError(line, key + " must be positive");
    return format_real(v);
  }
  if (key == "penalty_weight") {
    const double v = parse_double(key, value, line);
    if (!(v >= 0))
      throw ConfigError(line, key + " must be nonnegative");
    return format_real(v);
  }
  if (key == "stop_on")
    return one_of(key, value, {"population-mean", "global-best"}, line);
  if (key == "sampling_range")
    return one_of(key, value, {"population", "population+samples"}, line);
  if (key == "surrogates") {
    const auto items = split_list(value);
    if (items.empty())
      throw ConfigError(line, "surrogates: empty list");
    for (const auto& i : items)
      one_of(key, i, {"rbf-gaussian", "rbf-multiquadric", "rbf-cubic", "kriging"}, line);
    return join(items);
  }
  if (key == "functions") {
    const auto items = split_list(value);
    if (items.empty())
      throw ConfigError(line, "functions: empty list");
    for (const auto& i : items)
      one_of(key, i, benchmark_names(), line);
    return join(items);
  }
  if (key == "n0_values") {
    std::vector<std::string> out;
    for (const auto& i : split_list(value))
      out.push_back(std::to_string(parse_integer(key, i, 1, line)));
    if (out.empty())
      throw ConfigError(line, "n0_values: empty list");
    return join(out);
  }
  throw ConfigError(line, "unknown key '" + key + "'");
}

void check_consistency(const CliConfig& c, const std::map<std::string, int>& lines)
{
  auto line_of = [&](std::initializer_list<const char*> keys) {
    int l = 0;
    for (const char* k : keys)
      if (auto it = lines.find(k); it != lines.end())
        l = std::max(l, it->second);
    return l;
  };
  try {
    c.run_config().validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(line_of({"n_initial", "budget"}), e.what());
  }
  if (c.has("lower") != c.has("upper"))
    throw ConfigError(line_of({"lower", "upper"}), "lower and upper must be given together");
  if (c.has("lower")) {
    const auto lo = split_words(c.get("lower"));
    const auto hi = split_words(c.get("upper"));
    if (lo.size() != hi.size())
      throw ConfigError(line_of({"lower", "upper"}), "lower and upper differ in length");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(std::stod(lo[i]) < std::stod(hi[i])))
        throw ConfigError(line_of({"lower", "upper"}), "lower must be below upper in every dimension");
    if (!c.has("evaluator"))
      throw ConfigError(line_of({"lower", "upper"}), "bounds are only used with an evaluator");
  }
}

} // namespace

std::vector<std::string> split_list(const std::string& list)
{
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(list);
  while (std::getline(in, item, ','))
    for (const auto& w : split_words(item))
      items.push_back(w);
  return items;
}

std::vector<Candidate> parse_candidates(const std::string& list)
{
  std::vector<Candidate> out;
  for (const auto& name : split_list(list)) {
    Candidate c{SurrogateKind::rbf, KernelSpec{}};
    if (name == "kriging")
      c.kind = SurrogateKind::kriging;
    else if (name == "rbf-multiquadric")
      c.kernel.family = kernels::Family::multiquadric;
    else if (name == "rbf-cubic")
      c.kernel.family = kernels::Family::cubic;
    else if (name != "rbf-gaussian")
      throw InvalidArgument("unknown surrogate '" + name + "'");
    out.push_back(c);
  }
  return out;
}

void set_value(CliConfig& config, const std::string& key, const std::string& value, int line)
{
  config.values[key] = normalize(key, value, line);
}

Command CliConfig::command() const
{
  if (!has("command"))
    return Command::run;
  const std::string& c = get("command");
  if (c == "experiment1")
    return Command::experiment1;
  if (c == "experiment2")
    return Command::experiment2;
  if (c == "bego")
    return Command::bego;
  return Command::run;
}

std::string CliConfig::problem() const
{
  return has("problem") ? get("problem") : default_problem;
}

std::string CliConfig::out_dir() const
{
  return has("out") ? get("out") : default_out_dir;
}

RunConfig CliConfig::run_config(RunConfig cfg) const
{
  auto integer = [&](const char* key, int& field) {
    if (has(key))
      field = std::stoi(get(key));
  };
  auto real = [&](const char* key, double& field) {
    if (has(key))
      field = std::stod(get(key));
  };
  integer("n_initial", cfg.n_initial);
  integer("budget", cfg.budget);
  integer("n_pop", cfg.n_pop);
  integer("max_iter", cfg.max_iter);
  integer("stop_window", cfg.stop_window);
  integer("pemf_levels", cfg.pemf_levels);
  integer("pemf_repeats", cfg.pemf_repeats);
  integer("tau", cfg.amr.tau);
  real("delta_f", cfg.delta_f);
  real("penalty_weight", cfg.penalty_weight);
  real("p_cr", cfg.amr.p_cr);
  if (has("eta"))
    cfg.amr.eta = std::stod(get("eta"));
  if (has("seed"))
    cfg.seed = std::stoull(get("seed"));
  if (has("stop_on"))
    cfg.stop_monitor = get("stop_on") == "global-best" ? StopMonitor::global_best : StopMonitor::population_mean;
  if (has("sampling_range"))
    cfg.range_rule = get("sampling_range") == "population" ? RangeRule::population : RangeRule::population_and_samples;
  if (has("surrogates"))
    cfg.candidates = parse_candidates(get("surrogates"));
  return cfg;
}

CliConfig parse_config(const std::string& text)
{
  CliConfig c;
  std::map<std::string, int> lines;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError(line_no, "missing key");
    if (lines.count(key))
      throw ConfigError(line_no, "duplicate key '" + key + "'");
    set_value(c, key, line.substr(eq + 1), line_no);
    lines[key] = line_no;
  }
  check_consistency(c, lines);
  return c;
}

std::string render_config(const CliConfig& config)
{
  std::string out;
  for (const auto& [k, v] : config.values)
    out += k + " = " + v + "\n";
  return out;
}

} // namespace amrpbs
