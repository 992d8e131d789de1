#include "amrpbs/problem.hpp"

#include "amrpbs/error.hpp"
#include "amrpbs/kernels.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

namespace amrpbs {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
  // splitmix64 over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string format_real(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// DesignSpace

DesignSpace::DesignSpace(Vector lower, Vector upper)
  : lower_(std::move(lower))
  , upper_(std::move(upper))
{
  if (lower_.size() == 0)
    throw InvalidArgument("design space needs at least one dimension");
  if (lower_.size() != upper_.size())
    throw InvalidArgument("design space bound vectors differ in length");
  for (Eigen::Index j = 0; j < lower_.size(); ++j) {
    if (!(lower_[j] < upper_[j]))
      throw InvalidArgument("design space requires lower < upper in dimension " + std::to_string(j));
  }
}

bool DesignSpace::contains(const Vector& x, double tol) const
{
  if (x.size() != dims())
    return false;
  for (Eigen::Index j = 0; j < dims(); ++j)
    if (x[j] < lower_[j] - tol || x[j] > upper_[j] + tol)
      return false;
  return true;
}

Vector DesignSpace::clip(Vector x) const
{
  return x.cwiseMax(lower_).cwiseMin(upper_);
}

// ---------------------------------------------------------------------------
// SampleSet

SampleSet::SampleSet(Eigen::Index dims)
  : dims_(dims)
{
  if (dims < 1)
    throw InvalidArgument("sample set needs at least one dimension");
}

SampleSet::SampleSet(const DesignSpace& space)
  : dims_(space.dims())
  , space_(space)
{}

std::optional<std::size_t> SampleSet::find(const Vector& x) const
{
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (((points_[i] - x).cwiseAbs().array() <= duplicate_tolerance).all())
      return i;
  }
  return std::nullopt;
}

void SampleSet::add(const Vector& x, double y)
{
  if (x.size() != dims_)
    throw InvalidArgument("sample has " + std::to_string(x.size()) + " coordinates, expected " + std::to_string(dims_));
  if (!std::isfinite(y))
    throw InvalidArgument("sample response is not finite");
  if (space_ && !space_->contains(x))
    throw InvalidArgument("sample lies outside the design space");
  if (auto dup = find(x))
    throw InvalidArgument("sample duplicates existing point " + std::to_string(*dup));
  points_.push_back(x);
  responses_.push_back(y);
}

Matrix SampleSet::point_matrix() const
{
  Matrix m(static_cast<Eigen::Index>(points_.size()), dims_);
  for (std::size_t i = 0; i < points_.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = points_[i].transpose();
  return m;
}

Vector SampleSet::response_vector() const
{
  return Eigen::Map<const Vector>(responses_.data(), static_cast<Eigen::Index>(responses_.size()));
}

std::size_t SampleSet::best_index() const
{
  if (empty())
    throw InvalidArgument("empty sample set has no best point");
  return static_cast<std::size_t>(std::min_element(responses_.begin(), responses_.end()) - responses_.begin());
}

SampleSet SampleSet::subset(const std::vector<std::size_t>& indices) const
{
  SampleSet out(dims_);
  out.space_ = space_;
  for (auto i : indices) {
    out.points_.push_back(points_.at(i));
    out.responses_.push_back(responses_.at(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Problem

double Problem::evaluate(const Vector& x) const
{
  if (objective)
    return objective(x);
  return batch_objective({x}).at(0);
}

std::vector<double> Problem::evaluate(const std::vector<Vector>& xs) const
{
  if (batch_objective)
    return batch_objective(xs);
  return kernels::omp::map(objective, xs);
}

double constraint_penalty(const Problem& problem, const Vector& x, double penalty_weight)
{
  if (penalty_weight < 0)
    throw InvalidArgument("penalty weight must be nonnegative");
  double s = 0.0;
  for (const auto& g : problem.constraints) {
    const double v = std::max(0.0, g(x));
    s += v * v;
  }
  return penalty_weight * s;
}

double penalized_objective(const Problem& problem, const Vector& x, double penalty_weight)
{
  const double p = constraint_penalty(problem, x, penalty_weight);
  return problem.evaluate(x) + p;
}

bool feasible(const Problem& problem, const Vector& x, double tol)
{
  for (const auto& g : problem.constraints)
    if (!(g(x) <= tol))
      return false;
  return true;
}

std::size_t best_sample_index(const Problem& problem, const SampleSet& samples, double penalty_weight)
{
  if (samples.empty())
    throw InvalidArgument("no samples");
  std::optional<std::size_t> best_feasible;
  std::size_t best_penalized = 0;
  double best_penalized_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Vector& x = samples.point(i);
    if (feasible(problem, x) && (!best_feasible || samples.response(i) < samples.response(*best_feasible)))
      best_feasible = i;
    const double v = samples.response(i) + constraint_penalty(problem, x, penalty_weight);
    if (v < best_penalized_value) {
      best_penalized_value = v;
      best_penalized = i;
    }
  }
  return best_feasible.value_or(best_penalized);
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<Vector> lhs_sample(const DesignSpace& space, std::size_t n, std::uint64_t seed)
{
  if (n == 0)
    throw InvalidArgument("latin hypercube needs n >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index d = space.dims();
  std::vector<Vector> pts(n, Vector(d));
  std::vector<std::size_t> perm(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(perm[i]) + unit(rng)) / static_cast<double>(n);
      pts[i][j] = space.lower()[j] + std::min(u, 1.0) * (space.upper()[j] - space.lower()[j]);
    }
  }
  return pts;
}

bool SamplingRange::contains(const Vector& x, double tol) const
{
  if (x.size() != lower.size())
    return false;
  return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
}

SamplingRange update_sampling_range(const DesignSpace& space,
                                    const std::vector<Vector>& population,
                                    const SampleSet& samples)
{
  if (population.empty())
    throw InvalidArgument("sampling range needs a non-empty population");
  Vector lo = population.front();
  Vector hi = population.front();
  for (const auto& x : population) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  for (const auto& x : samples.points()) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  SamplingRange r{space.clip(lo), space.clip(hi)};
  return r;
}

SamplingRange population_range(const DesignSpace& space, const std::vector<Vector>& population)
{
  return update_sampling_range(space, population, SampleSet(space.dims()));
}

// ---------------------------------------------------------------------------
// ExternalEvaluator

ExternalEvaluator::ExternalEvaluator(std::string command, std::vector<std::string> args)
  : command_(std::move(command))
  , args_(std::move(args))
{
  if (command_.empty())
    throw InvalidArgument("external evaluator command is empty");
}

namespace {

struct Fd
{
  int fd = -1;
  explicit Fd(int f = -1)
    : fd(f)
  {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd()
  {
    if (fd >= 0)
      ::close(fd);
  }
  int release()
  {
    int f = fd;
    fd = -1;
    return f;
  }
};

std::string make_input(const std::vector<Vector>& points)
{
  std::string text;
  for (const auto& x : points) {
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (j)
        text += ' ';
      text += format_real(x[j]);
    }
    text += '\n';
  }
  return text;
}

} // namespace

std::vector<double> ExternalEvaluator::operator()(const std::vector<Vector>& points) const
{
  if (points.empty())
    return {};

  // The input goes through an unlinked temporary file so a child that
  // interleaves reads and writes can never deadlock against us.
  char path[] = "/tmp/amrpbs-evalXXXXXX";
  Fd input(::mkstemp(path));
  if (input.fd < 0)
    throw EvaluatorFailure(std::string("cannot create evaluator input file: ") + std::strerror(errno));
  ::unlink(path);
  const std::string text = make_input(points);
  for (std::size_t off = 0; off < text.size();) {
    const ssize_t w = ::write(input.fd, text.data() + off, text.size() - off);
    if (w < 0) {
      if (errno == EINTR)
        continue;
      throw EvaluatorFailure(std::string("cannot write evaluator input: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(w);
  }
  ::lseek(input.fd, 0, SEEK_SET);

  int pipefd[2];
  if (::pipe(pipefd) != 0)
    throw EvaluatorFailure(std::string("pipe: ") + std::strerror(errno));
  Fd read_end(pipefd[0]);
  Fd write_end(pipefd[1]);

  std::vector<std::string> argv_store;
  argv_store.push_back(command_);
  argv_store.insert(argv_store.end(), args_.begin(), args_.end());
  std::vector<char*> argv;
  for (auto& a : argv_store)
    argv.push_back(a.data());
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0)
    throw EvaluatorFailure(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(input.fd, STDIN_FILENO);
    ::dup2(write_end.fd, STDOUT_FILENO);
    ::close(read_end.fd);
    ::execvp(argv[0], argv.data());
    std::_Exit(127);
  }
  ::close(write_end.release());

  std::string output;
  char buf[4096];
  for (;;) {
    const ssize_t r = ::read(read_end.fd, buf, sizeof buf);
    if (r < 0 && errno == EINTR)
      continue;
    if (r <= 0)
      break;
    output.append(buf, static_cast<std::size_t>(r));
  }
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw EvaluatorFailure("evaluator '" + command_ + "' exited abnormally (status " + std::to_string(status) + ")");

  std::vector<double> values;
  std::istringstream lines(output);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || !std::isfinite(v))
      throw EvaluatorFailure("evaluator '" + command_ + "' returned a malformed response: '" + line + "'");
    values.push_back(v);
  }
  if (values.size() != points.size())
    throw EvaluatorFailure("evaluator '" + command_ + "' returned " + std::to_string(values.size()) +
                           " responses for " + std::to_string(points.size()) + " points");
  return values;
}

double ExternalEvaluator::operator()(const Vector& x) const
{
  return (*this)(std::vector<Vector>{x}).front();
}

} // namespace amrpbs
