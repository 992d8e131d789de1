#include "amrpbs/surrogate.hpp"

#include "amrpbs/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace amrpbs {

std::string to_string(SurrogateKind kind)
{
  return kind == SurrogateKind::rbf ? "rbf" : "kriging";
}

std::string to_string(kernels::Family family)
{
  switch (family) {
    case kernels::Family::gaussian:
      return "gaussian";
    case kernels::Family::multiquadric:
      return "multiquadric";
    case kernels::Family::cubic:
      return "cubic";
  }
  return "?";
}

namespace {

constexpr int length_scale_grid_size = 25;
constexpr double length_scale_grid_lo = 1e-2;
constexpr double length_scale_grid_hi = 1e1;
constexpr double min_rcond = 1e-15;

kernels::RowMatrix to_rows(const std::vector<Vector>& pts, Eigen::Index d)
{
  kernels::RowMatrix m(static_cast<Eigen::Index>(pts.size()), d);
  for (std::size_t i = 0; i < pts.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return m;
}

Vector data_span(const kernels::RowMatrix& pts)
{
  Vector span = pts.colwise().maxCoeff() - pts.colwise().minCoeff();
  for (Eigen::Index j = 0; j < span.size(); ++j)
    if (!(span[j] > 0))
      span[j] = 1.0;
  return span;
}

std::vector<Vector> length_scale_grid(const kernels::RowMatrix& pts)
{
  const Vector span = data_span(pts);
  std::vector<Vector> grid;
  grid.reserve(length_scale_grid_size);
  const double lo = std::log(length_scale_grid_lo);
  const double hi = std::log(length_scale_grid_hi);
  for (int k = 0; k < length_scale_grid_size; ++k) {
    const double s = std::exp(lo + (hi - lo) * k / (length_scale_grid_size - 1));
    grid.push_back(s * span);
  }
  return grid;
}

Vector broadcast_scale(const Vector& given, Eigen::Index d)
{
  if (given.size() == 1)
    return Vector::Constant(d, given[0]);
  if (given.size() != d)
    throw InvalidArgument("kernel length_scale has " + std::to_string(given.size()) + " entries for " +
                          std::to_string(d) + " dimensions");
  return given;
}

// Outcome of fitting the kernel system at one fixed length scale.
struct KrigingFit
{
  bool ok = false;
  Eigen::LLT<Matrix> factor;
  Vector weights;
  double mean = 0.0;
  double variance = 0.0;
  double log_likelihood = -std::numeric_limits<double>::infinity();
};

KrigingFit fit_kriging(const kernels::RowMatrix& pts, const Vector& y, const Vector& inv_scale, double nugget)
{
  KrigingFit fit;
  const Eigen::Index n = pts.rows();
  Matrix k = kernels::omp::gram(pts, inv_scale, kernels::Family::gaussian);
  k.diagonal().array() += nugget;
  fit.factor.compute(k);
  if (fit.factor.info() != Eigen::Success)
    return fit;
  const auto& l = fit.factor.matrixLLT();
  const double min_pivot = l.diagonal().minCoeff();
  if (!(min_pivot > 0) || !std::isfinite(min_pivot) || min_pivot * min_pivot < min_rcond * l.diagonal().maxCoeff())
    return fit;
  const Vector ones = Vector::Ones(n);
  const Vector a1 = fit.factor.solve(ones);
  const Vector ay = fit.factor.solve(y);
  const double denom = ones.dot(a1);
  if (!(denom > 0) || !std::isfinite(denom))
    return fit;
  fit.mean = ones.dot(ay) / denom;
  const Vector resid = y.array() - fit.mean;
  fit.weights = fit.factor.solve(resid);
  fit.variance = std::max(resid.dot(fit.weights) / static_cast<double>(n), std::numeric_limits<double>::min());
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    log_det += 2.0 * std::log(l(i, i));
  fit.log_likelihood = -0.5 * static_cast<double>(n) * std::log(fit.variance) - 0.5 * log_det;
  fit.ok = std::isfinite(fit.log_likelihood) && fit.weights.allFinite();
  return fit;
}

struct RbfFit
{
  bool ok = false;
  Vector weights;
  double loo_sse = std::numeric_limits<double>::infinity();
};

Matrix rbf_system(const kernels::RowMatrix& pts, const Vector& inv_scale, kernels::Family family, double nugget)
{
  const Eigen::Index n = pts.rows();
  const Eigen::Index d = pts.cols();
  Matrix m = Matrix::Zero(n + d + 1, n + d + 1);
  Matrix phi = kernels::omp::gram(pts, inv_scale, family);
  phi.diagonal().array() += nugget;
  m.topLeftCorner(n, n) = phi;
  m.block(0, n, n, 1).setOnes();
  m.block(n, 0, 1, n).setOnes();
  m.block(0, n + 1, n, d) = pts;
  m.block(n + 1, 0, d, n) = pts.transpose();
  return m;
}

RbfFit fit_rbf(const kernels::RowMatrix& pts,
               const Vector& y,
               const Vector& inv_scale,
               kernels::Family family,
               double nugget,
               bool with_loo)
{
  RbfFit fit;
  const Eigen::Index n = pts.rows();
  const Eigen::Index d = pts.cols();
  const Matrix m = rbf_system(pts, inv_scale, family, nugget);
  Eigen::PartialPivLU<Matrix> lu(m);
  const double rcond = lu.rcond();
  if (!(rcond > min_rcond) || !std::isfinite(rcond))
    return fit;
  Vector rhs = Vector::Zero(n + d + 1);
  rhs.head(n) = y;
  fit.weights = lu.solve(rhs);
  if (!fit.weights.allFinite())
    return fit;
  if (with_loo) {
    // Rippa's closed form: e_i = c_i / (M^{-1})_{ii}.
    const Matrix inv = lu.inverse();
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = fit.weights[i] / inv(i, i);
      sse += e * e;
    }
    if (!std::isfinite(sse))
      return fit;
    fit.loo_sse = sse;
  }
  fit.ok = true;
  return fit;
}

[[noreturn]] void throw_ill_conditioned(const kernels::RowMatrix& pts, const std::string& what)
{
  Eigen::Index bi = 0, bj = pts.rows() > 1 ? 1 : 0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    for (Eigen::Index j = i + 1; j < pts.rows(); ++j) {
      const double dist = (pts.row(i) - pts.row(j)).norm();
      if (dist < best) {
        best = dist;
        bi = i;
        bj = j;
      }
    }
  std::ostringstream msg;
  msg << what << ": kernel matrix is singular after the nugget; closest points are #" << bi << " and #" << bj
      << " (distance " << best << ")";
  throw IllConditionedData(msg.str());
}

} // namespace

TrainedSurrogate::TrainedSurrogate(SurrogateKind kind, KernelSpec kernel, SampleSet training)
  : kind_(kind)
  , kernel_(std::move(kernel))
  , training_(std::move(training))
{}

TrainedSurrogate train(SurrogateKind kind, const KernelSpec& kernel, const SampleSet& data)
{
  const Eigen::Index d = data.dims();
  const auto n = static_cast<Eigen::Index>(data.size());
  if (n < d + 1)
    throw InvalidArgument("training needs at least dims + 1 = " + std::to_string(d + 1) + " samples, got " +
                          std::to_string(n));
  if (kernel.regularization < 0)
    throw InvalidArgument("kernel regularization must be nonnegative");
  if (kind == SurrogateKind::kriging && kernel.family != kernels::Family::gaussian)
    throw InvalidArgument("kriging supports the gaussian correlation only");

  TrainedSurrogate model(kind, kernel, data);
  model.points_ = to_rows(data.points(), d);
  const Vector y = data.response_vector();

  std::vector<Vector> scales;
  if (kernel.length_scale.size() == 0) {
    scales = length_scale_grid(model.points_);
  } else {
    Vector s = broadcast_scale(kernel.length_scale, d);
    if (!(s.array() > 0).all())
      throw InvalidArgument("kernel length_scale must be positive");
    scales.push_back(s);
  }
  const bool search = scales.size() > 1;

  if (kind == SurrogateKind::kriging) {
    KrigingFit best;
    Vector best_scale;
    for (const auto& s : scales) {
      KrigingFit f = fit_kriging(model.points_, y, s.cwiseInverse(), kernel.regularization);
      if (f.ok && f.log_likelihood > best.log_likelihood) {
        best = std::move(f);
        best_scale = s;
      }
    }
    if (!best.ok)
      throw_ill_conditioned(model.points_, "kriging training failed");
    model.kernel_.length_scale = best_scale;
    model.inv_scale_ = best_scale.cwiseInverse();
    model.weights_ = std::move(best.weights);
    model.trend_mean_ = best.mean;
    model.process_variance_ = best.variance;
    model.fit_score_ = best.log_likelihood;
    model.factor_ = std::move(best.factor);
  } else {
    RbfFit best;
    Vector best_scale;
    for (const auto& s : scales) {
      RbfFit f = fit_rbf(model.points_, y, s.cwiseInverse(), kernel.family, kernel.regularization, search);
      if (f.ok && (!best.ok || f.loo_sse < best.loo_sse)) {
        best = std::move(f);
        best_scale = s;
      }
    }
    if (!best.ok)
      throw_ill_conditioned(model.points_, "rbf training failed");
    model.kernel_.length_scale = best_scale;
    model.inv_scale_ = best_scale.cwiseInverse();
    model.weights_ = std::move(best.weights);
    model.fit_score_ = search ? -best.loo_sse : 0.0;
  }
  return model;
}

void TrainedSurrogate::check_dims(const Vector& x) const
{
  if (x.size() != points_.cols())
    throw InvalidArgument("query has " + std::to_string(x.size()) + " coordinates, model expects " +
                          std::to_string(points_.cols()));
}

double TrainedSurrogate::predict(const Vector& x) const
{
  check_dims(x);
  const Eigen::Index n = points_.rows();
  const Eigen::Index d = points_.cols();
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    s += weights_[i] * kernels::radial(kernel_.family,
                                       kernels::scaled_sq_distance(x.data(), points_.row(i).data(), inv_scale_.data(), d));
  if (kind_ == SurrogateKind::kriging)
    return trend_mean_ + s;
  return s + weights_[n] + weights_.segment(n + 1, d).dot(x);
}

std::vector<double> TrainedSurrogate::predict(const std::vector<Vector>& xs) const
{
  std::vector<double> out(xs.size());
  for (const auto& x : xs)
    check_dims(x);
  const auto m = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i)
    out[static_cast<std::size_t>(i)] = predict(xs[static_cast<std::size_t>(i)]);
  return out;
}

Vector TrainedSurrogate::gradient(const Vector& x) const
{
  check_dims(x);
  const Eigen::Index n = points_.rows();
  const Eigen::Index d = points_.cols();
  Vector g = Vector::Zero(d);
  const Vector inv2 = inv_scale_.cwiseAbs2();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r2 = kernels::scaled_sq_distance(x.data(), points_.row(i).data(), inv_scale_.data(), d);
    const double slope = kernels::radial_slope(kernel_.family, r2);
    g += (2.0 * weights_[i] * slope) * (x - points_.row(i).transpose()).cwiseProduct(inv2);
  }
  if (kind_ == SurrogateKind::rbf)
    g += weights_.segment(n + 1, d);
  return g;
}

Posterior TrainedSurrogate::posterior(const Vector& x) const
{
  if (kind_ != SurrogateKind::kriging)
    throw UnsupportedOperation("posterior variance requires a kriging model");
  check_dims(x);
  const Eigen::Index n = points_.rows();
  const Eigen::Index d = points_.cols();
  Vector r(n);
  for (Eigen::Index i = 0; i < n; ++i)
    r[i] = kernels::radial(kernel_.family,
                           kernels::scaled_sq_distance(x.data(), points_.row(i).data(), inv_scale_.data(), d));
  const double mean = trend_mean_ + r.dot(weights_);
  const Vector v = factor_.matrixL().solve(r);
  const double reduction = std::min(1.0, v.squaredNorm());
  Posterior p{mean, process_variance_ * (1.0 - reduction), Vector::Zero(d)};
  const Vector inv2 = inv_scale_.cwiseAbs2();
  for (Eigen::Index i = 0; i < n; ++i)
    p.mean_gradient -= (weights_[i] * r[i]) * (x - points_.row(i).transpose()).cwiseProduct(inv2);
  return p;
}

std::string TrainedSurrogate::describe() const
{
  std::ostringstream os;
  os << to_string(kind_) << "/" << to_string(kernel_.family) << " length_scale=[";
  for (Eigen::Index j = 0; j < kernel_.length_scale.size(); ++j)
    os << (j ? " " : "") << format_real(kernel_.length_scale[j]);
  os << "]";
  return os.str();
}

double predict(const TrainedSurrogate& model, const Vector& x)
{
  return model.predict(x);
}

Posterior gp_posterior(const TrainedSurrogate& model, const Vector& x)
{
  return model.posterior(x);
}

std::vector<Candidate> default_candidates()
{
  return {
    {SurrogateKind::rbf, {kernels::Family::gaussian, {}, default_nugget}},
    {SurrogateKind::rbf, {kernels::Family::multiquadric, {}, default_nugget}},
    {SurrogateKind::rbf, {kernels::Family::cubic, {}, default_nugget}},
    {SurrogateKind::kriging, {kernels::Family::gaussian, {}, default_nugget}},
  };
}

namespace {

constexpr int cv_folds = 5;

double median(std::vector<double> v)
{
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lower);
  }
  return m;
}

} // namespace

double cross_validation_error(const SampleSet& data, const Candidate& candidate, std::uint64_t seed)
{
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> errors;
  errors.reserve(data.size());
  for (int fold = 0; fold < cv_folds; ++fold) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < order.size(); ++i)
      (static_cast<int>(i % cv_folds) == fold ? test_idx : train_idx).push_back(order[i]);
    if (test_idx.empty())
      continue;
    const TrainedSurrogate m = train(candidate.kind, candidate.kernel, data.subset(train_idx));
    for (auto i : test_idx)
      errors.push_back(std::abs(m.predict(data.point(i)) - data.response(i)));
  }
  return median(std::move(errors));
}

TrainedSurrogate select_model(const SampleSet& data, std::span<const Candidate> candidates, std::uint64_t seed)
{
  if (candidates.empty())
    throw InvalidArgument("model selection needs at least one candidate");
  if (candidates.size() == 1)
    return train(candidates[0].kind, candidates[0].kernel, data);
  const auto d = static_cast<std::size_t>(data.dims());
  if (data.size() < 2 * (d + 1))
    throw InvalidArgument("model selection needs at least 2*(dims+1) samples");

  const auto count = static_cast<std::ptrdiff_t>(candidates.size());
  std::vector<double> score(candidates.size(), std::numeric_limits<double>::infinity());
  std::vector<std::string> failures(candidates.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < count; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    try {
      score[ci] = cross_validation_error(data, candidates[ci], seed);
    } catch (const Error& e) {
      failures[ci] = e.what();
    }
  }

  std::vector<std::size_t> ranking(candidates.size());
  std::iota(ranking.begin(), ranking.end(), std::size_t{0});
  std::stable_sort(ranking.begin(), ranking.end(), [&](auto a, auto b) { return score[a] < score[b]; });
  std::string all_failures;
  for (auto ci : ranking) {
    if (!std::isfinite(score[ci]) && !failures[ci].empty()) {
      all_failures += "\n  " + to_string(candidates[ci].kind) + "/" + to_string(candidates[ci].kernel.family) + ": " +
                      failures[ci];
      continue;
    }
    try {
      return train(candidates[ci].kind, candidates[ci].kernel, data);
    } catch (const IllConditionedData& e) {
      all_failures += "\n  " + to_string(candidates[ci].kind) + "/" + to_string(candidates[ci].kernel.family) + ": " +
                      e.what();
    }
  }
  throw IllConditionedData("every surrogate candidate failed to train:" + all_failures);
}

// ---------------------------------------------------------------------------
// Checkpoint format

namespace {

constexpr const char* model_magic = "amrpbs-surrogate";

kernels::Family parse_family(const std::string& s)
{
  if (s == "gaussian")
    return kernels::Family::gaussian;
  if (s == "multiquadric")
    return kernels::Family::multiquadric;
  if (s == "cubic")
    return kernels::Family::cubic;
  throw InvalidArgument("unknown kernel family '" + s + "'");
}

template<typename T>
T expect_field(std::istream& in, const std::string& key)
{
  std::string k;
  T value{};
  if (!(in >> k) || k != key)
    throw InvalidArgument("model checkpoint: expected '" + key + "', found '" + k + "'");
  if (!(in >> value))
    throw InvalidArgument("model checkpoint: malformed value for '" + key + "'");
  return value;
}

double read_real(std::istream& in)
{
  std::string tok;
  if (!(in >> tok))
    throw InvalidArgument("model checkpoint truncated");
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (*end != '\0')
    throw InvalidArgument("model checkpoint: bad number '" + tok + "'");
  return v;
}

} // namespace

void write_model(std::ostream& out, const TrainedSurrogate& model)
{
  const auto& k = model.kernel();
  const auto& data = model.training();
  out << model_magic << " 1\n";
  out << "kind " << to_string(model.kind()) << "\n";
  out << "family " << to_string(k.family) << "\n";
  out << "regularization " << format_real(k.regularization) << "\n";
  out << "dims " << data.dims() << "\n";
  out << "length_scale";
  for (Eigen::Index j = 0; j < k.length_scale.size(); ++j)
    out << " " << format_real(k.length_scale[j]);
  out << "\n";
  out << "process_variance " << format_real(model.process_variance()) << "\n";
  out << "trend_mean " << format_real(model.trend_mean()) << "\n";
  out << "fit_score " << format_real(model.fit_score()) << "\n";
  out << "samples " << data.size() << "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dims(); ++j)
      out << format_real(data.point(i)[j]) << " ";
    out << format_real(data.response(i)) << "\n";
  }
  out << "weights " << model.weights().size() << "\n";
  for (Eigen::Index i = 0; i < model.weights().size(); ++i)
    out << format_real(model.weights()[i]) << "\n";
  out << "end\n";
}

TrainedSurrogate read_model(std::istream& in)
{
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != model_magic || version != 1)
    throw InvalidArgument("not a surrogate checkpoint");
  const auto kind_s = expect_field<std::string>(in, "kind");
  const auto family_s = expect_field<std::string>(in, "family");
  std::string key;
  in >> key;
  if (key != "regularization")
    throw InvalidArgument("model checkpoint: expected 'regularization'");
  const double reg = read_real(in);
  const auto dims = expect_field<Eigen::Index>(in, "dims");
  if (dims < 1)
    throw InvalidArgument("model checkpoint: bad dims");
  in >> key;
  if (key != "length_scale")
    throw InvalidArgument("model checkpoint: expected 'length_scale'");
  Vector scale(dims);
  for (Eigen::Index j = 0; j < dims; ++j)
    scale[j] = read_real(in);
  in >> key;
  const double variance = read_real(in);
  in >> key;
  const double mean = read_real(in);
  in >> key;
  const double score = read_real(in);
  const auto n = expect_field<std::size_t>(in, "samples");
  SampleSet data(dims);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(dims);
    for (Eigen::Index j = 0; j < dims; ++j)
      x[j] = read_real(in);
    data.add(x, read_real(in));
  }
  const auto nw = expect_field<Eigen::Index>(in, "weights");
  Vector weights(nw);
  for (Eigen::Index i = 0; i < nw; ++i)
    weights[i] = read_real(in);
  in >> key;
  if (key != "end")
    throw InvalidArgument("model checkpoint: missing 'end'");

  if (kind_s != "rbf" && kind_s != "kriging")
    throw InvalidArgument("model checkpoint: unknown kind '" + kind_s + "'");
  const SurrogateKind kind = kind_s == "rbf" ? SurrogateKind::rbf : SurrogateKind::kriging;
  KernelSpec spec{parse_family(family_s), scale, reg};
  TrainedSurrogate model = train(kind, spec, data);
  if (model.weights().size() != weights.size() ||
      (model.weights() - weights).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + weights.cwiseAbs().maxCoeff()))
    throw InvalidArgument("model checkpoint: stored weights do not match the training data");
  model.weights_ = weights;
  model.process_variance_ = variance;
  model.trend_mean_ = mean;
  model.fit_score_ = score;
  return model;
}

} // namespace amrpbs
