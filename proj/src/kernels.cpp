#include "amrpbs/kernels.hpp"

#include <exception>
#include <mutex>

namespace amrpbs::kernels {

namespace serial {

Eigen::MatrixXd gram(const RowMatrix& points, const Eigen::VectorXd& inv_scale, Family family)
{
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = radial(family, scaled_sq_distance(points.row(i).data(), points.row(j).data(), inv_scale.data(), d));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::MatrixXd cross(const RowMatrix& queries,
                      const RowMatrix& points,
                      const Eigen::VectorXd& inv_scale,
                      Family family)
{
  const Eigen::Index m = queries.rows();
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  Eigen::MatrixXd k(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      k(i, j) = radial(family, scaled_sq_distance(queries.row(i).data(), points.row(j).data(), inv_scale.data(), d));
  return k;
}

std::vector<double> map(const PointFunction& f, const std::vector<Eigen::VectorXd>& points)
{
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    out[i] = f(points[i]);
  return out;
}

} // namespace serial

namespace omp {

Eigen::MatrixXd gram(const RowMatrix& points, const Eigen::VectorXd& inv_scale, Family family)
{
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  Eigen::MatrixXd k(n, n);
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = radial(family, scaled_sq_distance(points.row(i).data(), points.row(j).data(), inv_scale.data(), d));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::MatrixXd cross(const RowMatrix& queries,
                      const RowMatrix& points,
                      const Eigen::VectorXd& inv_scale,
                      Family family)
{
  const Eigen::Index m = queries.rows();
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  Eigen::MatrixXd k(m, n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      k(i, j) = radial(family, scaled_sq_distance(queries.row(i).data(), points.row(j).data(), inv_scale.data(), d));
  return k;
}

std::vector<double> map(const PointFunction& f, const std::vector<Eigen::VectorXd>& points)
{
  std::vector<double> out(points.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = f(points[static_cast<std::size_t>(i)]);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure)
        failure = std::current_exception();
    }
  }
  if (failure)
    std::rethrow_exception(failure);
  return out;
}

} // namespace omp

} // namespace amrpbs::kernels
