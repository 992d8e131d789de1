#pragma once

// Data-parallel inner loops shared by the surrogates and the optimizer.
//
// Every kernel exists twice: `serial` is the reference implementation kept
// for testing, `omp` is the OpenMP version the library calls. Both compute
// each output element with the same arithmetic in the same order, so their
// results are bit-identical (the OpenMP loops never reduce across threads).

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <vector>

namespace amrpbs::kernels {

enum class Family
{
  gaussian,
  multiquadric,
  cubic
};

/// Radial basis value as a function of the squared scaled distance r².
inline double radial(Family family, double r2)
{
  switch (family) {
    case Family::gaussian:
      return std::exp(-0.5 * r2);
    case Family::multiquadric:
      return std::sqrt(1.0 + r2);
    case Family::cubic:
      return r2 * std::sqrt(r2);
  }
  return 0.0;
}

/// d radial / d(r²).
inline double radial_slope(Family family, double r2)
{
  switch (family) {
    case Family::gaussian:
      return -0.5 * std::exp(-0.5 * r2);
    case Family::multiquadric:
      return 0.5 / std::sqrt(1.0 + r2);
    case Family::cubic:
      return 1.5 * std::sqrt(r2);
  }
  return 0.0;
}

/// Squared distance between a and b after multiplying each coordinate by inv_scale.
inline double scaled_sq_distance(const double* a, const double* b, const double* inv_scale, Eigen::Index d)
{
  double s = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double t = (a[j] - b[j]) * inv_scale[j];
    s += t * t;
  }
  return s;
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PointFunction = std::function<double(const Eigen::VectorXd&)>;

namespace serial {

/// Symmetric N×N matrix K_ij = radial(|x_i - x_j|²) with rows of `points` as x_i.
Eigen::MatrixXd gram(const RowMatrix& points, const Eigen::VectorXd& inv_scale, Family family);

/// M×N matrix of radial values between each query row and each point row.
Eigen::MatrixXd cross(const RowMatrix& queries,
                      const RowMatrix& points,
                      const Eigen::VectorXd& inv_scale,
                      Family family);

/// Applies f to every point.
std::vector<double> map(const PointFunction& f, const std::vector<Eigen::VectorXd>& points);

} // namespace serial

namespace omp {

Eigen::MatrixXd gram(const RowMatrix& points, const Eigen::VectorXd& inv_scale, Family family);

Eigen::MatrixXd cross(const RowMatrix& queries,
                      const RowMatrix& points,
                      const Eigen::VectorXd& inv_scale,
                      Family family);

/// Concurrent map; f must be reentrant. The first exception thrown by any
/// call is rethrown after the loop joins.
std::vector<double> map(const PointFunction& f, const std::vector<Eigen::VectorXd>& points);

} // namespace omp

} // namespace amrpbs::kernels
