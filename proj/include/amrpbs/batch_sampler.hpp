#pragma once

#include "amrpbs/surrogate.hpp"

#include <cstdint>
#include <vector>

namespace amrpbs {

// The sampler maximizes g = -f internally. Means, incumbents and the
// extremum M passed to these functions are all in the g convention.

/// (u Phi(u) + phi(u)) sigma with u = (mean_g - incumbent_g) / sigma;
/// zero when sigma < 1e-12.
double expected_improvement(double mean_g, double sigma, double incumbent_g);

/// EI of a kriging model at x. The incumbent is max(-y) over the data.
double expected_improvement(const TrainedSurrogate& gp, const Vector& x, double incumbent_g);

/// alpha when positive, otherwise log(1 + e^alpha); strictly positive.
double softplus_floor(double alpha);

/// Largest posterior-mean gradient norm over `probes` Latin hypercube
/// points of the range, floored at 1e-6.
double estimate_lipschitz(const TrainedSurrogate& gp, const SamplingRange& range, int probes, std::uint64_t seed);

/// Probability that x lies outside the exclusion ball around x_i:
/// 0.5 erfc(-(L |x - x_i| - M + mean_i) / sqrt(2 std_i²)), std_i floored at 1e-9.
double local_penalizer(const Vector& x, const Vector& x_i, double mean_i, double std_i, double lipschitz, double extremum);

struct ChosenPoint
{
  Vector x;
  double mean_g;
  double std;
};

/// Everything needed to evaluate the penalized acquisition of one greedy step.
struct AcquisitionState
{
  TrainedSurrogate gp;
  double incumbent;
  double lipschitz;
  double extremum;
  std::vector<ChosenPoint> chosen;

  /// softplus_floor(EI(x)), the unpenalized acquisition.
  double base(const Vector& x) const;
  /// base(x) times the penalizer of every chosen point.
  double penalized(const Vector& x) const;
  /// Appends x with the GP posterior at x.
  void choose(const Vector& x);
};

/// Builds the acquisition state of a fresh GP fitted to the data.
AcquisitionState make_acquisition(const SampleSet& data, const SamplingRange& range, std::uint64_t seed);

struct InnerOptimizerSettings
{
  /// Latin hypercube screening points per dimension.
  int screen_per_dim = 100;
  /// Best screening points per dimension that get the local refinement.
  int starts_per_dim = 10;
  /// Search window levels; each is a tenth of the previous one.
  int sweeps = 4;
  /// Half-width of the first window relative to the range width.
  double initial_window = 0.25;
  /// Coordinate passes per window while they keep improving.
  int passes = 4;
  /// Golden-section tolerance relative to the range width.
  double tolerance = 1e-6;
};

struct Maximum
{
  Vector x;
  double value;
};

/// Multi-start maximization over the range: a Latin hypercube screen, then
/// coordinate-wise golden-section refinement of its best points. Degenerate
/// dimensions of the range are held fixed.
Maximum maximize_acquisition(const std::function<double(const Vector&)>& acquisition,
                             const SamplingRange& range,
                             std::uint64_t seed,
                             const InnerOptimizerSettings& settings = {});

struct Batch
{
  std::vector<Vector> points;
  /// Penalized acquisition of each point at the step it was chosen.
  std::vector<double> acquisition;
  double lipschitz = 0.0;
  int perturbed = 0;
};

/// Greedy local-penalization batch: for i = 1..batch_size maximize the
/// running penalized acquisition, append the argmax, fold in its penalizer.
/// Points are kept at least 1e-9 from the data and from each other.
Batch select_batch(const SampleSet& data,
                   const SamplingRange& range,
                   int batch_size,
                   std::uint64_t seed,
                   const InnerOptimizerSettings& settings = {});

inline constexpr int default_lipschitz_probes = 500;

} // namespace amrpbs
