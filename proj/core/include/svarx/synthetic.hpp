#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "svarx/series.hpp"

namespace svarx {

/// Deterministic random source. Gaussians come from Box-Muller over raw
/// mt19937_64 output, so streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }
  double normal();

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

struct SyntheticSpec {
  int k = 9;    // response dimension
  int m = 18;   // exogenous dimension
  int T = 178;  // weeks
  int p = 2;    // response lag order
  int s = 1;    // exogenous lag order (0 = exogenous series have no effect)
  double sparsity = 0.3;         // fraction of nonzero coefficients, (0,1]
  double spectral_radius = 0.8;  // companion radius after rescaling, (0,1)
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidSpec
};

struct VarxCoefficients {
  std::vector<Eigen::MatrixXd> theta;  // p matrices, k x k
  std::vector<Eigen::MatrixXd> beta;   // s matrices, k x m
};

struct SimulationOptions {
  int T = 178;
  double noise_std = 1.0;
  std::uint64_t seed = 0;
  int burn_in = 200;
  double x_ar_coefficient = 0.7;
  double x_noise_std = 1.0;
  IsoWeek start_week{2013, 1};
};

struct SyntheticData {
  MultivariateSeries y;
  MultivariateSeries x;
  VarxCoefficients truth;
};

/// Largest eigenvalue magnitude of the VAR companion matrix.
double companion_spectral_radius(const std::vector<Eigen::MatrixXd>& theta);

/// Scale lag block i by c^i so the companion spectral radius lands exactly
/// on `target` (eigenvalues of the companion scale linearly under this map).
void rescale_to_spectral_radius(std::vector<Eigen::MatrixXd>& theta,
                                double target);

/// Draw sparse coefficient tensors per the spec and rescale for stability.
VarxCoefficients draw_varx_coefficients(const SyntheticSpec& spec);

/// Simulate X (stable AR(1) per row) and Y (the VAR-X recursion with
/// Gaussian noise) for opts.T weeks after a burn-in. `m` gives the exogenous
/// dimension; when the coefficients carry no beta blocks, X is generated but
/// does not feed Y.
std::pair<MultivariateSeries, MultivariateSeries> simulate_varx(
    const VarxCoefficients& coefficients, int m, const SimulationOptions& opts);

/// draw_varx_coefficients + simulate_varx with labels matching the census
/// pipeline when k = 9 (and -query/-url exogenous labels when m = 18).
SyntheticData generate_synthetic_varx(const SyntheticSpec& spec);

}  // namespace svarx
