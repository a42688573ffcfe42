#include "svarx/synthetic.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <string>

#include "svarx/errors.hpp"
#include "svarx/ingest.hpp"

namespace svarx {

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  have_spare_ = true;
  return r * std::cos(angle);
}

void SyntheticSpec::validate() const {
  if (k < 1 || m < 1 || T < 1) throw InvalidSpec("dimensions must be >= 1");
  if (p < 1) throw InvalidSpec("p must be >= 1");
  if (s < 0) throw InvalidSpec("s must be >= 0");
  if (T <= std::max(p, s)) throw InvalidSpec("T must exceed max(p, s)");
  if (!(sparsity > 0.0 && sparsity <= 1.0)) {
    throw InvalidSpec("sparsity must be in (0, 1]");
  }
  if (!(spectral_radius > 0.0 && spectral_radius < 1.0)) {
    throw InvalidSpec("spectral_radius must be in (0, 1)");
  }
  if (noise_std < 0.0) throw InvalidSpec("noise_std must be >= 0");
}

double companion_spectral_radius(const std::vector<Eigen::MatrixXd>& theta) {
  if (theta.empty()) throw InvalidArgument("no lag matrices");
  const auto k = theta[0].rows();
  const auto p = static_cast<Eigen::Index>(theta.size());
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k * p, k * p);
  for (Eigen::Index i = 0; i < p; ++i) {
    companion.block(0, i * k, k, k) = theta[static_cast<std::size_t>(i)];
  }
  if (p > 1) {
    companion.block(k, 0, k * (p - 1), k * (p - 1)) =
        Eigen::MatrixXd::Identity(k * (p - 1), k * (p - 1));
  }
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
  return eig.eigenvalues().array().abs().maxCoeff();
}

void rescale_to_spectral_radius(std::vector<Eigen::MatrixXd>& theta,
                                double target) {
  const double rho = companion_spectral_radius(theta);
  if (rho < 1e-14) return;  // all-zero dynamics are already stable
  const double c = target / rho;
  double ci = 1.0;
  for (auto& block : theta) {
    ci *= c;
    block *= ci;
  }
}

VarxCoefficients draw_varx_coefficients(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  VarxCoefficients coefs;
  coefs.theta.reserve(static_cast<std::size_t>(spec.p));
  for (int lag = 0; lag < spec.p; ++lag) {
    Eigen::MatrixXd block(spec.k, spec.k);
    for (Eigen::Index i = 0; i < spec.k; ++i) {
      for (Eigen::Index j = 0; j < spec.k; ++j) {
        const bool active = rng.uniform() < spec.sparsity;
        const double value = rng.normal();  // drawn regardless, keeps streams aligned
        block(i, j) = active ? value : 0.0;
      }
    }
    coefs.theta.push_back(std::move(block));
  }
  rescale_to_spectral_radius(coefs.theta, spec.spectral_radius);
  coefs.beta.reserve(static_cast<std::size_t>(spec.s));
  for (int lag = 0; lag < spec.s; ++lag) {
    Eigen::MatrixXd block(spec.k, spec.m);
    for (Eigen::Index i = 0; i < spec.k; ++i) {
      for (Eigen::Index j = 0; j < spec.m; ++j) {
        const bool active = rng.uniform() < spec.sparsity;
        const double value = rng.normal();
        block(i, j) = active ? value : 0.0;
      }
    }
    coefs.beta.push_back(std::move(block));
  }
  return coefs;
}

namespace {

std::vector<std::string> response_labels(int k) {
  if (k == 9) return RegionMap::canonical_regions();
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(k));
  for (int i = 1; i <= k; ++i) labels.push_back("y" + std::to_string(i));
  return labels;
}

std::vector<std::string> exogenous_labels(int k, int m) {
  if (k == 9 && m == 18) {
    std::vector<std::string> labels;
    labels.reserve(18);
    for (const auto& r : RegionMap::canonical_regions())
      labels.push_back(r + "-query");
    for (const auto& r : RegionMap::canonical_regions())
      labels.push_back(r + "-url");
    return labels;
  }
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) labels.push_back("x" + std::to_string(i));
  return labels;
}

}  // namespace

std::pair<MultivariateSeries, MultivariateSeries> simulate_varx(
    const VarxCoefficients& coefficients, int m, const SimulationOptions& opts) {
  if (coefficients.theta.empty()) throw InvalidArgument("no lag matrices");
  if (m < 1) throw InvalidArgument("m must be >= 1");
  if (opts.T < 1) throw InvalidArgument("T must be >= 1");
  const int k = static_cast<int>(coefficients.theta[0].rows());
  const int p = static_cast<int>(coefficients.theta.size());
  const int s = static_cast<int>(coefficients.beta.size());
  for (const auto& block : coefficients.theta) {
    if (block.rows() != k || block.cols() != k) {
      throw ShapeMismatch("theta blocks must be k x k");
    }
  }
  for (const auto& block : coefficients.beta) {
    if (block.rows() != k || block.cols() != m) {
      throw ShapeMismatch("beta blocks must be k x m");
    }
  }

  Rng rng(opts.seed);
  const int total = opts.burn_in + opts.T;

  // Exogenous path: stable AR(1) per row, stationary start.
  Eigen::MatrixXd x(m, total);
  const double phi = opts.x_ar_coefficient;
  const double stationary_std =
      opts.x_noise_std / std::sqrt(1.0 - phi * phi);
  for (int i = 0; i < m; ++i) {
    x(i, 0) = stationary_std * rng.normal();
    for (int t = 1; t < total; ++t) {
      x(i, t) = phi * x(i, t - 1) + opts.x_noise_std * rng.normal();
    }
  }

  // Response recursion, zero pre-sample history.
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(k, total);
  Eigen::VectorXd noise(k);
  for (int t = 0; t < total; ++t) {
    Eigen::VectorXd value = Eigen::VectorXd::Zero(k);
    for (int i = 1; i <= p; ++i) {
      if (t - i >= 0) {
        value += coefficients.theta[static_cast<std::size_t>(i - 1)] *
                 y.col(t - i);
      }
    }
    for (int j = 1; j <= s; ++j) {
      if (t - j >= 0) {
        value += coefficients.beta[static_cast<std::size_t>(j - 1)] *
                 x.col(t - j);
      }
    }
    for (int i = 0; i < k; ++i) noise(i) = opts.noise_std * rng.normal();
    y.col(t) = value + noise;
  }

  const TimeIndex index{opts.start_week, static_cast<std::size_t>(opts.T)};
  MultivariateSeries y_series(response_labels(k), index,
                              y.rightCols(opts.T));
  MultivariateSeries x_series(exogenous_labels(k, m), index,
                              x.rightCols(opts.T));
  return {std::move(y_series), std::move(x_series)};
}

SyntheticData generate_synthetic_varx(const SyntheticSpec& spec) {
  spec.validate();
  VarxCoefficients coefs = draw_varx_coefficients(spec);
  SimulationOptions opts;
  opts.T = spec.T;
  opts.noise_std = spec.noise_std;
  opts.seed = spec.seed + 0x9e3779b97f4a7c15ULL;  // decouple draw and path streams
  auto [y, x] = simulate_varx(coefs, spec.m, opts);
  return SyntheticData{std::move(y), std::move(x), std::move(coefs)};
}

}  // namespace svarx
