#pragma once

#include <Eigen/Dense>
#include <vector>

#include "svarx/design.hpp"

namespace svarx {

struct SolverSettings {
  /// Candidate-stop threshold: once the objective change drops below
  /// tol * max(1, |objective|), the solution is checked against the KKT
  /// certificate and iteration continues until the certificate holds.
  double tol = 1e-7;
  int max_iter = 10000;
  /// Function-value restart: whenever an accelerated step would increase the
  /// objective, momentum is reset and a plain proximal step is taken, so the
  /// objective trace is non-increasing.
  bool monotone = true;
  enum class StepRule { fixed_lipschitz, backtracking };
  StepRule step_rule = StepRule::fixed_lipschitz;
  // power iteration for the Lipschitz constant of the smooth term
  double power_tol = 1e-10;
  int power_max_iter = 1000;
};

struct SolverResult {
  Eigen::MatrixXd coefficients;        // (k*p + m*s) x k
  std::vector<double> objective_trace; // initial value, then one per iteration
  int iterations = 0;
  bool converged = false;
  double lambda = 0.0;
  double step = 0.0;  // final gradient step size used
};

/// Subgradient certificate for a lasso solution. With C = (1/N) Z'(ZB - R):
/// zero entries need |C_ij| <= lambda, support entries need
/// C_ij = -lambda * sign(B_ij); `passes` allows the documented slack.
struct KktReport {
  double lambda = 0.0;
  double max_zero_entry_gradient = 0.0;
  double max_support_residual = 0.0;
  bool passes() const {
    return max_zero_entry_gradient <= lambda * (1.0 + 1e-3) &&
           max_support_residual <= lambda * 1e-3 + 1e-8;
  }
};

/// sign(x) * max(|x| - tau, 0)
double soft_threshold(double x, double tau);

/// (1/(2N)) * ||response - Z B||_F^2 + lambda * ||B||_1
double objective(const LassoProblem& problem, const Eigen::MatrixXd& B,
                 double lambda);

/// Gradient of the smooth part: (1/N) * Z'(Z B - response).
Eigen::MatrixXd smooth_gradient(const LassoProblem& problem,
                                const Eigen::MatrixXd& B);

/// Smallest penalty for which the all-zero matrix is optimal:
/// (1/N) * max|Z' response|.
double lambda_max(const LassoProblem& problem);

/// Largest eigenvalue of (1/N) Z'Z by power iteration. Returns a value
/// slightly inflated (1e-6 relative) so 1/L is a safe step size; returns a
/// negative value if the iteration failed to settle within the cap.
double lipschitz_constant(const LassoProblem& problem, double tol = 1e-10,
                          int max_iter = 1000);

/// Accelerated proximal gradient (FISTA) for the lasso objective.
SolverResult fit(const LassoProblem& problem, double lambda,
                 const SolverSettings& settings = {},
                 const Eigen::MatrixXd* warm_start = nullptr);

/// Solve along a strictly descending grid, warm-starting each solution from
/// the previous one.
std::vector<SolverResult> fit_path(const LassoProblem& problem,
                                   const std::vector<double>& grid,
                                   const SolverSettings& settings = {});

/// Log-spaced grid from lambda_max down to ratio * lambda_max, inclusive.
/// Degenerates to {0} when lambda_max is zero.
std::vector<double> lambda_grid(const LassoProblem& problem, int count,
                                double ratio);

KktReport kkt_check(const LassoProblem& problem, const Eigen::MatrixXd& B,
                    double lambda);

}  // namespace svarx
