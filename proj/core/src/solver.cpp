#include "svarx/solver.hpp"

#include <algorithm>
#include <cmath>

#include "svarx/errors.hpp"

namespace svarx {
namespace {

void check_shapes(const LassoProblem& problem, const Eigen::MatrixXd& B) {
  if (B.rows() != problem.design.cols() || B.cols() != problem.response.cols()) {
    throw ShapeMismatch("coefficient matrix must be " +
                        std::to_string(problem.design.cols()) + "x" +
                        std::to_string(problem.response.cols()) + ", got " +
                        std::to_string(B.rows()) + "x" +
                        std::to_string(B.cols()));
  }
}

double smooth_value(const LassoProblem& problem, const Eigen::MatrixXd& B) {
  const double n = static_cast<double>(problem.design.rows());
  return (problem.response - problem.design * B).squaredNorm() / (2.0 * n);
}

Eigen::MatrixXd prox_l1(const Eigen::MatrixXd& B, double tau) {
  return B.unaryExpr([tau](double v) { return soft_threshold(v, tau); });
}

}  // namespace

double soft_threshold(double x, double tau) {
  if (tau < 0) throw InvalidArgument("tau must be >= 0");
  const double shrunk = std::abs(x) - tau;
  if (shrunk <= 0.0) return 0.0;
  return x < 0 ? -shrunk : shrunk;
}

double objective(const LassoProblem& problem, const Eigen::MatrixXd& B,
                 double lambda) {
  check_shapes(problem, B);
  if (lambda < 0) throw InvalidArgument("lambda must be >= 0");
  return smooth_value(problem, B) + lambda * B.lpNorm<1>();
}

Eigen::MatrixXd smooth_gradient(const LassoProblem& problem,
                                const Eigen::MatrixXd& B) {
  check_shapes(problem, B);
  const double n = static_cast<double>(problem.design.rows());
  return problem.design.transpose() *
         (problem.design * B - problem.response) / n;
}

double lambda_max(const LassoProblem& problem) {
  if (problem.design.rows() == 0) throw TooFewRows("empty problem");
  const double n = static_cast<double>(problem.design.rows());
  return (problem.design.transpose() * problem.response).cwiseAbs().maxCoeff() /
         n;
}

double lipschitz_constant(const LassoProblem& problem, double tol,
                          int max_iter) {
  const auto& Z = problem.design;
  const double n = static_cast<double>(Z.rows());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(Z.cols()).normalized();
  double eig = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = Z.transpose() * (Z * v) / n;
    const double norm = w.norm();
    if (norm < 1e-300) return 0.0;  // zero design
    const double next = v.dot(w);
    v = w / norm;
    if (it > 0 && std::abs(next - eig) <= tol * std::max(1.0, std::abs(next))) {
      return next * (1.0 + 1e-6);
    }
    eig = next;
  }
  return -1.0;  // did not settle; caller falls back to backtracking
}

SolverResult fit(const LassoProblem& problem, double lambda,
                 const SolverSettings& settings,
                 const Eigen::MatrixXd* warm_start) {
  if (lambda < 0) throw InvalidArgument("lambda must be >= 0");
  if (settings.tol <= 0) throw InvalidArgument("tol must be > 0");
  if (settings.max_iter < 1) throw InvalidArgument("max_iter must be >= 1");

  const Eigen::Index cols = problem.design.cols();
  const Eigen::Index k = problem.response.cols();

  Eigen::MatrixXd B;
  if (warm_start != nullptr) {
    check_shapes(problem, *warm_start);
    B = *warm_start;
  } else {
    B = Eigen::MatrixXd::Zero(cols, k);
  }

  bool backtracking = settings.step_rule == SolverSettings::StepRule::backtracking;
  double step = 1.0;
  if (!backtracking) {
    const double lip =
        lipschitz_constant(problem, settings.power_tol, settings.power_max_iter);
    if (lip < 0) {
      backtracking = true;  // power iteration failed to settle
    } else if (lip < 1e-30) {
      step = 1.0;  // smooth term is constant, any step works
    } else {
      step = 1.0 / lip;
    }
  }

  SolverResult result;
  result.lambda = lambda;
  double f = objective(problem, B, lambda);
  if (!std::isfinite(f)) throw NonFinite("non-finite starting objective");
  result.objective_trace.push_back(f);

  Eigen::MatrixXd extrapolated = B;
  Eigen::MatrixXd candidate(cols, k);
  double t = 1.0;
  int stalled = 0;

  // One proximal step from `point`, backtracking on the majorization bound
  // when enabled.
  const auto prox_step = [&](const Eigen::MatrixXd& point) {
    Eigen::MatrixXd grad = smooth_gradient(problem, point);
    if (!backtracking) {
      return prox_l1(point - step * grad, step * lambda);
    }
    const double f_point = smooth_value(problem, point);
    for (;;) {
      Eigen::MatrixXd next = prox_l1(point - step * grad, step * lambda);
      const Eigen::MatrixXd d = next - point;
      const double quad =
          f_point + grad.cwiseProduct(d).sum() + d.squaredNorm() / (2.0 * step);
      if (smooth_value(problem, next) <= quad * (1.0 + 1e-12) + 1e-300 ||
          step < 1e-300) {
        return next;
      }
      step *= 0.5;
    }
  };

  for (int it = 1; it <= settings.max_iter; ++it) {
    candidate = prox_step(extrapolated);
    double f_candidate = objective(problem, candidate, lambda);

    if (settings.monotone && f_candidate > f) {
      // Restart: plain proximal step from the last accepted iterate cannot
      // increase the objective when the step satisfies the majorization.
      t = 1.0;
      candidate = prox_step(B);
      f_candidate = objective(problem, candidate, lambda);
      if (f_candidate > f) {  // at numerical stagnation, hold position
        candidate = B;
        f_candidate = f;
      }
    }

    if (!std::isfinite(f_candidate)) {
      throw NonFinite("objective diverged at iteration " + std::to_string(it));
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    extrapolated = candidate + ((t - 1.0) / t_next) * (candidate - B);
    t = t_next;

    const double change = std::abs(f - f_candidate);
    B.swap(candidate);
    f = f_candidate;
    result.objective_trace.push_back(f);
    result.iterations = it;
    if (change <= settings.tol * std::max(1.0, std::abs(f))) {
      // The objective-change criterion is cheap but not a certificate;
      // declare convergence only once the subgradient conditions hold.
      if (kkt_check(problem, B, lambda).passes()) {
        result.converged = true;
        break;
      }
      stalled = change == 0.0 ? stalled + 1 : 0;
      if (stalled >= 3) break;  // numerical floor reached, cannot certify
    } else {
      stalled = 0;
    }
  }

  result.coefficients = std::move(B);
  result.step = step;
  return result;
}

std::vector<SolverResult> fit_path(const LassoProblem& problem,
                                   const std::vector<double>& grid,
                                   const SolverSettings& settings) {
  if (grid.empty()) throw BadGrid("empty lambda grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0) throw BadGrid("negative lambda in grid");
    if (i > 0 && grid[i] >= grid[i - 1]) {
      throw BadGrid("lambda grid must be strictly descending");
    }
  }
  std::vector<SolverResult> results;
  results.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Eigen::MatrixXd* warm =
        results.empty() ? nullptr : &results.back().coefficients;
    results.push_back(fit(problem, grid[i], settings, warm));
  }
  return results;
}

std::vector<double> lambda_grid(const LassoProblem& problem, int count,
                                double ratio) {
  if (count < 2) throw BadGrid("grid needs at least 2 points");
  if (!(ratio > 0.0 && ratio < 1.0)) throw BadGrid("ratio must be in (0, 1)");
  const double top = lambda_max(problem);
  if (top == 0.0) return {0.0};
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    grid[static_cast<std::size_t>(i)] =
        top * std::pow(ratio, static_cast<double>(i) / (count - 1));
  }
  grid.front() = top;
  grid.back() = top * ratio;
  return grid;
}

KktReport kkt_check(const LassoProblem& problem, const Eigen::MatrixXd& B,
                    double lambda) {
  check_shapes(problem, B);
  const Eigen::MatrixXd C = smooth_gradient(problem, B);
  KktReport report;
  report.lambda = lambda;
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    for (Eigen::Index i = 0; i < B.rows(); ++i) {
      if (B(i, j) == 0.0) {
        report.max_zero_entry_gradient =
            std::max(report.max_zero_entry_gradient, std::abs(C(i, j)));
      } else {
        const double sign = B(i, j) > 0 ? 1.0 : -1.0;
        report.max_support_residual = std::max(
            report.max_support_residual, std::abs(C(i, j) + lambda * sign));
      }
    }
  }
  return report;
}

}  // namespace svarx
