#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "svarx/design.hpp"
#include "svarx/series.hpp"
#include "svarx/solver.hpp"

namespace svarx {

/// The four models compared in the evaluation harness:
/// A = URL exogenous only, B = query exogenous only, C = all, D = pure VAR.
enum class Variant : char { A = 'A', B = 'B', C = 'C', D = 'D' };

char to_char(Variant v);
Variant variant_from_char(char c);

/// A fitted VAR-X model plus everything needed to forecast with it on the
/// original differenced scale: lag coefficient matrices, the centering means
/// recorded at design time, and (optionally) the seasonal transform for
/// reporting forecasts on the level scale.
struct VarxModel {
  std::vector<Eigen::MatrixXd> theta;  // p matrices, k x k
  std::vector<Eigen::MatrixXd> beta;   // s matrices, k x m (s may be 0)
  std::vector<std::string> response_labels;
  std::vector<std::string> exogenous_labels;
  double lambda = 0.0;
  Eigen::VectorXd response_means;             // k
  std::vector<Eigen::VectorXd> y_lag_means;   // p vectors of k
  std::vector<Eigen::VectorXd> x_lag_means;   // s vectors of m
  std::optional<SeasonalTransform> seasonal;
  Variant variant = Variant::C;

  int k() const { return theta.empty() ? 0 : static_cast<int>(theta[0].rows()); }
  int m() const { return beta.empty() ? 0 : static_cast<int>(beta[0].cols()); }
  int p() const { return static_cast<int>(theta.size()); }
  int s() const { return static_cast<int>(beta.size()); }
};

struct ModelContext {
  std::optional<SeasonalTransform> seasonal;
  Variant variant = Variant::C;
};

/// Unstack a solver solution into per-lag coefficient matrices using the
/// problem's column blocks. Lossless: stacked(from_solution(..)) == B.
VarxModel from_solution(const SolverResult& result, const LassoProblem& problem,
                        ModelContext context = {});

/// Restack the model into the solver's (k*p + m*s) x k layout.
Eigen::MatrixXd stacked(const VarxModel& model);

/// Last `n_lags` columns before `end_offset`, most recent first:
/// column j holds the values at offset end_offset-1-j.
Eigen::MatrixXd lag_history(const MultivariateSeries& series,
                            std::size_t end_offset, int n_lags);

/// One-step forecast on the differenced scale. `y_history` is k x p with the
/// most recent week in column 0; `x_history` is m x s (ignored when s = 0).
Eigen::VectorXd forecast_one_step(const VarxModel& model,
                                  const Eigen::MatrixXd& y_history,
                                  const Eigen::MatrixXd& x_history);

enum class XFuturePolicy { hold_last, zeros, provided };

/// Recursive h-step forecast, feeding predictions back as pseudo-history.
/// Exogenous futures follow `policy`; with `provided`, `x_futures` must have
/// at least h-1 columns (column j = week t+j+1 ... only lags enter, so the
/// last step needs x at t+h-1).
Eigen::MatrixXd forecast_h_step(const VarxModel& model,
                                const Eigen::MatrixXd& y_history,
                                const Eigen::MatrixXd& x_history, int horizon,
                                XFuturePolicy policy = XFuturePolicy::hold_last,
                                const Eigen::MatrixXd* x_futures = nullptr);

/// Undo the seasonal difference for one forecast vector: returns the level
/// value at raw offset `target_week_offset` given the observed raw series.
Eigen::VectorXd forecast_level(const VarxModel& model,
                               const Eigen::VectorXd& diff_forecast,
                               std::size_t target_week_offset,
                               const MultivariateSeries& raw_history);

struct SparsityPattern {
  std::vector<Eigen::MatrixXd> theta;  // |coefficient|, small entries zeroed
  std::vector<Eigen::MatrixXd> beta;
  std::vector<std::size_t> theta_nonzeros;  // per lag
  std::vector<std::size_t> beta_nonzeros;
  std::size_t total_nonzeros = 0;
};

SparsityPattern sparsity_pattern(const VarxModel& model, double threshold = 0.0);

/// JSON model file, schema version 1. Matrices stored row-major with labels.
void save_model(std::ostream& out, const VarxModel& model);
/// Throws MissingModel on malformed or version-incompatible input.
VarxModel load_model(std::istream& in);

}  // namespace svarx
