#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "svarx/series.hpp"

namespace svarx {

/// One contiguous run of design columns: all series of one source at one lag.
struct ColumnBlock {
  enum class Source { response, exogenous };
  Source source = Source::response;
  int lag = 1;               // 1-based; lag i means week t-i
  std::size_t offset = 0;    // first column of the block
  std::size_t count = 0;     // k for response blocks, m for exogenous blocks
  std::vector<std::string> labels;  // series labels, block order
};

/// The stacked regression behind the penalized least-squares objective:
/// row t of `response` is Y at week max(p,s)+t, and the matching design row
/// is [Y_{t-1}, .., Y_{t-p}, X_{t-1}, .., X_{t-s}], most recent lag first.
/// With centering, column means are subtracted and recorded for forecasting.
/// With standardization, design columns are additionally divided by their
/// standard deviation; the penalty then acts on the standardized scale and
/// coefficients are reported unstandardized when a model is unstacked.
struct LassoProblem {
  Eigen::MatrixXd design;    // N x (k*p + m*s)
  Eigen::MatrixXd response;  // N x k
  std::vector<ColumnBlock> blocks;
  std::vector<std::string> response_labels;
  Eigen::VectorXd design_means;    // per design column; zero when uncentered
  Eigen::VectorXd response_means;  // per response column; zero when uncentered
  Eigen::VectorXd design_scales;   // per design column; one when unstandardized
  bool centered = false;
  bool standardized = false;
  int p = 0;
  int s = 0;

  std::size_t n_rows() const { return static_cast<std::size_t>(design.rows()); }
  std::size_t n_cols() const { return static_cast<std::size_t>(design.cols()); }
  std::size_t k() const { return static_cast<std::size_t>(response.cols()); }
};

/// Stack response lags (and exogenous lags when `x` is non-null) into a
/// LassoProblem. Requires p >= 1; s >= 1 with x present, s = 0 without.
LassoProblem build_design(const MultivariateSeries& y,
                          const MultivariateSeries* x, int p, int s,
                          bool center = true, bool standardize = false);

inline LassoProblem build_design(const MultivariateSeries& y, int p,
                                 bool center = true, bool standardize = false) {
  return build_design(y, nullptr, p, 0, center, standardize);
}

}  // namespace svarx
