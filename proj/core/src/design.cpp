#include "svarx/design.hpp"

#include <algorithm>
#include <cmath>

#include "svarx/errors.hpp"

namespace svarx {

LassoProblem build_design(const MultivariateSeries& y,
                          const MultivariateSeries* x, int p, int s,
                          bool center, bool standardize) {
  if (p < 1) throw BadLag("p must be >= 1");
  if (x != nullptr && s < 1) throw BadLag("s must be >= 1 when X is present");
  if (x == nullptr && s != 0) throw BadLag("s must be 0 without X");
  if (x != nullptr && x->index() != y.index()) {
    throw NotAligned("Y and X must share a time index");
  }

  const auto T = y.size();
  const int max_lag = std::max(p, s);
  if (T <= static_cast<std::size_t>(max_lag)) {
    throw TooFewRows("need more than " + std::to_string(max_lag) +
                     " weeks, have " + std::to_string(T));
  }
  const auto N = static_cast<Eigen::Index>(T - static_cast<std::size_t>(max_lag));
  const auto k = static_cast<Eigen::Index>(y.dim());
  const auto m = x ? static_cast<Eigen::Index>(x->dim()) : 0;
  const Eigen::Index cols = k * p + m * s;

  LassoProblem problem;
  problem.design.resize(N, cols);
  problem.response.resize(N, k);
  problem.response_labels = y.labels();
  problem.p = p;
  problem.s = x ? s : 0;

  for (Eigen::Index t = 0; t < N; ++t) {
    const Eigen::Index w = max_lag + t;
    problem.response.row(t) = y.values().col(w).transpose();
    Eigen::Index col = 0;
    for (int lag = 1; lag <= p; ++lag) {
      problem.design.row(t).segment(col, k) =
          y.values().col(w - lag).transpose();
      col += k;
    }
    for (int lag = 1; lag <= s && x != nullptr; ++lag) {
      problem.design.row(t).segment(col, m) =
          x->values().col(w - lag).transpose();
      col += m;
    }
  }

  std::size_t offset = 0;
  for (int lag = 1; lag <= p; ++lag) {
    problem.blocks.push_back(ColumnBlock{ColumnBlock::Source::response, lag,
                                         offset, static_cast<std::size_t>(k),
                                         y.labels()});
    offset += static_cast<std::size_t>(k);
  }
  if (x != nullptr) {
    for (int lag = 1; lag <= s; ++lag) {
      problem.blocks.push_back(ColumnBlock{ColumnBlock::Source::exogenous, lag,
                                           offset, static_cast<std::size_t>(m),
                                           x->labels()});
      offset += static_cast<std::size_t>(m);
    }
  }

  problem.centered = center;
  if (center) {
    problem.design_means = problem.design.colwise().mean();
    problem.response_means = problem.response.colwise().mean();
    problem.design.rowwise() -= problem.design_means.transpose();
    problem.response.rowwise() -= problem.response_means.transpose();
  } else {
    problem.design_means = Eigen::VectorXd::Zero(cols);
    problem.response_means = Eigen::VectorXd::Zero(k);
  }

  problem.standardized = standardize;
  problem.design_scales = Eigen::VectorXd::Ones(cols);
  if (standardize) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const Eigen::VectorXd centered_col =
          problem.design.col(j).array() - problem.design.col(j).mean();
      const double scale = std::sqrt(centered_col.squaredNorm() /
                                     static_cast<double>(N));
      if (scale > 1e-12) {
        problem.design_scales(j) = scale;
        problem.design.col(j) /= scale;
      }
    }
  }
  return problem;
}

}  // namespace svarx
