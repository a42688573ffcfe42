#include "svarx/series.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "svarx/errors.hpp"

namespace svarx {

MultivariateSeries::MultivariateSeries(std::vector<std::string> labels,
                                       TimeIndex index, Eigen::MatrixXd values)
    : labels_(std::move(labels)), index_(index), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.rows()) != labels_.size()) {
    throw ShapeMismatch("series has " + std::to_string(values_.rows()) +
                        " rows but " + std::to_string(labels_.size()) +
                        " labels");
  }
  if (static_cast<std::size_t>(values_.cols()) != index_.length) {
    throw ShapeMismatch("series has " + std::to_string(values_.cols()) +
                        " columns but index length " +
                        std::to_string(index_.length));
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) {
      throw DuplicateError("duplicate series label '" + l + "'");
    }
  }
  if (!values_.allFinite()) {
    throw NonFinite("series contains non-finite values");
  }
}

std::size_t MultivariateSeries::row_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw InvalidArgument("no series labeled '" + label + "'");
  }
  return static_cast<std::size_t>(it - labels_.begin());
}

MultivariateSeries MultivariateSeries::slice(std::size_t offset,
                                             std::size_t count) const {
  return MultivariateSeries(
      labels_, index_.sub(offset, count),
      values_.middleCols(static_cast<Eigen::Index>(offset),
                         static_cast<Eigen::Index>(count)));
}

MultivariateSeries MultivariateSeries::select_rows(
    const std::vector<std::size_t>& rows) const {
  Eigen::MatrixXd out(rows.size(), values_.cols());
  std::vector<std::string> out_labels;
  out_labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= dim()) throw InvalidArgument("row selection out of range");
    out.row(static_cast<Eigen::Index>(i)) =
        values_.row(static_cast<Eigen::Index>(rows[i]));
    out_labels.push_back(labels_[rows[i]]);
  }
  return MultivariateSeries(std::move(out_labels), index_, std::move(out));
}

std::pair<MultivariateSeries, SeasonalTransform> seasonal_difference(
    const MultivariateSeries& series, int period) {
  if (period < 1) throw InvalidArgument("period must be >= 1");
  const auto T = series.size();
  const auto D = static_cast<std::size_t>(period);
  if (T <= D) {
    throw SeriesTooShort("need more than " + std::to_string(period) +
                         " weeks to seasonally difference, have " +
                         std::to_string(T));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(T - D);
  const auto& v = series.values();
  Eigen::MatrixXd diff =
      v.rightCols(n) - v.leftCols(n);
  MultivariateSeries out(series.labels(), series.index().sub(D, T - D),
                         std::move(diff));
  SeasonalTransform transform{period, series.slice(0, D)};
  return {std::move(out), std::move(transform)};
}

Eigen::VectorXd invert_seasonal_difference(
    const Eigen::VectorXd& diff_value, std::size_t target_week_offset,
    const SeasonalTransform& transform, const MultivariateSeries& observed_raw) {
  if (diff_value.size() != static_cast<Eigen::Index>(observed_raw.dim())) {
    throw ShapeMismatch("differenced value has wrong dimension");
  }
  // The lagged raw value is resolved by absolute week so a truncated raw
  // series can still be served from the retained head.
  const std::int64_t lag =
      static_cast<std::int64_t>(target_week_offset) - transform.period;
  if (lag >= 0 && lag < static_cast<std::int64_t>(observed_raw.size())) {
    return diff_value +
           observed_raw.values().col(static_cast<Eigen::Index>(lag));
  }
  const IsoWeek lag_week = observed_raw.index().start.plus(lag);
  if (const auto pos = transform.head.index().position(lag_week)) {
    return diff_value +
           transform.head.values().col(static_cast<Eigen::Index>(*pos));
  }
  throw MissingHistory("raw value " + std::to_string(transform.period) +
                       " weeks before offset " +
                       std::to_string(target_week_offset) +
                       " is not observed");
}

MultivariateSeries log_ratio_normalize(const MultivariateSeries& counts,
                                       const MultivariateSeries& totals,
                                       double epsilon) {
  if (epsilon <= 0) throw InvalidArgument("epsilon must be > 0");
  if (totals.dim() != 1) {
    throw ShapeMismatch("totals must be a single series");
  }
  if (totals.index() != counts.index()) {
    throw IndexMismatch("counts and totals cover different weeks");
  }
  if ((totals.values().array() <= 0.0).any()) {
    throw NonPositiveTotal("totals must be strictly positive");
  }
  if ((counts.values().array() < 0.0).any()) {
    throw InvalidArgument("counts must be nonnegative");
  }
  const auto& c = counts.values();
  Eigen::MatrixXd out(c.rows(), c.cols());
  for (Eigen::Index t = 0; t < c.cols(); ++t) {
    out.col(t) = ((c.col(t).array() + epsilon) / totals.values()(0, t)).log();
  }
  return MultivariateSeries(counts.labels(), counts.index(), std::move(out));
}

ThreeWaySplit split_thirds(const MultivariateSeries& series) {
  const std::size_t T = series.size();
  if (T < 3) {
    throw SeriesTooShort("need at least 3 weeks to split, have " +
                         std::to_string(T));
  }
  const std::size_t n = T / 3;
  return ThreeWaySplit{series.slice(0, n), series.slice(n, n),
                       series.slice(2 * n, T - 2 * n)};
}

std::pair<MultivariateSeries, MultivariateSeries> align(
    const MultivariateSeries& a, const MultivariateSeries& b) {
  // Offset of b's first week within a's index (may be negative).
  const std::int64_t shift = b.index().start.minus(a.index().start);
  const std::int64_t lo = std::max<std::int64_t>(0, shift);
  const std::int64_t hi =
      std::min(static_cast<std::int64_t>(a.size()),
               shift + static_cast<std::int64_t>(b.size()));
  if (hi <= lo) {
    throw NoOverlap("series cover disjoint week ranges");
  }
  const auto count = static_cast<std::size_t>(hi - lo);
  return {a.slice(static_cast<std::size_t>(lo), count),
          b.slice(static_cast<std::size_t>(lo - shift), count)};
}

MultivariateSeries concat_time(const MultivariateSeries& a,
                               const MultivariateSeries& b) {
  if (a.labels() != b.labels()) {
    throw NotAligned("cannot concatenate series with different labels");
  }
  if (b.index().start != a.index().last().plus(1)) {
    throw NotAligned("series are not consecutive in time");
  }
  Eigen::MatrixXd v(a.values().rows(), a.values().cols() + b.values().cols());
  v << a.values(), b.values();
  return MultivariateSeries(a.labels(),
                            TimeIndex{a.index().start, a.size() + b.size()},
                            std::move(v));
}

}  // namespace svarx
