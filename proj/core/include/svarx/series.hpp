#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "svarx/week.hpp"

namespace svarx {

/// A labeled k-variate weekly series. Rows are series, columns are weeks.
/// Immutable after construction; values are validated finite.
class MultivariateSeries {
 public:
  MultivariateSeries(std::vector<std::string> labels, TimeIndex index,
                     Eigen::MatrixXd values);

  const std::vector<std::string>& labels() const { return labels_; }
  const TimeIndex& index() const { return index_; }
  const Eigen::MatrixXd& values() const { return values_; }

  std::size_t dim() const { return labels_.size(); }     // series count
  std::size_t size() const { return index_.length; }     // week count

  /// Row position of a label, or throws InvalidArgument.
  std::size_t row_of(const std::string& label) const;

  /// Time slice: weeks [offset, offset+count).
  MultivariateSeries slice(std::size_t offset, std::size_t count) const;

  /// New series restricted to the given rows, in the given order.
  MultivariateSeries select_rows(const std::vector<std::size_t>& rows) const;

 private:
  std::vector<std::string> labels_;
  TimeIndex index_;
  Eigen::MatrixXd values_;
};

/// Metadata needed to undo a seasonal difference: the period and the first
/// `period` raw columns.
struct SeasonalTransform {
  int period = 52;
  MultivariateSeries head;
};

struct ThreeWaySplit {
  MultivariateSeries train;
  MultivariateSeries validation;
  MultivariateSeries test;
};

/// output[.,t] = input[.,t+period] - input[.,t]; the result starts `period`
/// weeks later and is `period` weeks shorter.
std::pair<MultivariateSeries, SeasonalTransform> seasonal_difference(
    const MultivariateSeries& series, int period);

/// Inverse of seasonal_difference for one week. `target_week_offset` is the
/// column offset on the raw scale (offsets past the end of `observed_raw`
/// are allowed as long as the lagged value is observed, which is what
/// forecasting needs). Falls back to the transform head for early weeks.
Eigen::VectorXd invert_seasonal_difference(const Eigen::VectorXd& diff_value,
                                           std::size_t target_week_offset,
                                           const SeasonalTransform& transform,
                                           const MultivariateSeries& observed_raw);

/// output[i,t] = ln((counts[i,t] + epsilon) / totals[t]). `totals` must be a
/// single strictly positive series on the same index.
MultivariateSeries log_ratio_normalize(const MultivariateSeries& counts,
                                       const MultivariateSeries& totals,
                                       double epsilon);

/// Chronological thirds: floor(T/3), floor(T/3), remainder to test.
ThreeWaySplit split_thirds(const MultivariateSeries& series);

/// Restrict both series to their maximal common week range.
std::pair<MultivariateSeries, MultivariateSeries> align(
    const MultivariateSeries& a, const MultivariateSeries& b);

/// Concatenate along time; b must start exactly one week after a ends and
/// carry the same labels.
MultivariateSeries concat_time(const MultivariateSeries& a,
                               const MultivariateSeries& b);

}  // namespace svarx
