#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "svarx/model.hpp"
#include "svarx/series.hpp"
#include "svarx/solver.hpp"

namespace svarx {

enum class ExogenousSelector { url_only, query_only, all, none };

struct VariantSpec {
  Variant id = Variant::C;
  ExogenousSelector selector = ExogenousSelector::all;

  /// The canonical pairing: A = url_only, B = query_only, C = all, D = none.
  static VariantSpec standard(Variant id);
  void validate() const;  // selector must be consistent with id
};

struct CvOptions {
  bool center = true;
  bool standardize = false;
  /// Refit the model on the expanding window before every validation week
  /// instead of keeping the train-only fit fixed.
  bool refit_each_week = false;
};

struct CvResult {
  std::vector<double> grid;
  std::vector<double> scores;  // mean one-step validation MSE per lambda
  double selected_lambda = 0.0;
  std::size_t selected_index = 0;
};

/// For each lambda on the grid: fit on `train`, then score one-step forecasts
/// over the validation weeks from actual observed history (model fixed,
/// expanding window of real data). Ties select the largest lambda.
CvResult rolling_one_step_cv(const MultivariateSeries& train,
                             const MultivariateSeries& validation,
                             const MultivariateSeries* x, int p, int s,
                             const std::vector<double>& grid,
                             const SolverSettings& settings = {},
                             const CvOptions& options = {});

/// One-step rolling forecast over the test weeks: every prediction uses only
/// actual observations strictly before the predicted week; no refitting and
/// no feedback of predictions. `history` must end right before `test` starts.
MultivariateSeries rolling_test_forecast(const VarxModel& model,
                                         const MultivariateSeries& history,
                                         const MultivariateSeries& test,
                                         const MultivariateSeries* x);

/// Per-series root mean squared error over the common weeks.
Eigen::VectorXd rmse(const MultivariateSeries& predictions,
                     const MultivariateSeries& actuals);

enum class Scale { differenced, level };

std::string_view to_string(Scale scale);

struct EvaluationConfig {
  int p = 2;
  int s = 1;
  int period = 52;
  int grid_size = 20;
  double grid_ratio = 0.01;
  Scale scale = Scale::differenced;
  bool center = true;
  bool standardize = false;
  bool refit_each_week = false;
  SolverSettings solver;
};

struct VariantResult {
  VariantSpec variant;
  CvResult cv;
  VarxModel model;
  MultivariateSeries predictions;      // on the report scale
  MultivariateSeries actuals;          // on the report scale
  Eigen::VectorXd rmse_per_region;
};

struct EvaluationReport {
  std::vector<std::string> regions;
  std::vector<VariantResult> variants;  // ordered A < B < C < D
  EvaluationConfig config;
  std::vector<std::string> warnings;

  double rmse_for(Variant id, const std::string& region) const;
  double mean_rmse(Variant id) const;
};

/// The full comparison pipeline: per variant, select exogenous rows,
/// seasonally difference, split into thirds, cross-validate the penalty on
/// train/validation, refit on train+validation at the selected lambda, and
/// score a rolling one-step forecast on the test third.
EvaluationReport run_variants(const MultivariateSeries& claims,
                              const MultivariateSeries* exogenous,
                              const std::vector<VariantSpec>& variants,
                              const EvaluationConfig& config);

/// regions x variants table, Table-1 layout; `comments` lines prefixed "# ".
void write_report_csv(std::ostream& out, const EvaluationReport& report,
                      const std::vector<std::string>& comments = {});

/// Structured report: config block, per-variant selected lambda, CV curves
/// and per-region RMSE. `run_config_json`, when nonempty, is embedded
/// verbatim under "run_config".
void write_report_json(std::ostream& out, const EvaluationReport& report,
                       std::string_view run_config_json = {});

/// week,region,actual,predicted rows for one variant.
void write_forecast_csv(std::ostream& out, const VariantResult& result,
                        const std::vector<std::string>& comments = {});

}  // namespace svarx
