#include "svarx/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <ostream>

#include "svarx/design.hpp"
#include "svarx/errors.hpp"

namespace svarx {

using nlohmann::json;

VariantSpec VariantSpec::standard(Variant id) {
  switch (id) {
    case Variant::A: return {Variant::A, ExogenousSelector::url_only};
    case Variant::B: return {Variant::B, ExogenousSelector::query_only};
    case Variant::C: return {Variant::C, ExogenousSelector::all};
    case Variant::D: return {Variant::D, ExogenousSelector::none};
  }
  throw InvalidArgument("unknown variant");
}

void VariantSpec::validate() const {
  if (standard(id).selector != selector) {
    throw InvalidArgument(std::string("variant ") + to_char(id) +
                          " is inconsistent with its exogenous selector");
  }
}

namespace {

// Offset of `start` within x, requiring x to cover weeks
// [start, start + length - 1].
std::size_t coverage_offset(const MultivariateSeries& x, const IsoWeek& start,
                            std::size_t length) {
  const std::int64_t shift = start.minus(x.index().start);
  if (shift < 0 ||
      static_cast<std::size_t>(shift) + length > x.size()) {
    throw NotAligned("exogenous series does not cover the required weeks");
  }
  return static_cast<std::size_t>(shift);
}

double validation_score(const VarxModel& model, const MultivariateSeries& full,
                        std::size_t first_week, const MultivariateSeries* x,
                        std::size_t x_shift, int p, int s) {
  double sum = 0.0;
  const auto k = static_cast<double>(full.dim());
  Eigen::MatrixXd x_hist;
  for (std::size_t w = first_week; w < full.size(); ++w) {
    const Eigen::MatrixXd y_hist = lag_history(full, w, p);
    if (s > 0) x_hist = lag_history(*x, x_shift + w, s);
    const Eigen::VectorXd pred = forecast_one_step(model, y_hist, x_hist);
    sum += (pred - full.values().col(static_cast<Eigen::Index>(w)))
               .squaredNorm();
  }
  const auto weeks = static_cast<double>(full.size() - first_week);
  return sum / (weeks * k);
}

}  // namespace

CvResult rolling_one_step_cv(const MultivariateSeries& train,
                             const MultivariateSeries& validation,
                             const MultivariateSeries* x, int p, int s,
                             const std::vector<double>& grid,
                             const SolverSettings& settings,
                             const CvOptions& options) {
  if (validation.size() == 0) throw TooFewRows("empty validation part");
  const MultivariateSeries full = concat_time(train, validation);

  std::size_t x_shift = 0;
  MultivariateSeries x_train = train;  // placeholder; only used when s > 0
  if (s > 0) {
    if (x == nullptr) throw BadLag("s > 0 requires exogenous series");
    x_shift = coverage_offset(*x, full.index().start, full.size() - 1);
    x_train = x->slice(x_shift, train.size());
  }
  const MultivariateSeries* x_train_ptr = s > 0 ? &x_train : nullptr;

  const LassoProblem train_problem =
      build_design(train, x_train_ptr, p, s, options.center,
                   options.standardize);
  const std::vector<SolverResult> path =
      fit_path(train_problem, grid, settings);

  CvResult cv;
  cv.grid = grid;
  cv.scores.resize(grid.size());

  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    if (!options.refit_each_week) {
      const VarxModel model = from_solution(path[gi], train_problem);
      cv.scores[gi] =
          validation_score(model, full, train.size(), x, x_shift, p, s);
      continue;
    }
    // Expanding-window variant: refit on all data before each week.
    double sum = 0.0;
    Eigen::MatrixXd warm = path[gi].coefficients;
    Eigen::MatrixXd x_hist;
    for (std::size_t w = train.size(); w < full.size(); ++w) {
      const MultivariateSeries y_window = full.slice(0, w);
      MultivariateSeries x_window = y_window;
      if (s > 0) x_window = x->slice(x_shift, w);
      const LassoProblem problem = build_design(
          y_window, s > 0 ? &x_window : nullptr, p, s, options.center,
          options.standardize);
      const SolverResult refit =
          fit(problem, grid[gi], settings, &warm);
      warm = refit.coefficients;
      const VarxModel model = from_solution(refit, problem);
      const Eigen::MatrixXd y_hist = lag_history(full, w, p);
      if (s > 0) x_hist = lag_history(*x, x_shift + w, s);
      const Eigen::VectorXd pred = forecast_one_step(model, y_hist, x_hist);
      sum += (pred - full.values().col(static_cast<Eigen::Index>(w)))
                 .squaredNorm();
    }
    cv.scores[gi] = sum / (static_cast<double>(validation.size()) *
                           static_cast<double>(full.dim()));
  }

  // Grid is descending, so keeping the first strict minimum breaks ties
  // toward the larger (sparser) lambda.
  std::size_t best = 0;
  for (std::size_t gi = 1; gi < grid.size(); ++gi) {
    if (cv.scores[gi] < cv.scores[best]) best = gi;
  }
  cv.selected_index = best;
  cv.selected_lambda = grid[best];
  return cv;
}

MultivariateSeries rolling_test_forecast(const VarxModel& model,
                                         const MultivariateSeries& history,
                                         const MultivariateSeries& test,
                                         const MultivariateSeries* x) {
  if (test.size() == 0) throw InsufficientHistory("empty test part");
  if (test.labels() != model.response_labels) {
    throw IndexMismatch("test labels do not match the model");
  }
  const MultivariateSeries full = concat_time(history, test);
  const int p = model.p();
  const int s = model.s();

  std::size_t x_shift = 0;
  if (s > 0) {
    if (x == nullptr) throw InsufficientHistory("model needs exogenous history");
    x_shift = coverage_offset(*x, full.index().start, full.size() - 1);
  }

  Eigen::MatrixXd predictions(test.dim(), test.size());
  Eigen::MatrixXd x_hist;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const std::size_t w = history.size() + i;
    const Eigen::MatrixXd y_hist = lag_history(full, w, p);
    if (s > 0) x_hist = lag_history(*x, x_shift + w, s);
    predictions.col(static_cast<Eigen::Index>(i)) =
        forecast_one_step(model, y_hist, x_hist);
  }
  return MultivariateSeries(test.labels(), test.index(),
                            std::move(predictions));
}

Eigen::VectorXd rmse(const MultivariateSeries& predictions,
                     const MultivariateSeries& actuals) {
  if (predictions.labels() != actuals.labels() ||
      predictions.index() != actuals.index()) {
    throw IndexMismatch("predictions and actuals are not aligned");
  }
  if (predictions.size() == 0) {
    throw InvalidArgument("no weeks to score");
  }
  const Eigen::MatrixXd err = predictions.values() - actuals.values();
  return (err.array().square().rowwise().mean()).sqrt();
}

std::string_view to_string(Scale scale) {
  return scale == Scale::differenced ? "diff" : "level";
}

double EvaluationReport::rmse_for(Variant id, const std::string& region) const {
  for (const auto& v : variants) {
    if (v.variant.id != id) continue;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (regions[r] == region) {
        return v.rmse_per_region(static_cast<Eigen::Index>(r));
      }
    }
    throw InvalidArgument("unknown region '" + region + "'");
  }
  throw InvalidArgument(std::string("variant ") + to_char(id) +
                        " was not evaluated");
}

double EvaluationReport::mean_rmse(Variant id) const {
  for (const auto& v : variants) {
    if (v.variant.id == id) return v.rmse_per_region.mean();
  }
  throw InvalidArgument("variant not evaluated");
}

namespace {

std::vector<std::size_t> rows_with_suffix(const std::vector<std::string>& labels,
                                          std::string_view suffix) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].size() >= suffix.size() &&
        labels[i].compare(labels[i].size() - suffix.size(), suffix.size(),
                          suffix) == 0) {
      rows.push_back(i);
    }
  }
  return rows;
}

}  // namespace

EvaluationReport run_variants(const MultivariateSeries& claims,
                              const MultivariateSeries* exogenous,
                              const std::vector<VariantSpec>& variants,
                              const EvaluationConfig& config) {
  if (claims.dim() != 9) {
    throw ShapeMismatch("the comparison harness expects 9 regional series");
  }
  EvaluationReport report;
  report.config = config;

  // Dedupe by id, last specification wins, evaluation order A < B < C < D.
  std::map<Variant, VariantSpec> selected;
  for (const auto& v : variants) {
    v.validate();
    if (selected.count(v.id)) {
      report.warnings.push_back(std::string("duplicate variant ") +
                                to_char(v.id) + ": last specification wins");
    }
    selected[v.id] = v;
  }
  if (selected.empty()) throw InvalidArgument("no variants requested");

  const bool needs_exogenous = std::any_of(
      selected.begin(), selected.end(), [](const auto& kv) {
        return kv.second.selector != ExogenousSelector::none;
      });
  if (needs_exogenous) {
    if (exogenous == nullptr) {
      throw InvalidArgument("exogenous variants requested without X");
    }
    if (exogenous->dim() != 18) {
      throw ShapeMismatch("expected 18 exogenous series (9 query + 9 url)");
    }
  }

  // One shared week range so every variant is scored on the same test weeks.
  MultivariateSeries y_raw = claims;
  std::unique_ptr<MultivariateSeries> x_raw;
  if (needs_exogenous) {
    auto [ya, xa] = align(claims, *exogenous);
    y_raw = std::move(ya);
    x_raw = std::make_unique<MultivariateSeries>(std::move(xa));
  }

  auto [y_diff, y_transform] = seasonal_difference(y_raw, config.period);
  const ThreeWaySplit split = split_thirds(y_diff);
  report.regions = y_raw.labels();

  for (const auto& [id, spec] : selected) {
    // Select this variant's exogenous rows and difference them.
    std::unique_ptr<MultivariateSeries> x_diff;
    int s = 0;
    if (spec.selector != ExogenousSelector::none) {
      std::vector<std::size_t> rows;
      switch (spec.selector) {
        case ExogenousSelector::url_only:
          rows = rows_with_suffix(x_raw->labels(), "-url");
          break;
        case ExogenousSelector::query_only:
          rows = rows_with_suffix(x_raw->labels(), "-query");
          break;
        default:
          rows.resize(x_raw->dim());
          for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      }
      if (spec.selector != ExogenousSelector::all && rows.size() != 9) {
        throw ShapeMismatch(std::string("variant ") + to_char(id) +
                            " needs 9 suffix-labeled exogenous series, found " +
                            std::to_string(rows.size()));
      }
      const MultivariateSeries x_sel = x_raw->select_rows(rows);
      x_diff = std::make_unique<MultivariateSeries>(
          seasonal_difference(x_sel, config.period).first);
      s = config.s;
    }

    // Penalty grid from the train design.
    MultivariateSeries x_train = split.train;
    if (x_diff) {
      const std::size_t off =
          x_diff->index().position(split.train.index().start).value();
      x_train = x_diff->slice(off, split.train.size());
    }
    const LassoProblem train_problem = build_design(
        split.train, x_diff ? &x_train : nullptr, config.p, s,
        config.center, config.standardize);
    const std::vector<double> grid =
        lambda_grid(train_problem, config.grid_size, config.grid_ratio);

    const CvOptions cv_options{config.center, config.standardize,
                               config.refit_each_week};
    const CvResult cv =
        rolling_one_step_cv(split.train, split.validation, x_diff.get(),
                            config.p, s, grid, config.solver, cv_options);

    // Refit on train + validation at the selected penalty.
    const MultivariateSeries fit_window =
        concat_time(split.train, split.validation);
    MultivariateSeries x_fit = fit_window;
    if (x_diff) {
      const std::size_t off =
          x_diff->index().position(fit_window.index().start).value();
      x_fit = x_diff->slice(off, fit_window.size());
    }
    const LassoProblem final_problem = build_design(
        fit_window, x_diff ? &x_fit : nullptr, config.p, s, config.center,
        config.standardize);
    const SolverResult solution =
        fit(final_problem, cv.selected_lambda, config.solver);
    VarxModel model =
        from_solution(solution, final_problem, ModelContext{y_transform, id});

    MultivariateSeries predictions =
        rolling_test_forecast(model, fit_window, split.test, x_diff.get());
    MultivariateSeries actuals = split.test;

    if (config.scale == Scale::level) {
      // diff offset w corresponds to raw offset w + period; the seasonal lag
      // of every test week is observed, so inversion is exact.
      const std::size_t test_start =
          split.train.size() + split.validation.size();
      Eigen::MatrixXd pred_level(predictions.dim(), predictions.size());
      Eigen::MatrixXd actual_level(predictions.dim(), predictions.size());
      for (std::size_t i = 0; i < predictions.size(); ++i) {
        const std::size_t raw_offset =
            test_start + i + static_cast<std::size_t>(config.period);
        pred_level.col(static_cast<Eigen::Index>(i)) = invert_seasonal_difference(
            predictions.values().col(static_cast<Eigen::Index>(i)), raw_offset,
            y_transform, y_raw);
        actual_level.col(static_cast<Eigen::Index>(i)) =
            y_raw.values().col(static_cast<Eigen::Index>(raw_offset));
      }
      predictions = MultivariateSeries(predictions.labels(),
                                       predictions.index(), std::move(pred_level));
      actuals = MultivariateSeries(actuals.labels(), actuals.index(),
                                   std::move(actual_level));
    }

    VariantResult out{spec, cv, std::move(model), std::move(predictions),
                      std::move(actuals), Eigen::VectorXd()};
    out.rmse_per_region = rmse(out.predictions, out.actuals);
    report.variants.push_back(std::move(out));
  }
  return report;
}

void write_report_csv(std::ostream& out, const EvaluationReport& report,
                      const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "region";
  for (const auto& v : report.variants) out << ',' << to_char(v.variant.id);
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < report.regions.size(); ++r) {
    out << report.regions[r];
    for (const auto& v : report.variants) {
      std::snprintf(buf, sizeof(buf), "%.6g",
                    v.rmse_per_region(static_cast<Eigen::Index>(r)));
      out << ',' << buf;
    }
    out << '\n';
  }
}

void write_report_json(std::ostream& out, const EvaluationReport& report,
                       std::string_view run_config_json) {
  json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "svarx-report";
  doc["config"] = {
      {"p", report.config.p},
      {"s", report.config.s},
      {"period", report.config.period},
      {"grid_size", report.config.grid_size},
      {"grid_ratio", report.config.grid_ratio},
      {"scale", std::string(to_string(report.config.scale))},
      {"center", report.config.center},
      {"standardize", report.config.standardize},
      {"refit_each_week", report.config.refit_each_week},
      {"solver",
       {{"tol", report.config.solver.tol},
        {"max_iter", report.config.solver.max_iter},
        {"monotone", report.config.solver.monotone},
        {"step_rule",
         report.config.solver.step_rule ==
                 SolverSettings::StepRule::fixed_lipschitz
             ? "fixed_lipschitz"
             : "backtracking"}}},
  };
  if (!run_config_json.empty()) {
    doc["run_config"] = json::parse(run_config_json);
  }
  doc["regions"] = report.regions;
  doc["warnings"] = report.warnings;
  json variants = json::object();
  for (const auto& v : report.variants) {
    json entry;
    entry["selected_lambda"] = v.cv.selected_lambda;
    entry["cv"] = {{"grid", v.cv.grid}, {"scores", v.cv.scores}};
    json rmse_map = json::object();
    for (std::size_t r = 0; r < report.regions.size(); ++r) {
      rmse_map[report.regions[r]] =
          v.rmse_per_region(static_cast<Eigen::Index>(r));
    }
    entry["rmse"] = std::move(rmse_map);
    entry["model_lambda"] = v.model.lambda;
    variants[std::string(1, to_char(v.variant.id))] = std::move(entry);
  }
  doc["variants"] = std::move(variants);
  out << doc.dump(2) << "\n";
}

void write_forecast_csv(std::ostream& out, const VariantResult& result,
                        const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "week,region,actual,predicted\n";
  char a[64], p[64];
  const auto& labels = result.predictions.labels();
  for (std::size_t t = 0; t < result.predictions.size(); ++t) {
    const std::string week = result.predictions.index().week_at(t).str();
    for (std::size_t r = 0; r < labels.size(); ++r) {
      std::snprintf(a, sizeof(a), "%.17g",
                    result.actuals.values()(static_cast<Eigen::Index>(r),
                                            static_cast<Eigen::Index>(t)));
      std::snprintf(p, sizeof(p), "%.17g",
                    result.predictions.values()(static_cast<Eigen::Index>(r),
                                                static_cast<Eigen::Index>(t)));
      out << week << ',' << labels[r] << ',' << a << ',' << p << '\n';
    }
  }
}

}  // namespace svarx
