#include "svarx/model.hpp"

#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>

#include "svarx/errors.hpp"

namespace svarx {

using nlohmann::json;

char to_char(Variant v) { return static_cast<char>(v); }

Variant variant_from_char(char c) {
  switch (c) {
    case 'A': return Variant::A;
    case 'B': return Variant::B;
    case 'C': return Variant::C;
    case 'D': return Variant::D;
    default: throw InvalidArgument(std::string("unknown variant '") + c + "'");
  }
}

VarxModel from_solution(const SolverResult& result, const LassoProblem& problem,
                        ModelContext context) {
  const auto& B = result.coefficients;
  if (B.rows() != problem.design.cols() ||
      B.cols() != problem.response.cols()) {
    throw ShapeMismatch("solution does not match the problem's shape");
  }
  std::size_t covered = 0;
  for (const auto& block : problem.blocks) covered += block.count;
  if (covered != static_cast<std::size_t>(B.rows())) {
    throw ShapeMismatch("column blocks do not tile the design");
  }

  VarxModel model;
  model.lambda = result.lambda;
  model.response_labels = problem.response_labels;
  model.response_means = problem.response_means;
  model.seasonal = std::move(context.seasonal);
  model.variant = context.variant;

  for (const auto& block : problem.blocks) {
    const auto offset = static_cast<Eigen::Index>(block.offset);
    const auto count = static_cast<Eigen::Index>(block.count);
    // Block rows of B are the transposed lag matrix. Penalties act on the
    // standardized scale; reported coefficients are unstandardized.
    Eigen::MatrixXd scaled = B.middleRows(offset, count);
    if (problem.standardized) {
      scaled.array().colwise() /=
          problem.design_scales.segment(offset, count).array();
    }
    Eigen::MatrixXd lag_matrix = scaled.transpose();
    Eigen::VectorXd means = problem.design_means.segment(offset, count);
    if (block.source == ColumnBlock::Source::response) {
      model.theta.push_back(std::move(lag_matrix));
      model.y_lag_means.push_back(std::move(means));
    } else {
      model.beta.push_back(std::move(lag_matrix));
      model.x_lag_means.push_back(std::move(means));
      if (model.exogenous_labels.empty()) {
        model.exogenous_labels = block.labels;
      }
    }
  }
  return model;
}

Eigen::MatrixXd stacked(const VarxModel& model) {
  const Eigen::Index k = model.k();
  const Eigen::Index m = model.m();
  const Eigen::Index rows =
      k * model.p() + m * model.s();
  Eigen::MatrixXd B(rows, k);
  Eigen::Index offset = 0;
  for (const auto& block : model.theta) {
    B.middleRows(offset, k) = block.transpose();
    offset += k;
  }
  for (const auto& block : model.beta) {
    B.middleRows(offset, m) = block.transpose();
    offset += m;
  }
  return B;
}

Eigen::MatrixXd lag_history(const MultivariateSeries& series,
                            std::size_t end_offset, int n_lags) {
  if (n_lags < 0) throw InvalidArgument("n_lags must be >= 0");
  if (end_offset > series.size() ||
      end_offset < static_cast<std::size_t>(n_lags)) {
    throw InsufficientHistory("need " + std::to_string(n_lags) +
                              " observed weeks before offset " +
                              std::to_string(end_offset));
  }
  Eigen::MatrixXd out(series.dim(), n_lags);
  for (int j = 0; j < n_lags; ++j) {
    out.col(j) = series.values().col(
        static_cast<Eigen::Index>(end_offset) - 1 - j);
  }
  return out;
}

Eigen::VectorXd forecast_one_step(const VarxModel& model,
                                  const Eigen::MatrixXd& y_history,
                                  const Eigen::MatrixXd& x_history) {
  const int p = model.p();
  const int s = model.s();
  if (y_history.rows() != model.k() || y_history.cols() < p) {
    throw InsufficientHistory("y history must supply the last " +
                              std::to_string(p) + " weeks");
  }
  if (s > 0 && (x_history.rows() != model.m() || x_history.cols() < s)) {
    throw InsufficientHistory("x history must supply the last " +
                              std::to_string(s) + " weeks");
  }
  Eigen::VectorXd forecast = model.response_means;
  for (int i = 0; i < p; ++i) {
    forecast += model.theta[static_cast<std::size_t>(i)] *
                (y_history.col(i) - model.y_lag_means[static_cast<std::size_t>(i)]);
  }
  for (int j = 0; j < s; ++j) {
    forecast += model.beta[static_cast<std::size_t>(j)] *
                (x_history.col(j) - model.x_lag_means[static_cast<std::size_t>(j)]);
  }
  return forecast;
}

Eigen::MatrixXd forecast_h_step(const VarxModel& model,
                                const Eigen::MatrixXd& y_history,
                                const Eigen::MatrixXd& x_history, int horizon,
                                XFuturePolicy policy,
                                const Eigen::MatrixXd* x_futures) {
  if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
  const int p = model.p();
  const int s = model.s();
  if (s > 0 && policy == XFuturePolicy::provided) {
    if (x_futures == nullptr || x_futures->rows() != model.m() ||
        x_futures->cols() < horizon - 1) {
      throw MissingFutures("policy 'provided' needs " +
                           std::to_string(horizon - 1) +
                           " future exogenous weeks");
    }
  }

  Eigen::MatrixXd forecasts(model.k(), horizon);
  // Rolling windows, most recent first.
  Eigen::MatrixXd y_window = y_history.leftCols(p);
  Eigen::MatrixXd x_window =
      s > 0 ? Eigen::MatrixXd(x_history.leftCols(s)) : Eigen::MatrixXd();

  for (int h = 0; h < horizon; ++h) {
    forecasts.col(h) = forecast_one_step(model, y_window, x_window);
    if (h + 1 == horizon) break;
    // Shift predicted response into the window.
    if (p > 1) {
      Eigen::MatrixXd shifted = y_window.leftCols(p - 1);
      y_window.rightCols(p - 1) = shifted;
    }
    y_window.col(0) = forecasts.col(h);
    if (s > 0) {
      Eigen::VectorXd x_next;
      switch (policy) {
        case XFuturePolicy::hold_last: x_next = x_history.col(0); break;
        case XFuturePolicy::zeros: x_next = Eigen::VectorXd::Zero(model.m()); break;
        case XFuturePolicy::provided: x_next = x_futures->col(h); break;
      }
      if (s > 1) {
        Eigen::MatrixXd shifted = x_window.leftCols(s - 1);
        x_window.rightCols(s - 1) = shifted;
      }
      x_window.col(0) = x_next;
    }
  }
  return forecasts;
}

Eigen::VectorXd forecast_level(const VarxModel& model,
                               const Eigen::VectorXd& diff_forecast,
                               std::size_t target_week_offset,
                               const MultivariateSeries& raw_history) {
  if (!model.seasonal.has_value()) {
    throw MissingHistory("model carries no seasonal transform");
  }
  return invert_seasonal_difference(diff_forecast, target_week_offset,
                                    *model.seasonal, raw_history);
}

SparsityPattern sparsity_pattern(const VarxModel& model, double threshold) {
  if (threshold < 0) throw InvalidArgument("threshold must be >= 0");
  SparsityPattern pattern;
  const auto clip = [threshold](const Eigen::MatrixXd& block) {
    return Eigen::MatrixXd(block.cwiseAbs().unaryExpr(
        [threshold](double v) { return v < threshold ? 0.0 : v; }));
  };
  for (const auto& block : model.theta) {
    pattern.theta.push_back(clip(block));
    const auto nz = static_cast<std::size_t>(
        (pattern.theta.back().array() != 0.0).count());
    pattern.theta_nonzeros.push_back(nz);
    pattern.total_nonzeros += nz;
  }
  for (const auto& block : model.beta) {
    pattern.beta.push_back(clip(block));
    const auto nz = static_cast<std::size_t>(
        (pattern.beta.back().array() != 0.0).count());
    pattern.beta_nonzeros.push_back(nz);
    pattern.total_nonzeros += nz;
  }
  return pattern;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, Eigen::Index expect_rows,
                                 Eigen::Index expect_cols) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != expect_rows) {
    throw MissingModel("bad matrix shape in model file");
  }
  Eigen::MatrixXd m(expect_rows, expect_cols);
  for (Eigen::Index i = 0; i < expect_rows; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != expect_cols) {
      throw MissingModel("bad matrix shape in model file");
    }
    for (Eigen::Index j = 0; j < expect_cols; ++j) {
      m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& arr, Eigen::Index expect) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != expect) {
    throw MissingModel("bad vector shape in model file");
  }
  Eigen::VectorXd v(expect);
  for (Eigen::Index i = 0; i < expect; ++i) {
    v(i) = arr[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

}  // namespace

void save_model(std::ostream& out, const VarxModel& model) {
  json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "svarx-model";
  doc["variant"] = std::string(1, to_char(model.variant));
  doc["lambda"] = model.lambda;
  // the loss scaling lambda was calibrated against, for reproducibility
  doc["objective"] = "0.5/N * ||R - Z*B||_F^2 + lambda * ||B||_1";
  doc["k"] = model.k();
  doc["m"] = model.m();
  doc["p"] = model.p();
  doc["s"] = model.s();
  doc["response_labels"] = model.response_labels;
  doc["exogenous_labels"] = model.exogenous_labels;
  doc["response_means"] = vector_to_json(model.response_means);
  doc["theta"] = json::array();
  doc["y_lag_means"] = json::array();
  for (int i = 0; i < model.p(); ++i) {
    doc["theta"].push_back(matrix_to_json(model.theta[static_cast<std::size_t>(i)]));
    doc["y_lag_means"].push_back(
        vector_to_json(model.y_lag_means[static_cast<std::size_t>(i)]));
  }
  doc["beta"] = json::array();
  doc["x_lag_means"] = json::array();
  for (int j = 0; j < model.s(); ++j) {
    doc["beta"].push_back(matrix_to_json(model.beta[static_cast<std::size_t>(j)]));
    doc["x_lag_means"].push_back(
        vector_to_json(model.x_lag_means[static_cast<std::size_t>(j)]));
  }
  if (model.seasonal.has_value()) {
    json seasonal;
    seasonal["period"] = model.seasonal->period;
    seasonal["head"] = {
        {"labels", model.seasonal->head.labels()},
        {"start_week", model.seasonal->head.index().start.str()},
        {"values", matrix_to_json(model.seasonal->head.values())},
    };
    doc["seasonal"] = std::move(seasonal);
  } else {
    doc["seasonal"] = nullptr;
  }
  out << doc.dump(2) << "\n";
}

VarxModel load_model(std::istream& in) {
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw MissingModel(std::string("unreadable model file: ") + e.what());
  }
  try {
    if (doc.value("kind", "") != "svarx-model") {
      throw MissingModel("not a model file (missing kind marker)");
    }
    if (doc.value("schema_version", 0) != 1) {
      throw MissingModel("unsupported model schema version");
    }
    VarxModel model;
    model.variant = variant_from_char(doc["variant"].get<std::string>().at(0));
    model.lambda = doc["lambda"].get<double>();
    const auto k = doc["k"].get<Eigen::Index>();
    const auto m = doc["m"].get<Eigen::Index>();
    const auto p = doc["p"].get<int>();
    const auto s = doc["s"].get<int>();
    if (k < 1 || p < 1 || s < 0 || (s > 0 && m < 1)) {
      throw MissingModel("inconsistent dimensions in model file");
    }
    model.response_labels = doc["response_labels"].get<std::vector<std::string>>();
    model.exogenous_labels =
        doc["exogenous_labels"].get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(model.response_labels.size()) != k ||
        (s > 0 && static_cast<Eigen::Index>(model.exogenous_labels.size()) != m)) {
      throw MissingModel("label counts do not match dimensions");
    }
    model.response_means = vector_from_json(doc["response_means"], k);
    for (int i = 0; i < p; ++i) {
      model.theta.push_back(
          matrix_from_json(doc["theta"].at(static_cast<std::size_t>(i)), k, k));
      model.y_lag_means.push_back(
          vector_from_json(doc["y_lag_means"].at(static_cast<std::size_t>(i)), k));
    }
    for (int j = 0; j < s; ++j) {
      model.beta.push_back(
          matrix_from_json(doc["beta"].at(static_cast<std::size_t>(j)), k, m));
      model.x_lag_means.push_back(
          vector_from_json(doc["x_lag_means"].at(static_cast<std::size_t>(j)), m));
    }
    if (!doc["seasonal"].is_null()) {
      const auto& seasonal = doc["seasonal"];
      const int period = seasonal["period"].get<int>();
      const auto& head = seasonal["head"];
      auto labels = head["labels"].get<std::vector<std::string>>();
      const IsoWeek start = IsoWeek::parse(head["start_week"].get<std::string>());
      Eigen::MatrixXd values = matrix_from_json(
          head["values"], static_cast<Eigen::Index>(labels.size()), period);
      model.seasonal = SeasonalTransform{
          period, MultivariateSeries(
                      std::move(labels),
                      TimeIndex{start, static_cast<std::size_t>(period)},
                      std::move(values))};
    }
    return model;
  } catch (const MissingModel&) {
    throw;
  } catch (const std::exception& e) {
    throw MissingModel(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace svarx
