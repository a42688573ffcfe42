#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "svarx/errors.hpp"
#include "svarx/evaluation.hpp"
#include "svarx/ingest.hpp"
#include "svarx/synthetic.hpp"

using namespace svarx;

namespace {

struct SmallData {
  MultivariateSeries y;
  MultivariateSeries x;
  VarxCoefficients truth;
};

SmallData small_varx(double noise_std, std::uint64_t seed, int T = 90) {
  SyntheticSpec spec;
  spec.k = 3;
  spec.m = 2;
  spec.T = T;
  spec.p = 2;
  spec.s = 1;
  spec.sparsity = 0.8;
  spec.seed = seed;
  const auto coefs = draw_varx_coefficients(spec);
  SimulationOptions opts;
  opts.T = T;
  opts.noise_std = noise_std;
  opts.seed = seed + 1000;
  auto [y, x] = simulate_varx(coefs, spec.m, opts);
  return SmallData{std::move(y), std::move(x), coefs};
}

VarxModel zero_model(const VarxCoefficients& coefs, const Eigen::VectorXd& means) {
  VarxModel model;
  for (const auto& t : coefs.theta) {
    model.theta.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
    model.y_lag_means.push_back(Eigen::VectorXd::Zero(t.rows()));
  }
  for (const auto& b : coefs.beta) {
    model.beta.push_back(Eigen::MatrixXd::Zero(b.rows(), b.cols()));
    model.x_lag_means.push_back(Eigen::VectorXd::Zero(b.cols()));
  }
  model.response_means = means;
  const auto k = static_cast<int>(coefs.theta[0].rows());
  for (int i = 0; i < k; ++i) {
    model.response_labels.push_back("y" + std::to_string(i + 1));
  }
  return model;
}

}  // namespace

TEST_CASE("cv with a lambda_max-only grid scores the null model") {
  const auto data = small_varx(0.5, 3);
  const auto train = data.y.slice(0, 40);
  const auto validation = data.y.slice(40, 25);

  const auto x_train = data.x.slice(0, 40);
  const auto problem = build_design(train, &x_train, 2, 1, true);
  const double top = lambda_max(problem);

  const auto cv =
      rolling_one_step_cv(train, validation, &data.x, 2, 1, {top});
  CHECK(cv.selected_lambda == top);
  CHECK(cv.selected_index == 0);
  REQUIRE(cv.scores.size() == 1);

  // Independent oracle: the null model predicts the mean of the train
  // response rows (weeks max(p,s) .. 39).
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  for (std::size_t w = 2; w < 40; ++w) {
    mean += train.values().col(static_cast<Eigen::Index>(w));
  }
  mean /= 38.0;
  double expected = 0.0;
  for (std::size_t w = 40; w < 65; ++w) {
    expected +=
        (data.y.values().col(static_cast<Eigen::Index>(w)) - mean).squaredNorm();
  }
  expected /= 25.0 * 3.0;
  CHECK(cv.scores[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cv selects a penalty no worse than the null model") {
  const auto data = small_varx(0.2, 7);
  const auto train = data.y.slice(0, 40);
  const auto validation = data.y.slice(40, 25);
  const auto x_train = data.x.slice(0, 40);
  const auto problem = build_design(train, &x_train, 2, 1, true);
  const auto grid = lambda_grid(problem, 15, 1e-4);

  const auto cv = rolling_one_step_cv(train, validation, &data.x, 2, 1, grid);
  CHECK(cv.scores[cv.selected_index] <= cv.scores[0]);
  // strong sparse signal: shrinking all the way to zero is suboptimal
  CHECK(cv.scores[cv.selected_index] < cv.scores[0]);
  CHECK(cv.selected_lambda == grid[cv.selected_index]);
}

TEST_CASE("cv on noise-free data scores near zero at the small end") {
  const auto data = small_varx(0.0, 11);
  const auto train = data.y.slice(0, 40);
  const auto validation = data.y.slice(40, 25);
  const auto x_train = data.x.slice(0, 40);
  const auto problem = build_design(train, &x_train, 2, 1, true);
  const auto grid = lambda_grid(problem, 12, 1e-6);

  const auto cv = rolling_one_step_cv(train, validation, &data.x, 2, 1, grid);
  CHECK(cv.scores.back() <= 1e-4 * cv.scores.front());
}

TEST_CASE("cv is deterministic") {
  const auto data = small_varx(0.3, 13);
  const auto train = data.y.slice(0, 40);
  const auto validation = data.y.slice(40, 25);
  const auto x_train = data.x.slice(0, 40);
  const auto problem = build_design(train, &x_train, 2, 1, true);
  const auto grid = lambda_grid(problem, 8, 0.01);
  const auto a = rolling_one_step_cv(train, validation, &data.x, 2, 1, grid);
  const auto b = rolling_one_step_cv(train, validation, &data.x, 2, 1, grid);
  CHECK(a.scores == b.scores);
  CHECK(a.selected_lambda == b.selected_lambda);
}

TEST_CASE("cv refit-per-week variant runs and selects from the same grid") {
  const auto data = small_varx(0.3, 17, 60);
  const auto train = data.y.slice(0, 25);
  const auto validation = data.y.slice(25, 10);
  const auto x_train = data.x.slice(0, 25);
  const auto problem = build_design(train, &x_train, 2, 1, true);
  const auto grid = lambda_grid(problem, 5, 0.05);
  CvOptions options;
  options.refit_each_week = true;
  const auto cv =
      rolling_one_step_cv(train, validation, &data.x, 2, 1, grid, {}, options);
  CHECK(cv.scores.size() == 5);
  CHECK(cv.selected_lambda == grid[cv.selected_index]);

  SUBCASE("with a single validation week both schemes fit the same window") {
    const auto one_week = data.y.slice(25, 1);
    const auto fixed =
        rolling_one_step_cv(train, one_week, &data.x, 2, 1, grid);
    const auto refit =
        rolling_one_step_cv(train, one_week, &data.x, 2, 1, grid, {}, options);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(fixed.scores[i] == doctest::Approx(refit.scores[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("rolling test forecast") {
  const auto data = small_varx(0.0, 19);
  const auto history = data.y.slice(0, 60);
  const auto test = data.y.slice(60, 30);

  SUBCASE("zero model predicts a constant mean") {
    auto model = zero_model(data.truth, Eigen::Vector3d(1.0, 2.0, 3.0));
    const auto pred = rolling_test_forecast(model, history, test, &data.x);
    CHECK(pred.index() == test.index());
    for (std::size_t t = 0; t < pred.size(); ++t) {
      CHECK(pred.values()(0, static_cast<Eigen::Index>(t)) == 1.0);
      CHECK(pred.values()(2, static_cast<Eigen::Index>(t)) == 3.0);
    }
  }
  SUBCASE("true model on noise-free data is exact per week") {
    auto model = zero_model(data.truth, Eigen::VectorXd::Zero(3));
    model.theta = data.truth.theta;
    model.beta = data.truth.beta;
    const auto pred = rolling_test_forecast(model, history, test, &data.x);
    const Eigen::MatrixXd err = pred.values() - test.values();
    CHECK(err.cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("empty test is rejected") {
    auto model = zero_model(data.truth, Eigen::VectorXd::Zero(3));
    const auto empty = data.y.slice(60, 0);
    CHECK_THROWS_AS(rolling_test_forecast(model, history, empty, &data.x),
                    InsufficientHistory);
  }
  SUBCASE("a one-week rolling forecast equals the h=1 path") {
    auto model = zero_model(data.truth, Eigen::VectorXd::Zero(3));
    model.theta = data.truth.theta;
    model.beta = data.truth.beta;
    const auto one_week = data.y.slice(60, 1);
    const auto rolled = rolling_test_forecast(model, history, one_week, &data.x);
    const auto direct = forecast_h_step(model, lag_history(data.y, 60, 2),
                                        lag_history(data.x, 60, 1), 1);
    CHECK(rolled.values().col(0) == direct.col(0));
  }
}

TEST_CASE("rolling test forecast never reads the week it predicts") {
  const auto data = small_varx(0.4, 23);
  const auto history = data.y.slice(0, 60);
  const auto test = data.y.slice(60, 30);
  auto model = zero_model(data.truth, Eigen::VectorXd::Zero(3));
  model.theta = data.truth.theta;
  model.beta = data.truth.beta;

  const auto base = rolling_test_forecast(model, history, test, &data.x);
  for (std::size_t w : {std::size_t{0}, std::size_t{7}, std::size_t{29}}) {
    Eigen::MatrixXd perturbed_values = test.values();
    perturbed_values.col(static_cast<Eigen::Index>(w)).array() += 1000.0;
    const MultivariateSeries perturbed(test.labels(), test.index(),
                                       perturbed_values);
    const auto pred = rolling_test_forecast(model, history, perturbed, &data.x);
    // the perturbed week's own prediction is untouched, bit for bit
    CHECK(pred.values().col(static_cast<Eigen::Index>(w)) ==
          base.values().col(static_cast<Eigen::Index>(w)));
    if (w + 1 < test.size()) {  // later weeks do see the perturbation
      CHECK(pred.values().col(static_cast<Eigen::Index>(w) + 1) !=
            base.values().col(static_cast<Eigen::Index>(w) + 1));
    }
  }
}

TEST_CASE("rmse") {
  const TimeIndex idx{IsoWeek{2014, 1}, 2};
  const auto series = [&](double a, double b, double c, double d) {
    Eigen::MatrixXd m(2, 2);
    m << a, b, c, d;
    return MultivariateSeries({"r1", "r2"}, idx, m);
  };

  SUBCASE("zero when equal") {
    const auto s = series(1, 2, 3, 4);
    CHECK(rmse(s, s).isZero(0.0));
  }
  SUBCASE("direct formula") {
    const auto pred = series(0, 0, 0, 0);
    const auto act = series(3, 4, 3, 4);
    const auto out = rmse(pred, act);
    CHECK(out(0) == doctest::Approx(std::sqrt(12.5)));
    CHECK(out(1) == doctest::Approx(std::sqrt(12.5)));
  }
  SUBCASE("mismatched labels") {
    const auto pred = series(0, 0, 0, 0);
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 3, 4;
    const MultivariateSeries other({"r1", "zzz"}, idx, m);
    CHECK_THROWS_AS(rmse(pred, other), IndexMismatch);
  }
}

TEST_CASE("run_variants produces the Table-1 layout") {
  SyntheticSpec spec;  // paper scale
  spec.noise_std = 0.3;
  spec.seed = 5;
  const auto data = generate_synthetic_varx(spec);

  EvaluationConfig config;
  config.grid_size = 6;
  config.grid_ratio = 0.05;

  const std::vector<VariantSpec> variants = {
      VariantSpec::standard(Variant::D), VariantSpec::standard(Variant::A),
      VariantSpec::standard(Variant::C), VariantSpec::standard(Variant::B)};
  const auto report = run_variants(data.y, &data.x, variants, config);

  REQUIRE(report.regions.size() == 9);
  CHECK(report.regions == RegionMap::canonical_regions());
  REQUIRE(report.variants.size() == 4);
  // columns ordered A < B < C < D regardless of request order
  CHECK(report.variants[0].variant.id == Variant::A);
  CHECK(report.variants[1].variant.id == Variant::B);
  CHECK(report.variants[2].variant.id == Variant::C);
  CHECK(report.variants[3].variant.id == Variant::D);
  for (const auto& v : report.variants) {
    CHECK(v.rmse_per_region.size() == 9);
    CHECK((v.rmse_per_region.array() >= 0.0).all());
    CHECK(v.predictions.size() == 42);  // (178-52)/3 test weeks
  }
  // variant structure: A has only url labels, B only query, D none
  for (const auto& label : report.variants[0].model.exogenous_labels) {
    CHECK(label.find("-query") == std::string::npos);
  }
  for (const auto& label : report.variants[1].model.exogenous_labels) {
    CHECK(label.find("-url") == std::string::npos);
  }
  CHECK(report.variants[3].model.s() == 0);
  CHECK(report.variants[0].model.m() == 9);
  CHECK(report.variants[2].model.m() == 18);
  CHECK(report.rmse_for(Variant::A, "Pacific") ==
        report.variants[0].rmse_per_region(7));
  CHECK_THROWS_AS(report.rmse_for(Variant::A, "Atlantis"), InvalidArgument);

  SUBCASE("csv layout") {
    std::ostringstream out;
    write_report_csv(out, report);
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "region,A,B,C,D");
    std::size_t rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 9);
  }
  SUBCASE("json report carries config and curves") {
    std::ostringstream out;
    write_report_json(out, report, "{\"seed\":5}");
    const auto text = out.str();
    CHECK(text.find("\"grid_ratio\"") != std::string::npos);
    CHECK(text.find("\"run_config\"") != std::string::npos);
    CHECK(text.find("\"selected_lambda\"") != std::string::npos);
  }
  SUBCASE("forecast csv shape") {
    std::ostringstream out;
    write_forecast_csv(out, report.variants[0]);
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "week,region,actual,predicted");
    std::size_t rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 9 * 42);
  }
}

TEST_CASE("run_variants flags duplicate variants, last wins") {
  SyntheticSpec spec;
  spec.T = 100;
  spec.seed = 8;
  const auto data = generate_synthetic_varx(spec);
  EvaluationConfig config;
  config.period = 10;
  config.grid_size = 4;
  config.grid_ratio = 0.1;
  const std::vector<VariantSpec> variants = {
      VariantSpec::standard(Variant::D), VariantSpec::standard(Variant::D)};
  const auto report = run_variants(data.y, nullptr, variants, config);
  CHECK(report.variants.size() == 1);
  REQUIRE(report.warnings.size() == 1);
  CHECK(report.warnings[0].find("duplicate variant D") != std::string::npos);
}

TEST_CASE("run_variants validates its inputs") {
  SyntheticSpec spec;
  spec.k = 3;
  spec.m = 2;
  spec.T = 60;
  const auto data = generate_synthetic_varx(spec);
  EvaluationConfig config;
  config.period = 6;
  CHECK_THROWS_AS(run_variants(data.y, &data.x,
                               {VariantSpec::standard(Variant::D)}, config),
                  ShapeMismatch);

  SyntheticSpec spec9;
  spec9.T = 100;
  spec9.m = 5;  // not the 18-row census layout
  const auto data9 = generate_synthetic_varx(spec9);
  config.period = 10;
  CHECK_THROWS_AS(run_variants(data9.y, &data9.x,
                               {VariantSpec::standard(Variant::C)}, config),
                  ShapeMismatch);
  CHECK_THROWS_AS(run_variants(data9.y, nullptr,
                               {VariantSpec::standard(Variant::C)}, config),
                  InvalidArgument);
  CHECK_THROWS_AS(
      run_variants(data9.y, nullptr, {}, config), InvalidArgument);

  VariantSpec broken{Variant::A, ExogenousSelector::all};
  CHECK_THROWS_AS(
      run_variants(data9.y, nullptr, {broken}, config), InvalidArgument);
}

TEST_CASE("level-scale reports invert the seasonal difference") {
  SyntheticSpec spec;
  spec.T = 100;
  spec.seed = 21;
  spec.noise_std = 0.2;
  const auto data = generate_synthetic_varx(spec);

  EvaluationConfig config;
  config.period = 10;
  config.grid_size = 4;
  config.grid_ratio = 0.1;
  config.scale = Scale::level;
  const auto report = run_variants(data.y, nullptr,
                                   {VariantSpec::standard(Variant::D)}, config);
  const auto& result = report.variants[0];
  // level-scale actuals are the raw series over the test weeks
  const std::size_t diff_len = 100 - 10;
  const std::size_t test_len = diff_len - 2 * (diff_len / 3);
  const std::size_t test_start_raw = 100 - test_len;
  for (std::size_t i = 0; i < test_len; ++i) {
    CHECK(result.actuals.values()(0, static_cast<Eigen::Index>(i)) ==
          data.y.values()(0, static_cast<Eigen::Index>(test_start_raw + i)));
  }
  // predictions differ from the differenced scale by the seasonal lag value
  CHECK(result.predictions.index() == result.actuals.index());
}
