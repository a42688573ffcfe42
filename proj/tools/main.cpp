#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "svarx/errors.hpp"
#include "svarx/evaluation.hpp"
#include "svarx/ingest.hpp"
#include "svarx/model.hpp"
#include "svarx/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace svarx;

namespace {

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// options shared by the pipeline commands

struct Options {
  std::string claims_path;
  std::string query_path;
  std::string clicks_path;
  std::string totals_path;
  std::string region_map_path;
  std::string out_dir = "out";
  std::string variants = "A,B,C,D";
  std::string variant = "C";  // cv / fit operate on one variant
  std::string scale = "diff";
  std::string x_policy = "hold-last";
  std::string model_path;
  std::string lambda_text;  // empty = select by cross-validation
  int p = 2;
  int s = 1;
  int period = 52;
  int grid_size = 20;
  double grid_ratio = 0.01;
  double epsilon = 0.5;
  double tol = 1e-7;
  int max_iter = 10000;
  bool no_center = false;
  bool standardize = false;
  bool refit_each_week = false;
  int horizon = 2;
  double threshold = 0.0;
  bool svg = false;
  std::uint64_t seed = 0;

  // synth
  SyntheticSpec synth;
  double synth_total = 1e6;
  double synth_claims_base = 10000.0;
  double synth_signal_base = -4.0;

  EvaluationConfig evaluation() const {
    EvaluationConfig config;
    config.p = p;
    config.s = s;
    config.period = period;
    config.grid_size = grid_size;
    config.grid_ratio = grid_ratio;
    config.scale = scale == "level" ? Scale::level : Scale::differenced;
    config.center = !no_center;
    config.standardize = standardize;
    config.refit_each_week = refit_each_week;
    config.solver.tol = tol;
    config.solver.max_iter = max_iter;
    return config;
  }
};

// Effective configuration echoed into every artifact so a run can be
// replayed from its outputs alone.
json config_echo(const std::string& command, const Options& opt) {
  json doc;
  doc["command"] = command;
  doc["p"] = opt.p;
  doc["s"] = opt.s;
  doc["period"] = opt.period;
  doc["epsilon"] = opt.epsilon;
  doc["grid_size"] = opt.grid_size;
  doc["grid_ratio"] = opt.grid_ratio;
  doc["scale"] = opt.scale;
  doc["seed"] = opt.seed;
  doc["center"] = !opt.no_center;
  doc["standardize"] = opt.standardize;
  doc["refit_each_week"] = opt.refit_each_week;
  doc["solver"] = {{"tol", opt.tol}, {"max_iter", opt.max_iter}};
  doc["out"] = opt.out_dir;
  if (!opt.claims_path.empty()) doc["claims"] = opt.claims_path;
  if (!opt.query_path.empty()) doc["query"] = opt.query_path;
  if (!opt.clicks_path.empty()) doc["clicks"] = opt.clicks_path;
  if (!opt.totals_path.empty()) doc["totals"] = opt.totals_path;
  if (!opt.region_map_path.empty()) doc["region_map"] = opt.region_map_path;
  if (!opt.model_path.empty()) doc["model"] = opt.model_path;
  if (command == "evaluate") doc["variants"] = opt.variants;
  if (command == "cv" || command == "fit") doc["variant"] = opt.variant;
  if (command == "fit") doc["lambda"] = opt.lambda_text;
  if (command == "forecast") {
    doc["horizon"] = opt.horizon;
    doc["x_policy"] = opt.x_policy;
  }
  if (command == "sparsity") doc["threshold"] = opt.threshold;
  if (command == "synth") {
    doc["synth"] = {{"k", opt.synth.k},
                    {"m", opt.synth.m},
                    {"T", opt.synth.T},
                    {"p", opt.synth.p},
                    {"s", opt.synth.s},
                    {"sparsity", opt.synth.sparsity},
                    {"spectral_radius", opt.synth.spectral_radius},
                    {"noise_std", opt.synth.noise_std},
                    {"total", opt.synth_total},
                    {"claims_base", opt.synth_claims_base},
                    {"signal_base", opt.synth_signal_base}};
  }
  return doc;
}

// ---------------------------------------------------------------------------
// artifact bookkeeping: on failure everything written so far is removed

class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
  }

  template <typename Fn>
  fs::path write(const std::string& name, Fn&& fn) {
    const fs::path path = dir_ / name;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    fn(out);
    out.close();
    if (!out) throw IoError("failed while writing " + path.string());
    written_.push_back(path);
    return path;
  }

  void discard_all() {
    for (const auto& path : written_) {
      std::error_code ec;
      fs::remove(path, ec);
    }
    written_.clear();
  }

  const std::vector<fs::path>& written() const { return written_; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

// ---------------------------------------------------------------------------
// data loading shared by evaluate / cv / fit / forecast

struct Inputs {
  MultivariateSeries claims;
  std::unique_ptr<MultivariateSeries> exogenous;  // 18 rows when present

  Inputs(MultivariateSeries c, std::unique_ptr<MultivariateSeries> x)
      : claims(std::move(c)), exogenous(std::move(x)) {}
};

RegionMap load_region_map(const Options& opt) {
  if (opt.region_map_path.empty()) return RegionMap::census_default();
  auto in = open_input(opt.region_map_path);
  return RegionMap::from_csv(in);
}

Inputs load_inputs(const Options& opt, bool need_exogenous) {
  const RegionMap map = load_region_map(opt);
  if (opt.claims_path.empty()) throw IoError("--claims is required");
  auto claims_file = open_input(opt.claims_path);
  MultivariateSeries claims =
      aggregate_to_regions(parse_weekly_csv(claims_file), map);

  if (!need_exogenous) {
    return Inputs(std::move(claims), nullptr);
  }
  for (const auto& [path, flag] :
       {std::pair{&opt.query_path, "--query"},
        std::pair{&opt.clicks_path, "--clicks"},
        std::pair{&opt.totals_path, "--totals"}}) {
    if (path->empty()) {
      throw IoError(std::string(flag) + " is required for exogenous variants");
    }
  }
  auto query_file = open_input(opt.query_path);
  auto clicks_file = open_input(opt.clicks_path);
  auto totals_file = open_input(opt.totals_path);
  MultivariateSeries query = parse_weekly_csv(query_file);
  MultivariateSeries clicks = parse_weekly_csv(clicks_file);
  MultivariateSeries totals = parse_weekly_csv(totals_file);

  // Restrict everything to the common week range before normalizing.
  auto [q1, c1] = align(query, clicks);
  auto [q2, t1] = align(q1, totals);
  auto [q3, claims1] = align(q2, claims);
  auto [c2, unused_q4] = align(c1, q3);
  auto [t2, unused_q5] = align(t1, q3);
  MultivariateSeries x = build_exogenous(q3, c2, t2, map, opt.epsilon);
  return Inputs(std::move(claims1),
                std::make_unique<MultivariateSeries>(std::move(x)));
}

std::vector<VariantSpec> parse_variants(const std::string& text) {
  std::vector<VariantSpec> variants;
  for (const char c : text) {
    if (c == ',' || c == ' ') continue;
    variants.push_back(VariantSpec::standard(variant_from_char(
        static_cast<char>(std::toupper(static_cast<unsigned char>(c))))));
  }
  if (variants.empty()) throw InvalidArgument("no variants requested");
  return variants;
}

std::string comment_config(const json& echo) {
  return "config: " + echo.dump();
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const Options& opt) {
  std::string stage = "setup";
  Artifacts artifacts(opt.out_dir);
  try {
    const json echo = config_echo("evaluate", opt);
    const auto variants = parse_variants(opt.variants);
    const bool need_exogenous =
        std::any_of(variants.begin(), variants.end(), [](const auto& v) {
          return v.selector != ExogenousSelector::none;
        });

    stage = "ingestion";
    const Inputs inputs = load_inputs(opt, need_exogenous);

    stage = "evaluation";
    const EvaluationReport report = run_variants(
        inputs.claims, inputs.exogenous.get(), variants, opt.evaluation());
    for (const auto& warning : report.warnings) {
      std::cerr << "warning: " << warning << "\n";
    }

    stage = "artifacts";
    artifacts.write("report.csv", [&](std::ostream& out) {
      write_report_csv(out, report, {comment_config(echo)});
    });
    artifacts.write("report.json", [&](std::ostream& out) {
      write_report_json(out, report, echo.dump());
    });
    artifacts.write("lambdas.csv", [&](std::ostream& out) {
      out << "# " << comment_config(echo) << "\n";
      out << "variant,selected_lambda,cv_score\n";
      for (const auto& v : report.variants) {
        out << to_char(v.variant.id) << ','
            << format_full(v.cv.selected_lambda) << ','
            << format_full(v.cv.scores[v.cv.selected_index]) << '\n';
      }
    });
    for (const auto& v : report.variants) {
      artifacts.write(std::string("forecasts_") + to_char(v.variant.id) + ".csv",
                      [&](std::ostream& out) {
                        write_forecast_csv(out, v, {comment_config(echo)});
                      });
    }

    std::cout << "wrote " << artifacts.written().size() << " artifacts to "
              << opt.out_dir << "\n";
    for (const auto& v : report.variants) {
      std::cout << "variant " << to_char(v.variant.id)
                << ": lambda=" << v.cv.selected_lambda
                << " mean_rmse=" << v.rmse_per_region.mean() << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    artifacts.discard_all();
    std::cerr << "svarx evaluate: " << stage << ": " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// cv / fit share the single-variant pipeline front

struct PreparedVariant {
  MultivariateSeries y_diff;
  SeasonalTransform transform;
  std::unique_ptr<MultivariateSeries> x_diff;
  VariantSpec variant;
  int s = 0;
};

PreparedVariant prepare_variant(const Options& opt, const Inputs& inputs,
                                const VariantSpec& variant) {
  MultivariateSeries y_raw = inputs.claims;
  std::unique_ptr<MultivariateSeries> x_sel;
  if (variant.selector != ExogenousSelector::none) {
    auto [ya, xa] = align(inputs.claims, *inputs.exogenous);
    y_raw = std::move(ya);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < xa.dim(); ++i) {
      const auto& label = xa.labels()[i];
      const bool keep = variant.selector == ExogenousSelector::all ||
                        (variant.selector == ExogenousSelector::url_only
                             ? label.ends_with("-url")
                             : label.ends_with("-query"));
      if (keep) rows.push_back(i);
    }
    x_sel = std::make_unique<MultivariateSeries>(xa.select_rows(rows));
  }
  auto [y_diff, transform] = seasonal_difference(y_raw, opt.period);
  std::unique_ptr<MultivariateSeries> x_diff;
  if (x_sel) {
    x_diff = std::make_unique<MultivariateSeries>(
        seasonal_difference(*x_sel, opt.period).first);
  }
  return PreparedVariant{std::move(y_diff), std::move(transform),
                         std::move(x_diff), variant, x_sel ? opt.s : 0};
}

CvResult run_cv(const Options& opt, const PreparedVariant& prepared) {
  const auto split = split_thirds(prepared.y_diff);
  MultivariateSeries x_train = split.train;
  if (prepared.x_diff) {
    const auto off =
        prepared.x_diff->index().position(split.train.index().start).value();
    x_train = prepared.x_diff->slice(off, split.train.size());
  }
  const auto problem =
      build_design(split.train, prepared.x_diff ? &x_train : nullptr, opt.p,
                   prepared.s, !opt.no_center, opt.standardize);
  const auto grid = lambda_grid(problem, opt.grid_size, opt.grid_ratio);
  const CvOptions cv_options{!opt.no_center, opt.standardize,
                             opt.refit_each_week};
  SolverSettings settings;
  settings.tol = opt.tol;
  settings.max_iter = opt.max_iter;
  return rolling_one_step_cv(split.train, split.validation,
                             prepared.x_diff.get(), opt.p, prepared.s, grid,
                             settings, cv_options);
}

int cmd_cv(const Options& opt) {
  std::string stage = "setup";
  Artifacts artifacts(opt.out_dir);
  try {
    const json echo = config_echo("cv", opt);
    const auto variant = VariantSpec::standard(variant_from_char(
        static_cast<char>(std::toupper(static_cast<unsigned char>(
            opt.variant.at(0))))));

    stage = "ingestion";
    const Inputs inputs =
        load_inputs(opt, variant.selector != ExogenousSelector::none);

    stage = "cross-validation";
    const PreparedVariant prepared = prepare_variant(opt, inputs, variant);
    const CvResult cv = run_cv(opt, prepared);

    stage = "artifacts";
    artifacts.write("cv.json", [&](std::ostream& out) {
      json doc;
      doc["kind"] = "svarx-cv";
      doc["schema_version"] = 1;
      doc["run_config"] = echo;
      doc["variant"] = std::string(1, to_char(variant.id));
      doc["grid"] = cv.grid;
      doc["scores"] = cv.scores;
      doc["selected_lambda"] = cv.selected_lambda;
      out << doc.dump(2) << "\n";
    });
    std::cout << "selected lambda " << format_full(cv.selected_lambda)
              << " (score " << format_full(cv.scores[cv.selected_index])
              << ")\n";
    return 0;
  } catch (const std::exception& e) {
    artifacts.discard_all();
    std::cerr << "svarx cv: " << stage << ": " << e.what() << "\n";
    return 1;
  }
}

int cmd_fit(const Options& opt) {
  std::string stage = "setup";
  Artifacts artifacts(opt.out_dir);
  try {
    const json echo = config_echo("fit", opt);
    const auto variant = VariantSpec::standard(variant_from_char(
        static_cast<char>(std::toupper(static_cast<unsigned char>(
            opt.variant.at(0))))));

    stage = "ingestion";
    const Inputs inputs =
        load_inputs(opt, variant.selector != ExogenousSelector::none);

    const PreparedVariant prepared = prepare_variant(opt, inputs, variant);
    double lambda = 0.0;
    if (opt.lambda_text.empty()) {
      stage = "cross-validation";
      lambda = run_cv(opt, prepared).selected_lambda;
    } else {
      lambda = std::stod(opt.lambda_text);
    }

    stage = "fit";
    // Deployment fit: all differenced data at the chosen penalty.
    MultivariateSeries x_all = prepared.y_diff;
    if (prepared.x_diff) {
      const auto off = prepared.x_diff->index()
                           .position(prepared.y_diff.index().start)
                           .value();
      x_all = prepared.x_diff->slice(off, prepared.y_diff.size());
    }
    const auto problem =
        build_design(prepared.y_diff, prepared.x_diff ? &x_all : nullptr,
                     opt.p, prepared.s, !opt.no_center, opt.standardize);
    SolverSettings settings;
    settings.tol = opt.tol;
    settings.max_iter = opt.max_iter;
    const auto result = fit(problem, lambda, settings);
    const VarxModel model = from_solution(
        result, problem, ModelContext{prepared.transform, variant.id});

    stage = "artifacts";
    artifacts.write("model.json", [&](std::ostream& out) {
      // embed the effective run configuration alongside the model fields
      std::stringstream buffer;
      save_model(buffer, model);
      json doc = json::parse(buffer.str());
      doc["run_config"] = echo;
      out << doc.dump(2) << "\n";
    });
    std::cout << "fitted variant " << to_char(variant.id) << " at lambda "
              << format_full(lambda) << " ("
              << (result.converged ? "converged" : "max-iter") << " after "
              << result.iterations << " iterations)\n";
    return 0;
  } catch (const std::exception& e) {
    artifacts.discard_all();
    std::cerr << "svarx fit: " << stage << ": " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// forecast

int cmd_forecast(const Options& opt) {
  std::string stage = "setup";
  Artifacts artifacts(opt.out_dir);
  try {
    const json echo = config_echo("forecast", opt);

    stage = "model";
    auto model_file = open_input(opt.model_path);
    const VarxModel model = load_model(model_file);

    stage = "ingestion";
    const Inputs inputs = load_inputs(opt, model.s() > 0);

    stage = "forecast";
    MultivariateSeries y_raw = inputs.claims;
    std::unique_ptr<MultivariateSeries> x_diff;
    if (model.s() > 0) {
      auto [ya, xa] = align(inputs.claims, *inputs.exogenous);
      y_raw = std::move(ya);
      std::vector<std::size_t> rows;
      for (const auto& label : model.exogenous_labels) {
        rows.push_back(xa.row_of(label));
      }
      x_diff = std::make_unique<MultivariateSeries>(
          seasonal_difference(xa.select_rows(rows), opt.period).first);
    }
    auto [y_diff, transform] = seasonal_difference(y_raw, opt.period);

    const Eigen::MatrixXd y_hist =
        lag_history(y_diff, y_diff.size(), model.p());
    Eigen::MatrixXd x_hist;
    if (model.s() > 0) {
      const auto off =
          x_diff->index().position(y_diff.index().start).value();
      x_hist = lag_history(*x_diff, off + y_diff.size(), model.s());
    }
    const XFuturePolicy policy = opt.x_policy == "zeros"
                                     ? XFuturePolicy::zeros
                                     : XFuturePolicy::hold_last;
    const Eigen::MatrixXd diff_path =
        forecast_h_step(model, y_hist, x_hist, opt.horizon, policy);

    // Levels come from the seasonal inversion against the observed raw data.
    Eigen::MatrixXd level_path(diff_path.rows(), diff_path.cols());
    for (int h = 0; h < opt.horizon; ++h) {
      const std::size_t raw_offset = y_raw.size() + static_cast<std::size_t>(h);
      level_path.col(h) = forecast_level(model, diff_path.col(h), raw_offset,
                                         y_raw);
    }

    stage = "artifacts";
    artifacts.write("forecast.csv", [&](std::ostream& out) {
      out << "# " << comment_config(echo) << "\n";
      out << "week,region,diff,level\n";
      for (int h = 0; h < opt.horizon; ++h) {
        const IsoWeek week =
            y_raw.index().last().plus(static_cast<std::int64_t>(h) + 1);
        for (std::size_t r = 0; r < y_raw.dim(); ++r) {
          out << week.str() << ',' << y_raw.labels()[r] << ','
              << format_full(diff_path(static_cast<Eigen::Index>(r), h)) << ','
              << format_full(level_path(static_cast<Eigen::Index>(r), h))
              << '\n';
        }
      }
    });
    std::cout << "forecast horizon " << opt.horizon << " written to "
              << opt.out_dir << "/forecast.csv\n";
    return 0;
  } catch (const std::exception& e) {
    artifacts.discard_all();
    std::cerr << "svarx forecast: " << stage << ": " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// sparsity

void write_heatmap_svg(std::ostream& out, const Eigen::MatrixXd& magnitudes,
                       const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels,
                       const std::string& title) {
  const int cell = 22;
  const int left = 150;
  const int top = 120;
  const auto rows = magnitudes.rows();
  const auto cols = magnitudes.cols();
  const double peak = std::max(magnitudes.maxCoeff(), 1e-300);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << left + cols * cell + 20 << "\" height=\"" << top + rows * cell + 20
      << "\">\n";
  out << "<text x=\"10\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
  for (Eigen::Index j = 0; j < cols; ++j) {
    const int x = left + static_cast<int>(j) * cell + cell / 2;
    out << "<text x=\"" << x << "\" y=\"" << top - 6
        << "\" font-size=\"9\" text-anchor=\"start\" transform=\"rotate(-60 "
        << x << ' ' << top - 6 << ")\">" << col_labels[static_cast<std::size_t>(j)]
        << "</text>\n";
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    out << "<text x=\"" << left - 6 << "\" y=\""
        << top + static_cast<int>(i) * cell + cell / 2 + 4
        << "\" font-size=\"9\" text-anchor=\"end\">"
        << row_labels[static_cast<std::size_t>(i)] << "</text>\n";
    for (Eigen::Index j = 0; j < cols; ++j) {
      const int shade = 255 - static_cast<int>(
          std::lround(255.0 * magnitudes(i, j) / peak));
      out << "<rect x=\"" << left + static_cast<int>(j) * cell << "\" y=\""
          << top + static_cast<int>(i) * cell << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ','
          << shade << ',' << shade << ")\" stroke=\"#ccc\"/>\n";
    }
  }
  out << "</svg>\n";
}

int cmd_sparsity(const Options& opt) {
  std::string stage = "model";
  Artifacts artifacts(opt.out_dir);
  try {
    const json echo = config_echo("sparsity", opt);
    auto model_file = open_input(opt.model_path);
    const VarxModel model = load_model(model_file);

    stage = "artifacts";
    const auto pattern = sparsity_pattern(model, opt.threshold);
    const auto write_matrix = [&](const std::string& name,
                                  const Eigen::MatrixXd& magnitudes,
                                  const std::vector<std::string>& cols) {
      artifacts.write(name + ".csv", [&](std::ostream& out) {
        out << "# " << comment_config(echo) << "\n";
        out << "region";
        for (const auto& c : cols) out << ',' << c;
        out << '\n';
        for (Eigen::Index i = 0; i < magnitudes.rows(); ++i) {
          out << model.response_labels[static_cast<std::size_t>(i)];
          for (Eigen::Index j = 0; j < magnitudes.cols(); ++j) {
            out << ',' << format_full(magnitudes(i, j));
          }
          out << '\n';
        }
      });
      if (opt.svg) {
        artifacts.write(name + ".svg", [&](std::ostream& out) {
          out << "<!-- " << comment_config(echo) << " -->\n";
          write_heatmap_svg(out, magnitudes, model.response_labels, cols, name);
        });
      }
    };
    for (int i = 0; i < model.p(); ++i) {
      write_matrix("sparsity_theta_lag" + std::to_string(i + 1),
                   pattern.theta[static_cast<std::size_t>(i)],
                   model.response_labels);
    }
    for (int j = 0; j < model.s(); ++j) {
      write_matrix("sparsity_beta_lag" + std::to_string(j + 1),
                   pattern.beta[static_cast<std::size_t>(j)],
                   model.exogenous_labels);
    }
    std::cout << "nonzero coefficients: " << pattern.total_nonzeros << "\n";
    return 0;
  } catch (const std::exception& e) {
    artifacts.discard_all();
    std::cerr << "svarx sparsity: " << stage << ": " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// synth: emit a census-layout fixture bundle that the pipeline can ingest

int cmd_synth(Options& opt) {
  std::string stage = "generation";
  Artifacts artifacts(opt.out_dir);
  try {
    opt.synth.seed = opt.seed;
    const json echo = config_echo("synth", opt);
    if (opt.synth.k != 9 || opt.synth.m != 18) {
      throw InvalidSpec("the fixture bundle requires the census layout "
                        "(k=9, m=18)");
    }
    const SyntheticData data = generate_synthetic_varx(opt.synth);
    const auto& regions = RegionMap::canonical_regions();
    const auto T = data.y.size();
    const TimeIndex index = data.y.index();

    // Claims are the response plus a flat base level; the seasonal
    // difference removes the base, so the generated dynamics survive the
    // pipeline's preprocessing untouched.
    const Eigen::MatrixXd claims =
        data.y.values().array() + opt.synth_claims_base;

    // Search counts invert the log-ratio normalization at a constant weekly
    // total, so build_exogenous reproduces the generated signals exactly.
    const auto counts_from_signal = [&](const Eigen::MatrixXd& signal) {
      const Eigen::MatrixXd counts =
          ((signal.array() + opt.synth_signal_base).exp() * opt.synth_total -
           opt.epsilon)
              .matrix();
      return counts.cwiseMax(0.0).eval();
    };
    const Eigen::MatrixXd query_counts =
        counts_from_signal(data.x.values().topRows(9));
    const Eigen::MatrixXd url_counts =
        counts_from_signal(data.x.values().bottomRows(9));

    stage = "artifacts";
    const std::vector<std::string> note = {comment_config(echo)};
    artifacts.write("claims.csv", [&](std::ostream& out) {
      write_weekly_csv(out, MultivariateSeries(regions, index, claims), note);
    });
    artifacts.write("query.csv", [&](std::ostream& out) {
      write_weekly_csv(out, MultivariateSeries(regions, index, query_counts),
                       note);
    });
    artifacts.write("clicks.csv", [&](std::ostream& out) {
      write_weekly_csv(out, MultivariateSeries(regions, index, url_counts),
                       note);
    });
    artifacts.write("totals.csv", [&](std::ostream& out) {
      write_weekly_csv(
          out,
          MultivariateSeries(
              regions, index,
              Eigen::MatrixXd::Constant(9, static_cast<Eigen::Index>(T),
                                        opt.synth_total)),
          note);
    });
    artifacts.write("region_map.csv", [&](std::ostream& out) {
      out << "# " << comment_config(echo) << "\n";
      out << "state,region\n";
      for (const auto& r : regions) out << r << ',' << r << '\n';
    });
    artifacts.write("truth.json", [&](std::ostream& out) {
      json doc;
      doc["kind"] = "svarx-truth";
      doc["schema_version"] = 1;
      doc["run_config"] = echo;
      const auto matrix_json = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          json row = json::array();
          for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
          rows.push_back(std::move(row));
        }
        return rows;
      };
      doc["theta"] = json::array();
      for (const auto& t : data.truth.theta) {
        doc["theta"].push_back(matrix_json(t));
      }
      doc["beta"] = json::array();
      for (const auto& b : data.truth.beta) {
        doc["beta"].push_back(matrix_json(b));
      }
      out << doc.dump(2) << "\n";
    });
    std::cout << "fixture bundle (" << data.y.size() << " weeks) written to "
              << opt.out_dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    artifacts.discard_all();
    std::cerr << "svarx synth: " << stage << ": " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------

void add_data_options(CLI::App* cmd, Options& opt) {
  cmd->add_option("--claims", opt.claims_path, "Weekly claims CSV");
  cmd->add_option("--query", opt.query_path, "Weekly query-volume CSV");
  cmd->add_option("--clicks", opt.clicks_path, "Weekly URL-click CSV");
  cmd->add_option("--totals", opt.totals_path,
                  "Per-region weekly search totals CSV");
  cmd->add_option("--region-map", opt.region_map_path,
                  "state,region CSV (default: U.S. Census divisions)");
  cmd->add_option("--epsilon", opt.epsilon,
                  "Continuity correction for the log-ratio normalization")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--period", opt.period, "Seasonal differencing period")
      ->check(CLI::PositiveNumber);
}

void add_model_options(CLI::App* cmd, Options& opt) {
  cmd->add_option("--p", opt.p, "Response lag order")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--s", opt.s, "Exogenous lag order")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--no-center", opt.no_center,
                "Skip mean-centering of the stacked regression");
  cmd->add_flag("--standardize", opt.standardize,
                "Scale design columns to unit variance before penalizing");
  cmd->add_option("--tol", opt.tol, "Solver stopping tolerance")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", opt.max_iter, "Solver iteration cap")
      ->check(CLI::PositiveNumber);
}

void add_grid_options(CLI::App* cmd, Options& opt) {
  cmd->add_option("--grid-size", opt.grid_size, "Lambda grid size")
      ->check(CLI::Range(2, 1000));
  cmd->add_option("--grid-ratio", opt.grid_ratio,
                  "Smallest grid lambda as a fraction of lambda_max")
      ->check(CLI::Range(1e-12, 0.999999));
  cmd->add_flag("--refit-each-week", opt.refit_each_week,
                "Refit on the expanding window before every validation week");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse VAR-X forecasting of weekly regional claims"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags win");
  app.fallthrough();

  Options opt;
  app.add_option("--out", opt.out_dir, "Output directory");
  app.add_option("--seed", opt.seed, "RNG seed (synth; echoed elsewhere)");

  auto* synth = app.add_subcommand("synth", "Write a synthetic fixture bundle");
  synth->add_option("--k", opt.synth.k, "Response dimension");
  synth->add_option("--m", opt.synth.m, "Exogenous dimension");
  synth->add_option("--T", opt.synth.T, "Number of weeks");
  synth->add_option("--p", opt.synth.p, "True response lag order");
  synth->add_option("--s", opt.synth.s, "True exogenous lag order");
  synth->add_option("--sparsity", opt.synth.sparsity,
                    "Fraction of nonzero coefficients");
  synth->add_option("--spectral-radius", opt.synth.spectral_radius,
                    "Companion spectral radius");
  synth->add_option("--noise-std", opt.synth.noise_std, "Innovation std");
  synth->add_option("--epsilon", opt.epsilon, "Normalization epsilon");
  synth->add_option("--total", opt.synth_total, "Constant weekly search total");

  auto* evaluate = app.add_subcommand(
      "evaluate", "Run the full variant-comparison pipeline");
  add_data_options(evaluate, opt);
  add_model_options(evaluate, opt);
  add_grid_options(evaluate, opt);
  evaluate->add_option("--variants", opt.variants, "Subset of A,B,C,D");
  evaluate->add_option("--scale", opt.scale, "Report scale")
      ->check(CLI::IsMember({"diff", "level"}));

  auto* cv = app.add_subcommand("cv", "Cross-validate the penalty");
  add_data_options(cv, opt);
  add_model_options(cv, opt);
  add_grid_options(cv, opt);
  cv->add_option("--variant", opt.variant, "One of A,B,C,D")
      ->check(CLI::IsMember({"A", "B", "C", "D"}));

  auto* fit_cmd = app.add_subcommand("fit", "Fit a model and save it");
  add_data_options(fit_cmd, opt);
  add_model_options(fit_cmd, opt);
  add_grid_options(fit_cmd, opt);
  fit_cmd->add_option("--variant", opt.variant, "One of A,B,C,D")
      ->check(CLI::IsMember({"A", "B", "C", "D"}));
  fit_cmd->add_option("--lambda", opt.lambda_text,
                      "Penalty (default: select by cross-validation)");

  auto* forecast = app.add_subcommand("forecast", "Forecast h weeks ahead");
  add_data_options(forecast, opt);
  forecast->add_option("--model", opt.model_path, "Model file from `fit`")
      ->required();
  forecast->add_option("--horizon", opt.horizon, "Weeks ahead")
      ->check(CLI::PositiveNumber);
  forecast->add_option("--x-policy", opt.x_policy,
                       "Exogenous future policy for h >= 2")
      ->check(CLI::IsMember({"hold-last", "zeros"}));

  auto* sparsity = app.add_subcommand(
      "sparsity", "Export |coefficient| heatmap data from a model");
  sparsity->add_option("--model", opt.model_path, "Model file from `fit`")
      ->required();
  sparsity->add_option("--threshold", opt.threshold,
                       "Zero out magnitudes below this value")
      ->check(CLI::NonNegativeNumber);
  sparsity->add_flag("--svg", opt.svg, "Also render SVG heatmaps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // 2 = usage error
  }

  if (synth->parsed()) return cmd_synth(opt);
  if (evaluate->parsed()) return cmd_evaluate(opt);
  if (cv->parsed()) return cmd_cv(opt);
  if (fit_cmd->parsed()) return cmd_fit(opt);
  if (forecast->parsed()) return cmd_forecast(opt);
  if (sparsity->parsed()) return cmd_sparsity(opt);
  return 2;
}
