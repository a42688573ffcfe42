#include "svarx/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "svarx/errors.hpp"

namespace svarx {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, e - b + 1);
}

}  // namespace

RegionMap::RegionMap(std::map<std::string, std::string> mapping)
    : mapping_(std::move(mapping)) {
  std::set<std::string> regions;
  for (const auto& [state, region] : mapping_) regions.insert(region);
  const auto& canonical = canonical_regions();
  if (regions.size() != canonical.size() ||
      !std::all_of(regions.begin(), regions.end(), [&](const auto& r) {
        return std::find(canonical.begin(), canonical.end(), r) !=
               canonical.end();
      })) {
    throw InvalidSpec(
        "region map must target exactly the nine census regions");
  }
}

const std::vector<std::string>& RegionMap::canonical_regions() {
  static const std::vector<std::string> regions = {
      "Mid-Atlantic",       "New England",        "East North Central",
      "West North Central", "West South Central", "East South Central",
      "Mountain",           "Pacific",            "South Atlantic"};
  return regions;
}

RegionMap RegionMap::census_default() {
  static const std::map<std::string, std::string> assignment = {
      {"Connecticut", "New England"},
      {"Maine", "New England"},
      {"Massachusetts", "New England"},
      {"New Hampshire", "New England"},
      {"Rhode Island", "New England"},
      {"Vermont", "New England"},
      {"New Jersey", "Mid-Atlantic"},
      {"New York", "Mid-Atlantic"},
      {"Pennsylvania", "Mid-Atlantic"},
      {"Illinois", "East North Central"},
      {"Indiana", "East North Central"},
      {"Michigan", "East North Central"},
      {"Ohio", "East North Central"},
      {"Wisconsin", "East North Central"},
      {"Iowa", "West North Central"},
      {"Kansas", "West North Central"},
      {"Minnesota", "West North Central"},
      {"Missouri", "West North Central"},
      {"Nebraska", "West North Central"},
      {"North Dakota", "West North Central"},
      {"South Dakota", "West North Central"},
      {"Delaware", "South Atlantic"},
      {"District of Columbia", "South Atlantic"},
      {"Florida", "South Atlantic"},
      {"Georgia", "South Atlantic"},
      {"Maryland", "South Atlantic"},
      {"North Carolina", "South Atlantic"},
      {"South Carolina", "South Atlantic"},
      {"Virginia", "South Atlantic"},
      {"West Virginia", "South Atlantic"},
      {"Alabama", "East South Central"},
      {"Kentucky", "East South Central"},
      {"Mississippi", "East South Central"},
      {"Tennessee", "East South Central"},
      {"Arkansas", "West South Central"},
      {"Louisiana", "West South Central"},
      {"Oklahoma", "West South Central"},
      {"Texas", "West South Central"},
      {"Arizona", "Mountain"},
      {"Colorado", "Mountain"},
      {"Idaho", "Mountain"},
      {"Montana", "Mountain"},
      {"Nevada", "Mountain"},
      {"New Mexico", "Mountain"},
      {"Utah", "Mountain"},
      {"Wyoming", "Mountain"},
      {"Alaska", "Pacific"},
      {"California", "Pacific"},
      {"Hawaii", "Pacific"},
      {"Oregon", "Pacific"},
      {"Washington", "Pacific"},
  };
  return RegionMap(assignment);
}

RegionMap RegionMap::from_csv(std::istream& in) {
  std::map<std::string, std::string> mapping;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto s = strip(line);
    if (s.empty() || s[0] == '#') continue;
    auto fields = split_csv_line(s);
    if (fields.size() != 2) {
      throw ParseError("region map line " + std::to_string(line_no) +
                       ": expected 2 fields");
    }
    if (!header_seen) {
      header_seen = true;
      if (strip(fields[0]) == "state") continue;  // header row
    }
    const auto state = strip(fields[0]);
    const auto region = strip(fields[1]);
    if (!mapping.emplace(state, region).second) {
      throw DuplicateError("state '" + state + "' mapped twice");
    }
  }
  return RegionMap(std::move(mapping));
}

const std::string& RegionMap::region_of(const std::string& state) const {
  const auto it = mapping_.find(state);
  if (it == mapping_.end()) {
    throw UnknownState("state '" + state + "' is not in the region map");
  }
  return it->second;
}

bool RegionMap::contains(const std::string& state) const {
  return mapping_.count(state) != 0;
}

MultivariateSeries parse_weekly_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;

  // header
  std::size_t col_week = 0, col_series = 1, col_value = 2;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto s = strip(line);
    if (s.empty() || s[0] == '#') continue;
    auto fields = split_csv_line(s);
    if (fields.size() != 3) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 3 columns in header");
    }
    bool found_week = false, found_series = false, found_value = false;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto name = strip(fields[i]);
      if (name == "week") { col_week = i; found_week = true; }
      else if (name == "series") { col_series = i; found_series = true; }
      else if (name == "value") { col_value = i; found_value = true; }
    }
    if (!found_week || !found_series || !found_value) {
      throw ParseError("header must name columns week,series,value");
    }
    have_header = true;
    break;
  }
  if (!have_header) throw ParseError("empty CSV: no header row");

  // label -> (week serial -> value); labels kept in first-appearance order
  std::vector<std::string> labels;
  std::unordered_map<std::string, std::map<std::int64_t, double>> data;
  std::int64_t min_serial = 0, max_serial = 0;
  bool any_row = false;

  while (std::getline(in, line)) {
    ++line_no;
    const auto s = strip(line);
    if (s.empty() || s[0] == '#') continue;
    auto fields = split_csv_line(s);
    if (fields.size() != 3) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 3 fields, got " +
                       std::to_string(fields.size()));
    }
    IsoWeek week;
    try {
      week = IsoWeek::parse(strip(fields[col_week]));
    } catch (const Error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto label = strip(fields[col_series]);
    if (label.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty series id");
    }
    double value = 0;
    try {
      std::size_t consumed = 0;
      value = std::stod(strip(fields[col_value]), &consumed);
      if (consumed != strip(fields[col_value]).size()) {
        throw std::invalid_argument("trailing characters");
      }
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": bad value '" + strip(fields[col_value]) + "'");
    }
    if (!std::isfinite(value)) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": non-finite value");
    }
    auto [it, inserted] = data.try_emplace(label);
    if (inserted) labels.push_back(label);
    const auto serial = week.monday_serial();
    if (!it->second.emplace(serial, value).second) {
      throw DuplicateError("duplicate entry for series '" + label +
                           "' week " + week.str());
    }
    if (!any_row || serial < min_serial) min_serial = serial;
    if (!any_row || serial > max_serial) max_serial = serial;
    any_row = true;
  }
  if (!any_row) throw ParseError("CSV contains no data rows");

  const auto n_weeks = static_cast<std::size_t>((max_serial - min_serial) / 7) + 1;
  Eigen::MatrixXd values(labels.size(), n_weeks);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto& per_week = data[labels[r]];
    for (std::size_t t = 0; t < n_weeks; ++t) {
      const auto serial = min_serial + 7 * static_cast<std::int64_t>(t);
      const auto it = per_week.find(serial);
      if (it == per_week.end()) {
        throw GapError("series '" + labels[r] + "' is missing week " +
                       IsoWeek::from_monday_serial(serial).str());
      }
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) =
          it->second;
    }
  }
  const TimeIndex index{IsoWeek::from_monday_serial(min_serial), n_weeks};
  return MultivariateSeries(std::move(labels), index, std::move(values));
}

void write_weekly_csv(std::ostream& out, const MultivariateSeries& series,
                      const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "week,series,value\n";
  char buf[64];
  for (std::size_t r = 0; r < series.dim(); ++r) {
    for (std::size_t t = 0; t < series.size(); ++t) {
      std::snprintf(buf, sizeof(buf), "%.17g",
                    series.values()(static_cast<Eigen::Index>(r),
                                    static_cast<Eigen::Index>(t)));
      out << series.index().week_at(t).str() << ',' << series.labels()[r]
          << ',' << buf << '\n';
    }
  }
}

MultivariateSeries aggregate_to_regions(const MultivariateSeries& states,
                                        const RegionMap& map) {
  const auto& regions = RegionMap::canonical_regions();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(regions.size()),
      static_cast<Eigen::Index>(states.size()));
  for (std::size_t r = 0; r < states.dim(); ++r) {
    const auto& region = map.region_of(states.labels()[r]);
    const auto pos = std::find(regions.begin(), regions.end(), region) -
                     regions.begin();
    out.row(pos) += states.values().row(static_cast<Eigen::Index>(r));
  }
  return MultivariateSeries(regions, states.index(), std::move(out));
}

MultivariateSeries build_exogenous(const MultivariateSeries& query_volumes,
                                   const MultivariateSeries& url_clicks,
                                   const MultivariateSeries& search_totals,
                                   const RegionMap& map, double epsilon) {
  if (epsilon <= 0) throw InvalidArgument("epsilon must be > 0");
  if (query_volumes.index() != url_clicks.index() ||
      query_volumes.index() != search_totals.index()) {
    throw IndexMismatch("exogenous inputs cover different weeks");
  }
  const auto& regions = RegionMap::canonical_regions();
  if (search_totals.dim() != regions.size()) {
    throw ShapeMismatch("expected one totals series per region");
  }
  if ((search_totals.values().array() <= 0.0).any()) {
    throw NonPositiveTotal("per-region totals must be strictly positive");
  }
  if ((query_volumes.values().array() < 0.0).any() ||
      (url_clicks.values().array() < 0.0).any()) {
    throw InvalidArgument("counts must be nonnegative");
  }

  const auto T = static_cast<Eigen::Index>(query_volumes.size());
  const auto region_pos = [&](const std::string& name) {
    return static_cast<Eigen::Index>(
        std::find(regions.begin(), regions.end(), name) - regions.begin());
  };

  // Mean of member state rows per region.
  const auto region_means = [&](const MultivariateSeries& s) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(9, T);
    Eigen::VectorXd members = Eigen::VectorXd::Zero(9);
    for (std::size_t r = 0; r < s.dim(); ++r) {
      const auto pos = region_pos(map.region_of(s.labels()[r]));
      sums.row(pos) += s.values().row(static_cast<Eigen::Index>(r));
      members(pos) += 1.0;
    }
    for (Eigen::Index i = 0; i < 9; ++i) {
      if (members(i) == 0.0) {
        throw InvalidArgument("region '" + regions[static_cast<std::size_t>(i)] +
                              "' has no member series");
      }
      sums.row(i) /= members(i);
    }
    return sums;
  };

  const Eigen::MatrixXd query_mean = region_means(query_volumes);
  const Eigen::MatrixXd url_mean = region_means(url_clicks);

  Eigen::MatrixXd out(18, T);
  std::vector<std::string> labels(18);
  for (std::size_t i = 0; i < 9; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Eigen::ArrayXd totals =
        search_totals.values().row(
            static_cast<Eigen::Index>(search_totals.row_of(regions[i]))).array();
    out.row(row) = ((query_mean.row(row).array() + epsilon) /
                    totals.transpose()).log().matrix();
    out.row(row + 9) = ((url_mean.row(row).array() + epsilon) /
                        totals.transpose()).log().matrix();
    labels[i] = regions[i] + "-query";
    labels[i + 9] = regions[i] + "-url";
  }
  return MultivariateSeries(std::move(labels), query_volumes.index(),
                            std::move(out));
}

}  // namespace svarx
