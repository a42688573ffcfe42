#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "svarx/errors.hpp"
#include "svarx/ingest.hpp"

using namespace svarx;

namespace {

MultivariateSeries series_of(std::vector<std::string> labels, IsoWeek start,
                             const Eigen::MatrixXd& values) {
  return MultivariateSeries(std::move(labels),
                            TimeIndex{start, static_cast<std::size_t>(values.cols())},
                            values);
}

}  // namespace

TEST_CASE("parse weekly csv happy path") {
  std::istringstream in(
      "week,series,value\n"
      "2014-W01,alpha,1.5\n"
      "2014-W02,alpha,2.5\n"
      "2014-W03,alpha,3.5\n"
      "2014-W01,beta,10\n"
      "2014-W02,beta,20\n"
      "2014-W03,beta,30\n");
  const auto series = parse_weekly_csv(in);
  CHECK(series.dim() == 2);
  CHECK(series.size() == 3);
  CHECK(series.labels()[0] == "alpha");
  CHECK(series.labels()[1] == "beta");
  CHECK(series.index().start == IsoWeek{2014, 1});
  CHECK(series.values()(0, 1) == 2.5);
  CHECK(series.values()(1, 2) == 30.0);
}

TEST_CASE("parse weekly csv accepts dates, comments and column reordering") {
  std::istringstream in(
      "# produced by a fixture\n"
      "series,week,value\n"
      "alpha,2016-04-09,4\n"
      "alpha,2016-04-16,5\n");
  const auto series = parse_weekly_csv(in);
  CHECK(series.size() == 2);
  CHECK(series.index().start == IsoWeek{2016, 14});
}

TEST_CASE("parse weekly csv error paths") {
  SUBCASE("missing week is a gap") {
    std::istringstream in(
        "week,series,value\n"
        "2014-W04,a,1\n"
        "2014-W05,a,1\n"
        "2014-W06,a,1\n"
        "2014-W04,b,1\n"
        "2014-W06,b,1\n");
    CHECK_THROWS_AS(parse_weekly_csv(in), GapError);
  }
  SUBCASE("duplicate (series, week)") {
    std::istringstream in(
        "week,series,value\n"
        "2014-W04,a,1\n"
        "2014-W04,a,2\n");
    CHECK_THROWS_AS(parse_weekly_csv(in), DuplicateError);
  }
  SUBCASE("malformed rows") {
    std::istringstream bad_value(
        "week,series,value\n"
        "2014-W04,a,oops\n");
    CHECK_THROWS_AS(parse_weekly_csv(bad_value), ParseError);
    std::istringstream bad_week(
        "week,series,value\n"
        "W04-2014,a,1\n");
    CHECK_THROWS_AS(parse_weekly_csv(bad_week), ParseError);
    std::istringstream short_row(
        "week,series,value\n"
        "2014-W04,a\n");
    CHECK_THROWS_AS(parse_weekly_csv(short_row), ParseError);
    std::istringstream empty("");
    CHECK_THROWS_AS(parse_weekly_csv(empty), ParseError);
  }
}

TEST_CASE("weekly csv round trip") {
  Eigen::MatrixXd values(2, 3);
  values << 0.1, -2.25, 3e-7, 4, 5.5, 6;
  const auto series = series_of({"q1", "q2"}, IsoWeek{2015, 52}, values);
  std::ostringstream out;
  write_weekly_csv(out, series, {"fixture"});
  std::istringstream in(out.str());
  const auto parsed = parse_weekly_csv(in);
  CHECK(parsed.labels() == series.labels());
  CHECK(parsed.index() == series.index());
  CHECK(parsed.values() == series.values());  // %.17g is lossless
}

TEST_CASE("region map") {
  const auto map = RegionMap::census_default();
  CHECK(map.mapping().size() == 51);  // 50 states + DC
  CHECK(map.region_of("California") == "Pacific");
  CHECK(map.region_of("New York") == "Mid-Atlantic");
  CHECK(map.region_of("District of Columbia") == "South Atlantic");
  CHECK_THROWS_AS(map.region_of("Puerto Rico"), UnknownState);
  CHECK(RegionMap::canonical_regions().size() == 9);
  CHECK(RegionMap::canonical_regions().front() == "Mid-Atlantic");
  CHECK(RegionMap::canonical_regions().back() == "South Atlantic");
}

TEST_CASE("region map from csv validates coverage") {
  SUBCASE("well formed") {
    std::istringstream in(
        "state,region\n"
        "S1,Mid-Atlantic\nS2,New England\nS3,East North Central\n"
        "S4,West North Central\nS5,West South Central\nS6,East South Central\n"
        "S7,Mountain\nS8,Pacific\nS9,South Atlantic\n");
    const auto map = RegionMap::from_csv(in);
    CHECK(map.region_of("S7") == "Mountain");
  }
  SUBCASE("misnamed region rejected") {
    std::istringstream in(
        "state,region\n"
        "S1,Middle Atlantic\nS2,New England\nS3,East North Central\n"
        "S4,West North Central\nS5,West South Central\nS6,East South Central\n"
        "S7,Mountain\nS8,Pacific\nS9,South Atlantic\n");
    CHECK_THROWS_AS(RegionMap::from_csv(in), InvalidSpec);
  }
  SUBCASE("missing region rejected") {
    std::istringstream in("state,region\nS1,Pacific\n");
    CHECK_THROWS_AS(RegionMap::from_csv(in), InvalidSpec);
  }
}

TEST_CASE("aggregate to regions") {
  const auto map = RegionMap::census_default();

  SUBCASE("member states sum") {
    Eigen::MatrixXd values(2, 2);
    values << 1, 2, 3, 4;
    const auto states = series_of({"California", "Oregon"}, IsoWeek{2014, 1}, values);
    const auto regions = aggregate_to_regions(states, map);
    CHECK(regions.dim() == 9);
    CHECK(regions.labels() == RegionMap::canonical_regions());
    const auto pacific = regions.row_of("Pacific");
    CHECK(regions.values()(static_cast<Eigen::Index>(pacific), 0) == 4.0);
    CHECK(regions.values()(static_cast<Eigen::Index>(pacific), 1) == 6.0);
  }
  SUBCASE("one state per region is an identity up to canonical order") {
    const std::vector<std::string> states = {
        "Texas", "California", "Maine",    "New York", "Ohio",
        "Iowa",  "Alabama",    "Colorado", "Florida"};
    Eigen::MatrixXd values(9, 1);
    values << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    const auto regions =
        aggregate_to_regions(series_of(states, IsoWeek{2014, 1}, values), map);
    const auto at = [&](const std::string& region) {
      return regions.values()(static_cast<Eigen::Index>(regions.row_of(region)),
                              0);
    };
    CHECK(at("West South Central") == 1.0);
    CHECK(at("Pacific") == 2.0);
    CHECK(at("New England") == 3.0);
    CHECK(at("Mid-Atlantic") == 4.0);
    CHECK(at("South Atlantic") == 9.0);
    CHECK(regions.values().col(0).sum() == 45.0);
  }
  SUBCASE("unknown state") {
    Eigen::MatrixXd values(1, 1);
    values << 1;
    const auto states = series_of({"Puerto Rico"}, IsoWeek{2014, 1}, values);
    CHECK_THROWS_AS(aggregate_to_regions(states, map), UnknownState);
  }
  SUBCASE("totals preserved") {
    Eigen::MatrixXd values = Eigen::MatrixXd::Random(3, 5).array() + 2.0;
    const auto states =
        series_of({"Texas", "Maine", "Ohio"}, IsoWeek{2014, 1}, values);
    const auto regions = aggregate_to_regions(states, map);
    for (Eigen::Index t = 0; t < 5; ++t) {
      CHECK(regions.values().col(t).sum() ==
            doctest::Approx(values.col(t).sum()).epsilon(1e-12));
    }
  }
}

TEST_CASE("build exogenous") {
  // one synthetic state per region, mapped by an identity region map
  std::map<std::string, std::string> identity;
  for (const auto& r : RegionMap::canonical_regions()) identity[r] = r;
  const RegionMap map(identity);
  const TimeIndex idx{IsoWeek{2014, 1}, 2};

  Eigen::MatrixXd q(9, 2), u(9, 2), tot(9, 2);
  for (Eigen::Index i = 0; i < 9; ++i) {
    q.row(i) << 1.0 + i, 2.0 + i;
    u.row(i) << 10.0 + i, 20.0 + i;
    tot.row(i) << 1000, 1000;
  }
  const MultivariateSeries queries(RegionMap::canonical_regions(), idx, q);
  const MultivariateSeries clicks(RegionMap::canonical_regions(), idx, u);
  const MultivariateSeries totals(RegionMap::canonical_regions(), idx, tot);

  SUBCASE("18 rows in documented order") {
    const auto x = build_exogenous(queries, clicks, totals, map, 0.5);
    REQUIRE(x.dim() == 18);
    CHECK(x.labels()[0] == "Mid-Atlantic-query");
    CHECK(x.labels()[8] == "South Atlantic-query");
    CHECK(x.labels()[9] == "Mid-Atlantic-url");
    CHECK(x.labels()[17] == "South Atlantic-url");
    CHECK(x.values()(0, 0) ==
          doctest::Approx(std::log(1.5 / 1000.0)).epsilon(1e-12));
    CHECK(x.values()(9, 0) ==
          doctest::Approx(std::log(10.5 / 1000.0)).epsilon(1e-12));
  }
  SUBCASE("total = e * count makes query rows -1") {
    Eigen::MatrixXd q1 = Eigen::MatrixXd::Constant(9, 2, 7.0);
    Eigen::MatrixXd te = Eigen::MatrixXd::Constant(9, 2, 7.0 * std::exp(1.0));
    const MultivariateSeries queries1(RegionMap::canonical_regions(), idx, q1);
    const MultivariateSeries totals_e(RegionMap::canonical_regions(), idx, te);
    const auto x = build_exogenous(queries1, clicks, totals_e, map, 1e-12);
    for (Eigen::Index i = 0; i < 9; ++i) {
      CHECK(x.values()(i, 0) == doctest::Approx(-1.0).epsilon(1e-9));
      CHECK(x.values()(i, 1) == doctest::Approx(-1.0).epsilon(1e-9));
    }
  }
  SUBCASE("misaligned clicks rejected") {
    const MultivariateSeries clicks_off(RegionMap::canonical_regions(),
                                        TimeIndex{IsoWeek{2014, 2}, 2}, u);
    CHECK_THROWS_AS(build_exogenous(queries, clicks_off, totals, map, 0.5),
                    IndexMismatch);
  }
  SUBCASE("region averaging") {
    // two states in Pacific with different values; the query row is a mean
    std::map<std::string, std::string> two = identity;
    two["Washington"] = "Pacific";
    const RegionMap map2(two);
    std::vector<std::string> labels = RegionMap::canonical_regions();
    labels.push_back("Washington");
    Eigen::MatrixXd q2(10, 2);
    q2 << q, Eigen::RowVector2d(100.0, 200.0);
    Eigen::MatrixXd u2(10, 2);
    u2 << u, Eigen::RowVector2d(0.0, 0.0);
    const MultivariateSeries queries2(labels, idx, q2);
    const MultivariateSeries clicks2(labels, idx, u2);
    const auto x = build_exogenous(queries2, clicks2, totals, map2, 0.5);
    const auto pacific = 7;  // canonical order position
    const double mean_count = (q(pacific, 0) + 100.0) / 2.0;
    CHECK(x.values()(pacific, 0) ==
          doctest::Approx(std::log((mean_count + 0.5) / 1000.0)).epsilon(1e-12));
  }
}
