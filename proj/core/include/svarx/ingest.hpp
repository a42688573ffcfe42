#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "svarx/series.hpp"

namespace svarx {

/// State -> census region assignment. Exactly nine regions, named as in the
/// canonical order returned by canonical_regions().
class RegionMap {
 public:
  explicit RegionMap(std::map<std::string, std::string> mapping);

  /// The standard U.S. Census state -> division assignment (50 states + DC).
  static RegionMap census_default();

  /// Two-column CSV `state,region`, with a header row.
  static RegionMap from_csv(std::istream& in);

  const std::string& region_of(const std::string& state) const;
  bool contains(const std::string& state) const;
  const std::map<std::string, std::string>& mapping() const { return mapping_; }

  /// Fixed report order: Mid-Atlantic, New England, East North Central,
  /// West North Central, West South Central, East South Central, Mountain,
  /// Pacific, South Atlantic.
  static const std::vector<std::string>& canonical_regions();

 private:
  std::map<std::string, std::string> mapping_;
};

/// Long-format weekly CSV with header `week,series,value`. Weeks are ISO
/// "yyyy-Www" or a civil date of any day in the week (claims exports use the
/// week-ending Saturday). Lines starting with '#' are skipped. Every series
/// must cover every week of the file's overall range.
MultivariateSeries parse_weekly_csv(std::istream& in);

/// Inverse of parse_weekly_csv. `comment` lines, when given, are emitted
/// verbatim prefixed with "# ".
void write_weekly_csv(std::ostream& out, const MultivariateSeries& series,
                      const std::vector<std::string>& comments = {});

/// Sum state rows into the nine census regions, canonical order.
MultivariateSeries aggregate_to_regions(const MultivariateSeries& states,
                                        const RegionMap& map);

/// Build the 18 regional exogenous series: for each region, the mean of its
/// member query series and the mean of its member URL click series, each
/// log-ratio normalized by that region's weekly totals. Row order is
/// [region1-query .. region9-query, region1-url .. region9-url] with regions
/// in canonical order; labels carry "-query" / "-url" suffixes.
MultivariateSeries build_exogenous(const MultivariateSeries& query_volumes,
                                   const MultivariateSeries& url_clicks,
                                   const MultivariateSeries& search_totals,
                                   const RegionMap& map, double epsilon);

}  // namespace svarx
