#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "dpl/error.hpp"
#include "dpl/metrics.hpp"
#include "dpl/rng.hpp"

namespace {

dpl::IntegrityRecord rec(double pl, double err) {
  dpl::IntegrityRecord r;
  r.pl = {pl, pl, pl};
  r.true_error = dpl::Vec3(err, -err, err);
  return r;
}

std::vector<dpl::IntegrityRecord> random_records(dpl::Rng& rng, std::size_t n) {
  std::vector<dpl::IntegrityRecord> out;
  for (std::size_t k = 0; k < n; ++k) {
    dpl::IntegrityRecord r;
    r.timestamp = 0.1 * static_cast<double>(k);
    r.pl = {rng.uniform(0, 2.5), rng.uniform(0, 3.5), rng.uniform(0, 3.2)};
    r.true_error = dpl::Vec3(rng.normal(0, 0.6), rng.normal(0, 1.0), rng.normal(0, 1.0));
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("bound gap") {
  const dpl::AlarmLimits al{2.0, 2.0, 2.0};
  // PL 1.0 |e| 0.4 and PL 1.5 |e| 0.9 are nominal; the rest are not.
  const std::vector<dpl::IntegrityRecord> r = {rec(1.0, 0.4), rec(1.5, 0.9), rec(0.3, 0.5), rec(2.5, 0.1)};
  const auto bg = dpl::bound_gap(r, al);
  for (const auto& g : bg) {
    REQUIRE(g.has_value());
    CHECK(*g == doctest::Approx(0.6));
  }
  const std::vector<dpl::IntegrityRecord> none = {rec(0.3, 0.5)};
  CHECK_FALSE(dpl::bound_gap(none, al)[0].has_value());
  const auto report = dpl::evaluate_integrity(none, al);
  CHECK(report.directions[1].bound_gap == std::nullopt);
  CHECK(dpl::report_to_json(report, al).find("\"no_nominal_records\": true") != std::string::npos);
}

TEST_CASE("failure rate") {
  std::vector<dpl::IntegrityRecord> r;
  for (int k = 0; k < 10; ++k) r.push_back(rec(1.0, k == 3 ? 1.2 : 0.5));
  for (double fr : dpl::failure_rate(r)) CHECK(fr == doctest::Approx(0.1));
  // Equality is not a failure.
  CHECK(dpl::failure_rate(std::vector{rec(1.0, 1.0)})[0] == 0.0);
  for (auto& x : r) x.pl = {0.0, 0.0, 0.0};
  for (double fr : dpl::failure_rate(r)) CHECK(fr == 1.0);
  CHECK(dpl::failure_rate(std::vector<dpl::IntegrityRecord>{})[2] == 0.0);
}

TEST_CASE("false alarm rate") {
  bool zero = true;
  CHECK(dpl::false_alarm_rate(1, 1, 1, 2, &zero) == doctest::Approx(0.5));
  CHECK_FALSE(zero);
  CHECK(dpl::false_alarm_rate(5, 0, 0, 10, &zero) == 1.0);
  CHECK(dpl::false_alarm_rate(0, 0, 0, 10, &zero) == 0.0);
  CHECK(zero);
  CHECK(dpl::false_alarm_rate(0, 3, 3, 10, &zero) == 0.0);
  CHECK_FALSE(zero);

  // Records: one false alarm, one true alarm, AL 1.
  const dpl::AlarmLimits al{1.0, 1.0, 1.0};
  const std::vector<dpl::IntegrityRecord> r = {rec(1.5, 0.2), rec(2.5, 1.2)};
  for (double far : dpl::false_alarm_rate(r, al)) CHECK(far == doctest::Approx(0.5));
  const auto report = dpl::evaluate_integrity(r, al);
  CHECK(report.directions[0].counts.false_alarms == 1);
  CHECK(report.directions[0].counts.true_alarms == 1);
  CHECK(report.directions[0].counts.exceedances == 1);
  const std::vector<dpl::IntegrityRecord> quiet = {rec(0.5, 0.2)};
  CHECK(dpl::evaluate_integrity(quiet, al).directions[2].far_denominator_zero);
}

TEST_CASE("region classification") {
  const double al = 1.0;
  CHECK(dpl::classify(0.8, 0.5, al) == dpl::IntegrityRegion::Nominal);
  CHECK(dpl::classify(1.0, 1.0, al) == dpl::IntegrityRegion::Nominal);
  CHECK(dpl::classify(0.3, 0.5, al) == dpl::IntegrityRegion::MisleadingInformation);
  CHECK(dpl::classify(0.3, 1.5, al) == dpl::IntegrityRegion::HazardousMisleading);
  CHECK(dpl::classify(1.5, 0.5, al) == dpl::IntegrityRegion::Unavailable);
  CHECK(dpl::classify(1.5, 2.5, al) == dpl::IntegrityRegion::UnavailableMisleading);
}

TEST_CASE("integrity diagram") {
  dpl::Rng rng(31);
  const dpl::AlarmLimits al;
  auto records = random_records(rng, 500);
  const auto diagram = dpl::integrity_diagram(records, al, 10);
  for (int d = 0; d < 3; ++d) {
    const auto& dir = diagram.directions[d];
    CHECK(dir.edges.size() == 11);
    CHECK(dir.edges.back() == doctest::Approx(2.0 * al[d]));
    std::size_t cells = 0;
    for (const auto& row : dir.counts) cells += std::accumulate(row.begin(), row.end(), std::size_t{0});
    CHECK(cells == records.size());
    CHECK(std::accumulate(dir.region_tally.begin(), dir.region_tally.end(), std::size_t{0}) == records.size());
    const auto counts = dpl::count_direction(records, al, d);
    CHECK(dir.region_tally[0] == counts.nominal);
    CHECK(dir.region_tally[3] + dir.region_tally[4] == counts.false_alarms + counts.true_alarms);
    CHECK(dir.region_tally[1] + dir.region_tally[2] + dir.region_tally[4] == counts.failures);
  }

  std::vector<dpl::IntegrityRecord> shuffled(records.rbegin(), records.rend());
  std::swap(shuffled[3], shuffled[200]);
  CHECK(dpl::diagram_to_json(dpl::integrity_diagram(shuffled, al, 10)) == dpl::diagram_to_json(diagram));
  CHECK(dpl::report_to_json(dpl::evaluate_integrity(shuffled, al), al) ==
        dpl::report_to_json(dpl::evaluate_integrity(records, al), al));

  const std::vector<dpl::IntegrityRecord> edge = {rec(2 * 0.85, 0.0)};
  const auto e = dpl::integrity_diagram(edge, dpl::AlarmLimits{0.85, 0.85, 0.85}, 4);
  CHECK(e.directions[0].counts[0][4] == 1);
  CHECK_THROWS_AS(dpl::integrity_diagram(records, al, 1), dpl::Error);
}

TEST_CASE("records CSV") {
  dpl::Rng rng(32);
  const auto records = random_records(rng, 50);
  std::stringstream s;
  dpl::write_records_csv(s, records);
  const auto back = dpl::read_records_csv(s);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].timestamp == records[i].timestamp);
    CHECK(back[i].pl.vertical == records[i].pl.vertical);
    CHECK(back[i].true_error == records[i].true_error);
  }
  std::stringstream bad_header("t,pl\n");
  CHECK_THROWS_AS(dpl::read_records_csv(bad_header), dpl::Error);
  std::stringstream short_row("t,pl_lat,pl_lon,pl_vert,err_x,err_y,err_z\n0,1,1,1,0,0\n");
  try {
    dpl::read_records_csv(short_row);
    FAIL("expected ParseError");
  } catch (const dpl::Error& e) {
    CHECK(e.code() == dpl::ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::stringstream negative("t,pl_lat,pl_lon,pl_vert,err_x,err_y,err_z\n0,-1,1,1,0,0,0\n");
  CHECK_THROWS_AS(dpl::read_records_csv(negative), dpl::Error);
}
