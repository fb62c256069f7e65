#include "dpl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "dpl/error.hpp"

namespace dpl {

void AlarmLimits::validate() const {
  if (!(lateral > 0.0 && longitudinal > 0.0 && vertical > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "alarm limits must be positive");
  }
}

DirectionCounts& DirectionCounts::operator+=(const DirectionCounts& other) {
  records += other.records;
  failures += other.failures;
  false_alarms += other.false_alarms;
  true_alarms += other.true_alarms;
  exceedances += other.exceedances;
  nominal += other.nominal;
  nominal_gap_sum += other.nominal_gap_sum;
  return *this;
}

DirectionCounts count_direction(std::span<const IntegrityRecord> records, const AlarmLimits& limits, int dim) {
  const double al = limits[dim];
  DirectionCounts c;
  std::vector<double> gaps;
  for (const auto& r : records) {
    const double pl = r.pl[dim];
    const double err = std::abs(r.true_error(dim));
    const bool failure = pl < err;
    const bool alarm = pl > al;
    const bool exceed = err > al;
    ++c.records;
    c.failures += failure;
    c.exceedances += exceed;
    c.false_alarms += alarm && !exceed;
    c.true_alarms += alarm && exceed;
    if (!failure && !alarm) {
      ++c.nominal;
      gaps.push_back(pl - err);
    }
  }
  // Sorted summation keeps the result independent of record order.
  std::sort(gaps.begin(), gaps.end());
  for (double g : gaps) c.nominal_gap_sum += g;
  return c;
}

std::array<std::optional<double>, 3> bound_gap(std::span<const IntegrityRecord> records,
                                               const AlarmLimits& limits) {
  std::array<std::optional<double>, 3> out;
  for (int d = 0; d < 3; ++d) {
    const auto c = count_direction(records, limits, d);
    if (c.nominal > 0) out[d] = c.nominal_gap_sum / static_cast<double>(c.nominal);
  }
  return out;
}

std::array<double, 3> failure_rate(std::span<const IntegrityRecord> records) {
  std::array<double, 3> out{};
  if (records.empty()) return out;
  for (int d = 0; d < 3; ++d) {
    std::size_t failures = 0;
    for (const auto& r : records) failures += r.pl[d] < std::abs(r.true_error(d));
    out[d] = static_cast<double>(failures) / static_cast<double>(records.size());
  }
  return out;
}

double false_alarm_rate(std::size_t n_fa, std::size_t n_ta, std::size_t n_pe, std::size_t t_max,
                        bool* denominator_zero) {
  const double num = static_cast<double>(n_fa) * static_cast<double>(t_max - n_pe);
  const double den = num + static_cast<double>(n_ta) * static_cast<double>(n_pe);
  if (denominator_zero) *denominator_zero = den == 0.0;
  if (num == 0.0 || den == 0.0) return 0.0;
  return num / den;
}

std::array<double, 3> false_alarm_rate(std::span<const IntegrityRecord> records, const AlarmLimits& limits) {
  std::array<double, 3> out{};
  for (int d = 0; d < 3; ++d) {
    const auto c = count_direction(records, limits, d);
    out[d] = false_alarm_rate(c.false_alarms, c.true_alarms, c.exceedances, c.records);
  }
  return out;
}

IntegrityReport evaluate_integrity(std::span<const IntegrityRecord> records, const AlarmLimits& limits) {
  limits.validate();
  IntegrityReport report;
  report.record_count = records.size();
  for (int d = 0; d < 3; ++d) {
    auto& dir = report.directions[d];
    dir.counts = count_direction(records, limits, d);
    if (dir.counts.nominal > 0) {
      dir.bound_gap = dir.counts.nominal_gap_sum / static_cast<double>(dir.counts.nominal);
    }
    dir.failure_rate = records.empty() ? 0.0
                                       : static_cast<double>(dir.counts.failures) /
                                             static_cast<double>(records.size());
    dir.false_alarm_rate = false_alarm_rate(dir.counts.false_alarms, dir.counts.true_alarms,
                                            dir.counts.exceedances, dir.counts.records,
                                            &dir.far_denominator_zero);
  }
  return report;
}

const char* to_string(IntegrityRegion region) {
  switch (region) {
    case IntegrityRegion::Nominal: return "nominal";
    case IntegrityRegion::MisleadingInformation: return "misleading_information";
    case IntegrityRegion::HazardousMisleading: return "hazardously_misleading_information";
    case IntegrityRegion::Unavailable: return "system_unavailable";
    case IntegrityRegion::UnavailableMisleading: return "system_unavailable_misleading";
  }
  return "unknown";
}

IntegrityRegion classify(double pl, double abs_error, double alarm_limit) {
  const bool failure = pl < abs_error;
  const bool alarm = pl > alarm_limit;
  if (alarm) return failure ? IntegrityRegion::UnavailableMisleading : IntegrityRegion::Unavailable;
  if (!failure) return IntegrityRegion::Nominal;
  return abs_error > alarm_limit ? IntegrityRegion::HazardousMisleading : IntegrityRegion::MisleadingInformation;
}

IntegrityDiagram integrity_diagram(std::span<const IntegrityRecord> records, const AlarmLimits& limits,
                                   std::size_t bins) {
  if (bins < 2) throw Error(ErrorCode::InvalidArgument, "diagram needs at least 2 bins");
  limits.validate();
  IntegrityDiagram diagram;
  diagram.bins = bins;
  for (int d = 0; d < 3; ++d) {
    auto& dir = diagram.directions[d];
    dir.alarm_limit = limits[d];
    const double top = 2.0 * limits[d];
    const double width = top / static_cast<double>(bins);
    for (std::size_t k = 0; k <= bins; ++k) dir.edges.push_back(width * static_cast<double>(k));
    dir.counts.assign(bins + 1, std::vector<std::size_t>(bins + 1, 0));
    auto bin_of = [&](double v) {
      if (!(v < top)) return bins;
      return std::min(bins - 1, static_cast<std::size_t>(v / width));
    };
    for (const auto& r : records) {
      const double err = std::abs(r.true_error(d));
      const double pl = r.pl[d];
      ++dir.counts[bin_of(err)][bin_of(pl)];
      ++dir.region_tally[static_cast<std::size_t>(classify(pl, err, limits[d]))];
    }
  }
  return diagram;
}

std::vector<IntegrityRecord> read_records_csv(std::istream& in) {
  std::vector<IntegrityRecord> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (!header_seen) {
      header_seen = true;
      if (line != "t,pl_lat,pl_lon,pl_vert,err_x,err_y,err_z") {
        throw Error(ErrorCode::ParseError, "records line 1: unexpected header '" + line + "'");
      }
      continue;
    }
    std::istringstream fields(line);
    std::string cell;
    std::array<double, 7> v{};
    std::size_t k = 0;
    while (std::getline(fields, cell, ',')) {
      if (k >= v.size()) throw Error(ErrorCode::ParseError, "records line " + std::to_string(line_no) + ": too many fields");
      try {
        std::size_t used = 0;
        v[k] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "records line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
      ++k;
    }
    if (k != v.size()) throw Error(ErrorCode::ParseError, "records line " + std::to_string(line_no) + ": expected 7 fields");
    IntegrityRecord r;
    r.timestamp = v[0];
    r.pl = {v[1], v[2], v[3]};
    r.true_error = Vec3(v[4], v[5], v[6]);
    if (r.pl.lateral < 0.0 || r.pl.longitudinal < 0.0 || r.pl.vertical < 0.0) {
      throw Error(ErrorCode::ParseError, "records line " + std::to_string(line_no) + ": negative protection level");
    }
    out.push_back(r);
  }
  return out;
}

void write_records_csv(std::ostream& out, std::span<const IntegrityRecord> records) {
  out << "t,pl_lat,pl_lon,pl_vert,err_x,err_y,err_z\n" << std::setprecision(17);
  for (const auto& r : records) {
    out << r.timestamp << ',' << r.pl.lateral << ',' << r.pl.longitudinal << ',' << r.pl.vertical << ','
        << r.true_error.x() << ',' << r.true_error.y() << ',' << r.true_error.z() << '\n';
  }
}

std::string report_to_json(const IntegrityReport& report, const AlarmLimits& limits) {
  nlohmann::json j;
  j["record_count"] = report.record_count;
  for (int d = 0; d < 3; ++d) {
    const auto& dir = report.directions[d];
    nlohmann::json jd;
    jd["alarm_limit"] = limits[d];
    if (dir.bound_gap) {
      jd["bound_gap"] = *dir.bound_gap;
    } else {
      jd["bound_gap"] = nullptr;
    }
    jd["no_nominal_records"] = !dir.bound_gap.has_value();
    jd["failure_rate"] = dir.failure_rate;
    jd["false_alarm_rate"] = dir.false_alarm_rate;
    jd["far_denominator_zero"] = dir.far_denominator_zero;
    jd["n_false_alarm"] = dir.counts.false_alarms;
    jd["n_true_alarm"] = dir.counts.true_alarms;
    jd["n_position_exceeds_al"] = dir.counts.exceedances;
    jd["n_failures"] = dir.counts.failures;
    jd["n_nominal"] = dir.counts.nominal;
    j["directions"][kDirectionNames[d]] = jd;
  }
  return j.dump(2) + "\n";
}

std::string diagram_to_json(const IntegrityDiagram& diagram) {
  nlohmann::json j;
  j["bins"] = diagram.bins;
  j["axes"] = {{"row", "abs_error_bin"}, {"column", "protection_level_bin"},
               {"overflow", "last bin collects values >= 2 * alarm_limit"}};
  j["regions"] = {
      {"nominal", "abs_error <= PL <= AL"},
      {"misleading_information", "PL < abs_error <= AL"},
      {"hazardously_misleading_information", "PL <= AL < abs_error and PL < abs_error"},
      {"system_unavailable", "PL > AL and abs_error <= PL"},
      {"system_unavailable_misleading", "PL > AL and PL < abs_error"},
  };
  for (int d = 0; d < 3; ++d) {
    const auto& dir = diagram.directions[d];
    nlohmann::json jd;
    jd["alarm_limit"] = dir.alarm_limit;
    jd["edges"] = dir.edges;
    jd["counts"] = dir.counts;
    nlohmann::json tally;
    for (std::size_t k = 0; k < kRegionCount; ++k) {
      tally[to_string(static_cast<IntegrityRegion>(k))] = dir.region_tally[k];
    }
    jd["region_tally"] = tally;
    j["directions"][kDirectionNames[d]] = jd;
  }
  return j.dump(2) + "\n";
}

}  // namespace dpl
