#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpl/geometry.hpp"
#include "dpl/gmm.hpp"

namespace dpl {

struct IntegrityRecord {
  double timestamp = 0.0;
  ProtectionLevels pl;
  Vec3 true_error = Vec3::Zero();  // lateral, longitudinal, vertical
};

struct AlarmLimits {
  double lateral = 0.85;
  double longitudinal = 1.50;
  double vertical = 1.47;

  double operator[](int dim) const { return dim == 0 ? lateral : dim == 1 ? longitudinal : vertical; }
  void validate() const;
};

inline constexpr std::array<const char*, 3> kDirectionNames = {"lateral", "longitudinal", "vertical"};

// Per-direction classification with the strict inequalities
// failure: PL < |e|, alarm: PL > AL, position-error exceedance: |e| > AL.
struct DirectionCounts {
  std::size_t records = 0;
  std::size_t failures = 0;       // PL < |e|
  std::size_t false_alarms = 0;   // N_FA: PL > AL, |e| <= AL
  std::size_t true_alarms = 0;    // N_TA: PL > AL, |e| > AL
  std::size_t exceedances = 0;    // N_PE: |e| > AL
  std::size_t nominal = 0;        // |e| <= PL <= AL
  double nominal_gap_sum = 0.0;   // sum of PL - |e| over nominal records

  DirectionCounts& operator+=(const DirectionCounts& other);
};

DirectionCounts count_direction(std::span<const IntegrityRecord> records, const AlarmLimits& limits, int dim);

struct DirectionReport {
  std::optional<double> bound_gap;  // empty: NoNominalRecords
  double failure_rate = 0.0;
  double false_alarm_rate = 0.0;
  bool far_denominator_zero = false;
  DirectionCounts counts;
};

struct IntegrityReport {
  std::size_t record_count = 0;
  std::array<DirectionReport, 3> directions;
};

// Mean PL - |e| over nominal records; nullopt when none qualify.
std::array<std::optional<double>, 3> bound_gap(std::span<const IntegrityRecord> records,
                                               const AlarmLimits& limits);

std::array<double, 3> failure_rate(std::span<const IntegrityRecord> records);

// N_FA (T - N_PE) / (N_FA (T - N_PE) + N_TA N_PE), 0 when the numerator or
// the denominator vanishes.
double false_alarm_rate(std::size_t n_fa, std::size_t n_ta, std::size_t n_pe, std::size_t t_max,
                        bool* denominator_zero = nullptr);
std::array<double, 3> false_alarm_rate(std::span<const IntegrityRecord> records, const AlarmLimits& limits);

IntegrityReport evaluate_integrity(std::span<const IntegrityRecord> records, const AlarmLimits& limits);

// Stanford-ESA style regions. Disjoint and exhaustive.
enum class IntegrityRegion {
  Nominal,                  // |e| <= PL <= AL
  MisleadingInformation,    // PL < |e| <= AL, PL <= AL
  HazardousMisleading,      // PL <= AL < |e|, PL < |e|
  Unavailable,              // PL > AL, |e| <= PL
  UnavailableMisleading,    // PL > AL, PL < |e|
};

inline constexpr std::size_t kRegionCount = 5;
const char* to_string(IntegrityRegion region);
IntegrityRegion classify(double pl, double abs_error, double alarm_limit);

struct DirectionDiagram {
  double alarm_limit = 0.0;
  std::vector<double> edges;                     // bins + 1 edges over [0, 2 AL]
  std::vector<std::vector<std::size_t>> counts;  // [error bin][pl bin], last bin is overflow
  std::array<std::size_t, kRegionCount> region_tally{};
};

struct IntegrityDiagram {
  std::size_t bins = 0;
  std::array<DirectionDiagram, 3> directions;
};

// Uniform bins over [0, 2 AL] for |e| and PL plus one overflow bin each.
IntegrityDiagram integrity_diagram(std::span<const IntegrityRecord> records, const AlarmLimits& limits,
                                   std::size_t bins);

// CSV with header t,pl_lat,pl_lon,pl_vert,err_x,err_y,err_z.
std::vector<IntegrityRecord> read_records_csv(std::istream& in);
void write_records_csv(std::ostream& out, std::span<const IntegrityRecord> records);

std::string report_to_json(const IntegrityReport& report, const AlarmLimits& limits);
std::string diagram_to_json(const IntegrityDiagram& diagram);

}  // namespace dpl
