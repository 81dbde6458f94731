#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "segmap/dates.hpp"

namespace segmap {

// ---------------------------------------------------------------------------
// Enumerations carried by registration records.
// ---------------------------------------------------------------------------

/// Administrative region. `Other` carries the numeric region code.
struct Region {
  enum class Kind { Nord, Rhone, Other };
  Kind kind = Kind::Other;
  int code = 0;

  static Region nord() { return {Kind::Nord, 0}; }
  static Region rhone() { return {Kind::Rhone, 0}; }
  static Region other(int code) { return {Kind::Other, code}; }

  friend bool operator==(const Region&, const Region&) = default;
  friend auto operator<=>(const Region&, const Region&) = default;
};

enum class JobLossReason { EndOfContract, LayOff, FirstJob, Return, NA };
enum class ExitType { Job, ProbableJob, Quit, Training, Cancellation, FullTimeJobSeeker, None };
enum class Education { S4, S2, SecDiploma, Secondary, Primary, None };
enum class Skill { mano, ousp, op12, o3hq, emmq, empq, tecd, mait, cadr };
enum class HourRange { LE78, GT78, Unknown };

std::string to_string(const Region& r);
std::string_view to_string(JobLossReason v);
std::string_view to_string(ExitType v);
std::string_view to_string(Education v);
std::string_view to_string(Skill v);
std::string_view to_string(HourRange v);

Region parse_region(std::string_view s);
JobLossReason parse_reason(std::string_view s);
ExitType parse_exit_type(std::string_view s);
Education parse_education(std::string_view s);
Skill parse_skill(std::string_view s);
HourRange parse_hour_range(std::string_view s);

// ---------------------------------------------------------------------------
// Records and individuals.
// ---------------------------------------------------------------------------

/// One month of occasional work declared during a registration spell.
struct OccasionalMonth {
  std::optional<double> hours;
  std::optional<double> wage;
  int spell_index = 1;
};

/// One spell of registered unemployment.
struct RegistrationRecord {
  std::string person_id;
  Region region;
  Date entry_date;
  std::optional<Date> exit_date;  ///< absent: still registered at window end
  JobLossReason job_loss_reason = JobLossReason::NA;
  ExitType exit_type = ExitType::None;
  double seniority_years = 0.0;
  double age_years = 0.0;
  Education education = Education::None;
  Skill skill = Skill::mano;
  int children = 0;
  int job_offers = 0;
  HourRange hour_range_class = HourRange::Unknown;
  std::vector<OccasionalMonth> occasional_months;
};

/// Observation window of the register. Records without an exit date are
/// treated as still open at `end`.
struct Window {
  Date end = Date::from_ymd(1996, 8, 31);
};

/// Effective exit date (exit date, or window end when still registered).
Date effective_exit(const RegistrationRecord& r, const Window& w);
/// Spell length in days.
double duration_days(const RegistrationRecord& r, const Window& w);

/// Checks the record invariants (date order, spell indices contiguous from 1,
/// occasional months fit in the calendar months spanned by the spell).
/// Throws DataError naming the person.
void validate_record(const RegistrationRecord& r, const Window& w);

/// Collated, person-level view. Qualitative attributes come from the latest
/// registration; hours and wage maxima are those of the latest spell.
struct Individual {
  std::string person_id;
  Region region;
  int n_periods = 0;
  double cumulated_duration_days = 0.0;
  double latest_duration_days = 0.0;
  double total_occasional_months = 0.0;
  int total_occasional_spells = 0;
  int total_job_offers = 0;
  double max_monthly_hours = 0.0;
  double max_monthly_wage = 0.0;
  JobLossReason job_loss_reason = JobLossReason::NA;
  ExitType exit_type = ExitType::None;
  Education education = Education::None;
  Skill skill = Skill::mano;
  int children = 0;
  double age_years = 0.0;
  double seniority_years = 0.0;
};

struct OccasionalSummary {
  double max_hours = 0.0;
  double max_wage = 0.0;
  int months_count = 0;
  int spells_count = 0;
};

/// Max hours, max wage, months with positive hours and distinct spells of one
/// record. Throws DataError if any hours value is still missing.
OccasionalSummary summarize_occasional(const RegistrationRecord& r);

/// Key of the administrative class used for hours imputation.
using HourClassKey = std::pair<HourRange, Region>;
using HourClassMeans = std::map<HourClassKey, double>;

/// Mean of all observed monthly hours cells, per (hour range, region).
HourClassMeans hour_class_means(std::span<const RegistrationRecord> records);

struct ImputationResult {
  RegistrationRecord record;
  int imputed_cells = 0;
};

/// Replaces every missing monthly hours value by the mean of the record's
/// administrative class. Throws DataError naming the class when no mean is
/// available for a record that needs one.
ImputationResult impute_hours(const RegistrationRecord& record, const HourClassMeans& class_means);

/// Collates registrations per person. Records may come in any order; output
/// is sorted by person_id. Throws DataError listing persons with overlapping
/// spells.
std::vector<Individual> collate(std::span<const RegistrationRecord> records,
                                const Window& window = {});

// ---------------------------------------------------------------------------
// Features.
// ---------------------------------------------------------------------------

inline constexpr double kDaysPerMonth = 30.44;
inline constexpr double kDaysPerYear = 365.25;
inline constexpr std::size_t kFeatureCount = 11;

enum class Feature : std::size_t {
  Age,
  Seniority,
  LatestDuration,
  CumulatedDuration,
  OffersPerMonth,
  NPeriods,
  OccasionalMonthsPerUnempMonth,
  OccasionalSpellsPerYear,
  OccasionalSpellsPerPeriod,
  MaxHours,
  MaxWage,
};

/// Column names in the fixed feature order.
const std::array<std::string_view, kFeatureCount>& feature_names();

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
};

/// Builds the 11 classification variables. Throws DataError when the
/// cumulated duration is zero.
FeatureVector build_features(const Individual& individual);

// ---------------------------------------------------------------------------
// Qualitative profiles.
// ---------------------------------------------------------------------------

/// Qualitative variables in canonical order. The first eleven are the active
/// MCA variables; Age is the supplementary one.
enum class QualVar : std::size_t {
  Children,
  Education,
  Skill,
  Reason,
  Duration,
  Exit,
  Recurrence,
  Hours,
  Share,
  SpellsPerYear,
  SuperClass,
  Age,
};
inline constexpr std::size_t kQualVarCount = 12;

std::string_view qual_var_name(QualVar v);
QualVar parse_qual_var(std::string_view name);
/// Every admissible code of a variable, in canonical order. For SuperClass
/// the codes are "sc1".."sc<max_classes>".
std::vector<std::string> qual_var_codes(QualVar v, int max_classes = 10);

struct QualProfile {
  std::array<std::string, kQualVarCount> codes;

  const std::string& operator[](QualVar v) const { return codes[static_cast<std::size_t>(v)]; }
  std::string& operator[](QualVar v) { return codes[static_cast<std::size_t>(v)]; }
};

// Bracket helpers. Interval upper bounds belong to the lower bracket
// (78 hours is "ar78", exactly 6 months is "inf6").
std::string_view duration_bracket(double days);
std::string_view hours_bracket(double hours);
std::string_view share_bracket(double share);
std::string_view spells_per_year_bracket(double spells_per_year);
std::string_view recurrence_bracket(int n_periods);
std::string_view age_bracket(double age);
std::string_view education_code(Education e);
std::string_view reason_code(JobLossReason r);
std::string_view exit_code(ExitType e);

QualProfile bracketize(const Individual& individual, const FeatureVector& features,
                       int super_class);

// ---------------------------------------------------------------------------
// Delimited text I/O.
// ---------------------------------------------------------------------------

/// Parses the register CSV (header row required). Month columns repeat as
/// m<k>_hours,m<k>_wage,m<k>_spell; a month whose three fields are empty is
/// absent.
std::vector<RegistrationRecord> read_records_csv(std::string_view text);
std::string write_records_csv(std::span<const RegistrationRecord> records);

std::string write_individuals_csv(std::span<const Individual> individuals);
std::vector<Individual> read_individuals_csv(std::string_view text);

struct FeatureTable {
  std::vector<std::string> person_ids;
  std::vector<FeatureVector> rows;
};
std::string write_features_csv(const FeatureTable& table);
FeatureTable read_features_csv(std::string_view text);

/// Full ingest stage: validate, impute hours by class mean, collate.
struct IngestResult {
  std::vector<Individual> individuals;
  int imputed_cells = 0;
};
IngestResult ingest(std::span<const RegistrationRecord> records, const Window& window = {});

}  // namespace segmap
