#include "segmap/register.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "segmap/error.hpp"
#include "segmap/textio.hpp"

namespace segmap {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::string_view, N>& names,
             std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  throw DataError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::array<std::string_view, 5> kReasonNames{"EndOfContract", "LayOff", "FirstJob",
                                                       "Return", "NA"};
constexpr std::array<std::string_view, 7> kExitNames{"Job",          "ProbableJob",
                                                     "Quit",         "Training",
                                                     "Cancellation", "FullTimeJobSeeker",
                                                     "None"};
constexpr std::array<std::string_view, 6> kEducationNames{"S4",        "S2",      "SecDiploma",
                                                          "Secondary", "Primary", "None"};
constexpr std::array<std::string_view, 9> kSkillNames{"mano", "ousp", "op12", "o3hq", "emmq",
                                                      "empq", "tecd", "mait", "cadr"};
constexpr std::array<std::string_view, 3> kHourRangeNames{"LE78", "GT78", "Unknown"};

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "age",
    "seniority",
    "latest_duration",
    "cumulated_duration",
    "offers_per_month",
    "n_periods",
    "occasional_months_per_unemp_month",
    "occasional_spells_per_year",
    "occasional_spells_per_period",
    "max_hours",
    "max_wage",
};

constexpr std::array<std::string_view, kQualVarCount> kQualVarNames{
    "children", "education",       "skill",       "reason", "duration", "exit",
    "recurrence", "hours", "share", "spells_year", "super_class", "age",
};

}  // namespace

std::string to_string(const Region& r) {
  switch (r.kind) {
    case Region::Kind::Nord: return "Nord";
    case Region::Kind::Rhone: return "Rhone";
    case Region::Kind::Other: return std::to_string(r.code);
  }
  return {};
}
std::string_view to_string(JobLossReason v) { return kReasonNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(ExitType v) { return kExitNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Education v) { return kEducationNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Skill v) { return kSkillNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(HourRange v) { return kHourRangeNames[static_cast<std::size_t>(v)]; }

Region parse_region(std::string_view s) {
  if (s == "Nord") return Region::nord();
  if (s == "Rhone") return Region::rhone();
  return Region::other(static_cast<int>(textio::parse_int(s, "region code")));
}
JobLossReason parse_reason(std::string_view s) {
  return parse_enum<JobLossReason>(s, kReasonNames, "job loss reason");
}
ExitType parse_exit_type(std::string_view s) {
  return parse_enum<ExitType>(s, kExitNames, "exit type");
}
Education parse_education(std::string_view s) {
  return parse_enum<Education>(s, kEducationNames, "education");
}
Skill parse_skill(std::string_view s) { return parse_enum<Skill>(s, kSkillNames, "skill"); }
HourRange parse_hour_range(std::string_view s) {
  if (s.empty()) return HourRange::Unknown;
  return parse_enum<HourRange>(s, kHourRangeNames, "hour range class");
}

Date effective_exit(const RegistrationRecord& r, const Window& w) {
  return r.exit_date.value_or(w.end);
}

double duration_days(const RegistrationRecord& r, const Window& w) {
  return static_cast<double>(effective_exit(r, w) - r.entry_date);
}

void validate_record(const RegistrationRecord& r, const Window& w) {
  const auto who = "person '" + r.person_id + "'";
  if (r.person_id.empty()) throw DataError("record with empty person_id");
  const Date exit = effective_exit(r, w);
  if (exit < r.entry_date) {
    throw DataError(who + ": exit date " + exit.iso() + " precedes entry date " +
                    r.entry_date.iso());
  }
  if (!(r.seniority_years >= 0.0) || !(r.age_years >= 0.0) || r.children < 0 || r.job_offers < 0) {
    throw DataError(who + ": negative age, seniority, children or offers");
  }
  const int capacity = calendar_months_spanned(r.entry_date, exit);
  if (static_cast<int>(r.occasional_months.size()) > capacity) {
    throw DataError(who + ": " + std::to_string(r.occasional_months.size()) +
                    " occasional months declared but the spell spans only " +
                    std::to_string(capacity) + " calendar months");
  }
  std::set<int> spells;
  for (const auto& m : r.occasional_months) {
    if ((m.hours && !(*m.hours >= 0.0)) || (m.wage && !(*m.wage >= 0.0))) {
      throw DataError(who + ": negative occasional hours or wage");
    }
    spells.insert(m.spell_index);
  }
  int expected = 1;
  for (int s : spells) {
    if (s != expected) {
      throw DataError(who + ": occasional spell indices are not contiguous from 1");
    }
    ++expected;
  }
}

OccasionalSummary summarize_occasional(const RegistrationRecord& r) {
  OccasionalSummary out;
  std::set<int> spells;
  for (const auto& m : r.occasional_months) {
    if (!m.hours) {
      throw DataError("person '" + r.person_id + "': occasional hours not imputed");
    }
    out.max_hours = std::max(out.max_hours, *m.hours);
    if (m.wage) out.max_wage = std::max(out.max_wage, *m.wage);
    if (*m.hours > 0.0) ++out.months_count;
    spells.insert(m.spell_index);
  }
  out.spells_count = static_cast<int>(spells.size());
  return out;
}

HourClassMeans hour_class_means(std::span<const RegistrationRecord> records) {
  std::map<HourClassKey, std::pair<double, long long>> acc;
  for (const auto& r : records) {
    for (const auto& m : r.occasional_months) {
      if (!m.hours) continue;
      auto& slot = acc[{r.hour_range_class, r.region}];
      slot.first += *m.hours;
      ++slot.second;
    }
  }
  HourClassMeans means;
  for (const auto& [key, sum_count] : acc) {
    means[key] = sum_count.first / static_cast<double>(sum_count.second);
  }
  return means;
}

ImputationResult impute_hours(const RegistrationRecord& record, const HourClassMeans& class_means) {
  ImputationResult out{record, 0};
  for (auto& m : out.record.occasional_months) {
    if (m.hours) continue;
    const auto it = class_means.find({record.hour_range_class, record.region});
    if (it == class_means.end()) {
      throw DataError("no mean monthly hours for administrative class (" +
                      std::string(to_string(record.hour_range_class)) + ", " +
                      to_string(record.region) + ") needed by person '" + record.person_id + "'");
    }
    m.hours = it->second;
    ++out.imputed_cells;
  }
  return out;
}

std::vector<Individual> collate(std::span<const RegistrationRecord> records, const Window& window) {
  std::vector<const RegistrationRecord*> order;
  order.reserve(records.size());
  for (const auto& r : records) order.push_back(&r);
  // Full key so that the result does not depend on input order.
  std::sort(order.begin(), order.end(), [&](const auto* a, const auto* b) {
    if (a->person_id != b->person_id) return a->person_id < b->person_id;
    if (a->entry_date != b->entry_date) return a->entry_date < b->entry_date;
    return effective_exit(*a, window) < effective_exit(*b, window);
  });

  std::vector<Individual> out;
  std::vector<std::string> overlapping;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && order[j]->person_id == order[i]->person_id) ++j;

    bool overlap = false;
    for (std::size_t k = i + 1; k < j; ++k) {
      if (order[k]->entry_date < effective_exit(*order[k - 1], window)) overlap = true;
    }
    if (overlap) {
      overlapping.push_back(order[i]->person_id);
      i = j;
      continue;
    }

    // Greatest entry date, ties broken by greatest exit: the last in sort order.
    const RegistrationRecord& latest = *order[j - 1];
    Individual ind;
    ind.person_id = latest.person_id;
    ind.region = latest.region;
    ind.n_periods = static_cast<int>(j - i);
    for (std::size_t k = i; k < j; ++k) {
      const auto& r = *order[k];
      const auto summary = summarize_occasional(r);
      ind.cumulated_duration_days += duration_days(r, window);
      ind.total_occasional_months += summary.months_count;
      ind.total_occasional_spells += summary.spells_count;
      ind.total_job_offers += r.job_offers;
    }
    const auto latest_summary = summarize_occasional(latest);
    ind.latest_duration_days = duration_days(latest, window);
    ind.max_monthly_hours = latest_summary.max_hours;
    ind.max_monthly_wage = latest_summary.max_wage;
    ind.job_loss_reason = latest.job_loss_reason;
    ind.exit_type = latest.exit_type;
    ind.education = latest.education;
    ind.skill = latest.skill;
    ind.children = latest.children;
    ind.age_years = latest.age_years;
    ind.seniority_years = latest.seniority_years;
    out.push_back(std::move(ind));
    i = j;
  }

  if (!overlapping.empty()) {
    std::string msg = "overlapping registration spells for " +
                      std::to_string(overlapping.size()) + " person(s):";
    for (std::size_t k = 0; k < overlapping.size() && k < 20; ++k) msg += " " + overlapping[k];
    if (overlapping.size() > 20) msg += " ...";
    throw DataError(msg);
  }
  return out;
}

const std::array<std::string_view, kFeatureCount>& feature_names() { return kFeatureNames; }

FeatureVector build_features(const Individual& ind) {
  if (!(ind.cumulated_duration_days > 0.0)) {
    throw DataError("person '" + ind.person_id + "': zero cumulated unemployment duration");
  }
  const double months = ind.cumulated_duration_days / kDaysPerMonth;
  const double years = ind.cumulated_duration_days / kDaysPerYear;
  auto ratio = [](double num, double den) { return num == 0.0 ? 0.0 : num / den; };

  FeatureVector f;
  f[Feature::Age] = ind.age_years;
  f[Feature::Seniority] = ind.seniority_years;
  f[Feature::LatestDuration] = ind.latest_duration_days;
  f[Feature::CumulatedDuration] = ind.cumulated_duration_days;
  f[Feature::OffersPerMonth] = ratio(ind.total_job_offers, months);
  f[Feature::NPeriods] = ind.n_periods;
  f[Feature::OccasionalMonthsPerUnempMonth] = ratio(ind.total_occasional_months, months);
  f[Feature::OccasionalSpellsPerYear] = ratio(ind.total_occasional_spells, years);
  f[Feature::OccasionalSpellsPerPeriod] = ratio(ind.total_occasional_spells, ind.n_periods);
  f[Feature::MaxHours] = ind.max_monthly_hours;
  f[Feature::MaxWage] = ind.max_monthly_wage;
  return f;
}

// ---------------------------------------------------------------------------

std::string_view qual_var_name(QualVar v) { return kQualVarNames[static_cast<std::size_t>(v)]; }

QualVar parse_qual_var(std::string_view name) {
  for (std::size_t i = 0; i < kQualVarCount; ++i) {
    if (kQualVarNames[i] == name) return static_cast<QualVar>(i);
  }
  throw ConfigError("unknown qualitative variable '" + std::string(name) + "'");
}

std::vector<std::string> qual_var_codes(QualVar v, int max_classes) {
  switch (v) {
    case QualVar::Children: return {"0enf", "enf"};
    case QualVar::Education: return {"form0", "nbacc", "+bacc"};
    case QualVar::Skill:
      return {kSkillNames.begin(), kSkillNames.end()};
    case QualVar::Reason: return {"fin", "lic", "prem", "repr", "rna"};
    case QualVar::Duration: return {"inf6", "inf12", "sup12"};
    case QualVar::Exit: return {"empl", "pemp", "stag", "retr", "susp", "ftjs", "encr"};
    case QualVar::Recurrence: return {"rec1", "rec2", "rec3"};
    case QualVar::Hours: return {"0ar", "arm39", "ar78", "ar117", "arp117"};
    case QualVar::Share: return {"0par", "01par", "13par", "p3par"};
    case QualVar::SpellsPerYear: return {"0peran", "m1peran", "12peran", "p2peran"};
    case QualVar::SuperClass: {
      std::vector<std::string> codes;
      for (int k = 1; k <= max_classes; ++k) codes.push_back("sc" + std::to_string(k));
      return codes;
    }
    case QualVar::Age: return {"m25", "25a35", "35a45", "45a55", "p55"};
  }
  return {};
}

std::string_view duration_bracket(double days) {
  const double months = days / kDaysPerMonth;
  if (months <= 6.0) return "inf6";
  if (months <= 12.0) return "inf12";
  return "sup12";
}

std::string_view hours_bracket(double hours) {
  if (hours <= 0.0) return "0ar";
  if (hours <= 39.0) return "arm39";
  if (hours <= 78.0) return "ar78";
  if (hours <= 117.0) return "ar117";
  return "arp117";
}

std::string_view share_bracket(double share) {
  if (share <= 0.0) return "0par";
  if (share <= 0.1) return "01par";
  if (share <= 0.3) return "13par";
  return "p3par";
}

std::string_view spells_per_year_bracket(double spells_per_year) {
  if (spells_per_year <= 0.0) return "0peran";
  if (spells_per_year <= 1.0) return "m1peran";
  if (spells_per_year <= 2.0) return "12peran";
  return "p2peran";
}

std::string_view recurrence_bracket(int n_periods) {
  if (n_periods <= 1) return "rec1";
  if (n_periods == 2) return "rec2";
  return "rec3";
}

std::string_view age_bracket(double age) {
  if (age <= 25.0) return "m25";
  if (age <= 35.0) return "25a35";
  if (age <= 45.0) return "35a45";
  if (age <= 55.0) return "45a55";
  return "p55";
}

std::string_view education_code(Education e) {
  switch (e) {
    case Education::S4:
    case Education::S2: return "+bacc";
    case Education::SecDiploma: return "nbacc";
    case Education::Secondary:
    case Education::Primary:
    case Education::None: return "form0";
  }
  return "form0";
}

std::string_view reason_code(JobLossReason r) {
  switch (r) {
    case JobLossReason::EndOfContract: return "fin";
    case JobLossReason::LayOff: return "lic";
    case JobLossReason::FirstJob: return "prem";
    case JobLossReason::Return: return "repr";
    case JobLossReason::NA: return "rna";
  }
  return "rna";
}

std::string_view exit_code(ExitType e) {
  switch (e) {
    case ExitType::Job: return "empl";
    case ExitType::ProbableJob: return "pemp";
    case ExitType::Training: return "stag";
    case ExitType::Quit: return "retr";
    case ExitType::Cancellation: return "susp";
    case ExitType::FullTimeJobSeeker: return "ftjs";
    case ExitType::None: return "encr";
  }
  return "encr";
}

QualProfile bracketize(const Individual& ind, const FeatureVector& f, int super_class) {
  QualProfile p;
  p[QualVar::Children] = ind.children > 0 ? "enf" : "0enf";
  p[QualVar::Education] = std::string(education_code(ind.education));
  p[QualVar::Skill] = std::string(to_string(ind.skill));
  p[QualVar::Reason] = std::string(reason_code(ind.job_loss_reason));
  p[QualVar::Duration] = std::string(duration_bracket(f[Feature::LatestDuration]));
  p[QualVar::Exit] = std::string(exit_code(ind.exit_type));
  p[QualVar::Recurrence] = std::string(recurrence_bracket(ind.n_periods));
  p[QualVar::Hours] = std::string(hours_bracket(f[Feature::MaxHours]));
  p[QualVar::Share] = std::string(share_bracket(f[Feature::OccasionalMonthsPerUnempMonth]));
  p[QualVar::SpellsPerYear] =
      std::string(spells_per_year_bracket(f[Feature::OccasionalSpellsPerYear]));
  p[QualVar::SuperClass] = "sc" + std::to_string(super_class);
  p[QualVar::Age] = std::string(age_bracket(f[Feature::Age]));
  return p;
}

IngestResult ingest(std::span<const RegistrationRecord> records, const Window& window) {
  for (const auto& r : records) validate_record(r, window);
  const auto means = hour_class_means(records);
  std::vector<RegistrationRecord> imputed;
  imputed.reserve(records.size());
  IngestResult out;
  for (const auto& r : records) {
    auto res = impute_hours(r, means);
    out.imputed_cells += res.imputed_cells;
    imputed.push_back(std::move(res.record));
  }
  out.individuals = collate(imputed, window);
  return out;
}

}  // namespace segmap
