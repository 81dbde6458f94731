#include <algorithm>
#include <sstream>

#include "segmap/error.hpp"
#include "segmap/register.hpp"
#include "segmap/textio.hpp"

namespace segmap {

namespace {

constexpr std::array<std::string_view, 13> kRecordColumns{
    "person_id", "region",  "entry_date", "exit_date", "reason", "exit_type",  "seniority",
    "age",       "education", "skill",    "children",  "offers", "hour_range"};

constexpr std::array<std::string_view, 17> kIndividualColumns{
    "person_id",
    "region",
    "n_periods",
    "cumulated_duration_days",
    "latest_duration_days",
    "total_occasional_months",
    "total_occasional_spells",
    "total_job_offers",
    "max_monthly_hours",
    "max_monthly_wage",
    "reason",
    "exit_type",
    "education",
    "skill",
    "children",
    "age",
    "seniority"};

template <std::size_t N>
void expect_header(const std::vector<std::string>& header, const std::array<std::string_view, N>& cols,
                   std::string_view what) {
  if (header.size() < N) throw DataError(std::string(what) + ": header has too few columns");
  for (std::size_t i = 0; i < N; ++i) {
    if (header[i] != cols[i]) {
      throw DataError(std::string(what) + ": expected column '" + std::string(cols[i]) +
                      "' at position " + std::to_string(i + 1) + ", found '" + header[i] + "'");
    }
  }
}

std::string line_context(std::size_t line_no) { return "line " + std::to_string(line_no); }

}  // namespace

std::vector<RegistrationRecord> read_records_csv(std::string_view text) {
  const auto rows = textio::lines(text);
  if (rows.empty()) throw DataError("register file is empty");
  const auto header = textio::split(rows[0]);
  expect_header(header, kRecordColumns, "register file");
  const std::size_t extra = header.size() - kRecordColumns.size();
  if (extra % 3 != 0) throw DataError("register file: month columns must come in triples");
  const std::size_t n_months = extra / 3;
  for (std::size_t k = 0; k < n_months; ++k) {
    const auto base = kRecordColumns.size() + 3 * k;
    const auto prefix = "m" + std::to_string(k + 1) + "_";
    if (header[base] != prefix + "hours" || header[base + 1] != prefix + "wage" ||
        header[base + 2] != prefix + "spell") {
      throw DataError("register file: expected " + prefix + "hours," + prefix + "wage," + prefix +
                      "spell");
    }
  }

  std::vector<RegistrationRecord> out;
  for (std::size_t li = 1; li < rows.size(); ++li) {
    if (rows[li].empty()) continue;
    const auto f = textio::split(rows[li]);
    if (f.size() != header.size()) {
      throw DataError("register file " + line_context(li + 1) + ": expected " +
                      std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
    }
    try {
      RegistrationRecord r;
      r.person_id = f[0];
      r.region = parse_region(f[1]);
      r.entry_date = Date::parse(f[2]);
      if (!f[3].empty()) r.exit_date = Date::parse(f[3]);
      r.job_loss_reason = parse_reason(f[4]);
      r.exit_type = parse_exit_type(f[5]);
      r.seniority_years = textio::parse_double(f[6], "seniority");
      r.age_years = textio::parse_double(f[7], "age");
      r.education = parse_education(f[8]);
      r.skill = parse_skill(f[9]);
      r.children = static_cast<int>(textio::parse_int(f[10], "children"));
      r.job_offers = static_cast<int>(textio::parse_int(f[11], "offers"));
      r.hour_range_class = parse_hour_range(f[12]);
      for (std::size_t k = 0; k < n_months; ++k) {
        const auto base = kRecordColumns.size() + 3 * k;
        if (f[base].empty() && f[base + 1].empty() && f[base + 2].empty()) continue;
        if (f[base + 2].empty()) throw DataError("month " + std::to_string(k + 1) + " lacks a spell index");
        OccasionalMonth m;
        m.hours = textio::parse_optional_double(f[base], "hours");
        m.wage = textio::parse_optional_double(f[base + 1], "wage");
        m.spell_index = static_cast<int>(textio::parse_int(f[base + 2], "spell"));
        r.occasional_months.push_back(m);
      }
      out.push_back(std::move(r));
    } catch (const DataError& e) {
      throw DataError("register file " + line_context(li + 1) + ": " + e.what());
    }
  }
  return out;
}

std::string write_records_csv(std::span<const RegistrationRecord> records) {
  std::size_t n_months = 0;
  for (const auto& r : records) n_months = std::max(n_months, r.occasional_months.size());
  std::ostringstream os;
  for (std::size_t i = 0; i < kRecordColumns.size(); ++i) os << (i ? "," : "") << kRecordColumns[i];
  for (std::size_t k = 1; k <= n_months; ++k) {
    os << ",m" << k << "_hours,m" << k << "_wage,m" << k << "_spell";
  }
  os << '\n';
  for (const auto& r : records) {
    os << r.person_id << ',' << to_string(r.region) << ',' << r.entry_date.iso() << ','
       << (r.exit_date ? r.exit_date->iso() : std::string()) << ',' << to_string(r.job_loss_reason)
       << ',' << to_string(r.exit_type) << ',' << textio::shortest(r.seniority_years) << ','
       << textio::shortest(r.age_years) << ',' << to_string(r.education) << ',' << to_string(r.skill)
       << ',' << r.children << ',' << r.job_offers << ','
       << (r.hour_range_class == HourRange::Unknown ? std::string_view{}
                                                    : to_string(r.hour_range_class));
    for (std::size_t k = 0; k < n_months; ++k) {
      if (k < r.occasional_months.size()) {
        const auto& m = r.occasional_months[k];
        os << ',' << (m.hours ? textio::shortest(*m.hours) : std::string()) << ','
           << (m.wage ? textio::shortest(*m.wage) : std::string()) << ',' << m.spell_index;
      } else {
        os << ",,,";
      }
    }
    os << '\n';
  }
  return os.str();
}

std::string write_individuals_csv(std::span<const Individual> individuals) {
  std::ostringstream os;
  for (std::size_t i = 0; i < kIndividualColumns.size(); ++i) {
    os << (i ? "," : "") << kIndividualColumns[i];
  }
  os << '\n';
  for (const auto& d : individuals) {
    os << d.person_id << ',' << to_string(d.region) << ',' << d.n_periods << ','
       << textio::shortest(d.cumulated_duration_days) << ',' << textio::shortest(d.latest_duration_days)
       << ',' << textio::shortest(d.total_occasional_months) << ',' << d.total_occasional_spells << ','
       << d.total_job_offers << ',' << textio::shortest(d.max_monthly_hours) << ','
       << textio::shortest(d.max_monthly_wage) << ',' << to_string(d.job_loss_reason) << ','
       << to_string(d.exit_type) << ',' << to_string(d.education) << ',' << to_string(d.skill)
       << ',' << d.children << ',' << textio::shortest(d.age_years) << ','
       << textio::shortest(d.seniority_years) << '\n';
  }
  return os.str();
}

std::vector<Individual> read_individuals_csv(std::string_view text) {
  const auto rows = textio::lines(text);
  if (rows.empty()) throw DataError("individuals file is empty");
  expect_header(textio::split(rows[0]), kIndividualColumns, "individuals file");
  std::vector<Individual> out;
  for (std::size_t li = 1; li < rows.size(); ++li) {
    if (rows[li].empty()) continue;
    const auto f = textio::split(rows[li]);
    if (f.size() != kIndividualColumns.size()) {
      throw DataError("individuals file " + line_context(li + 1) + ": wrong field count");
    }
    try {
      Individual d;
      d.person_id = f[0];
      d.region = parse_region(f[1]);
      d.n_periods = static_cast<int>(textio::parse_int(f[2], "n_periods"));
      d.cumulated_duration_days = textio::parse_double(f[3], "cumulated duration");
      d.latest_duration_days = textio::parse_double(f[4], "latest duration");
      d.total_occasional_months = textio::parse_double(f[5], "occasional months");
      d.total_occasional_spells = static_cast<int>(textio::parse_int(f[6], "occasional spells"));
      d.total_job_offers = static_cast<int>(textio::parse_int(f[7], "job offers"));
      d.max_monthly_hours = textio::parse_double(f[8], "max hours");
      d.max_monthly_wage = textio::parse_double(f[9], "max wage");
      d.job_loss_reason = parse_reason(f[10]);
      d.exit_type = parse_exit_type(f[11]);
      d.education = parse_education(f[12]);
      d.skill = parse_skill(f[13]);
      d.children = static_cast<int>(textio::parse_int(f[14], "children"));
      d.age_years = textio::parse_double(f[15], "age");
      d.seniority_years = textio::parse_double(f[16], "seniority");
      out.push_back(std::move(d));
    } catch (const DataError& e) {
      throw DataError("individuals file " + line_context(li + 1) + ": " + e.what());
    }
  }
  return out;
}

std::string write_features_csv(const FeatureTable& table) {
  std::ostringstream os;
  os << "person_id";
  for (auto name : feature_names()) os << ',' << name;
  os << '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    os << table.person_ids[i];
    for (double v : table.rows[i].values) os << ',' << textio::shortest(v);
    os << '\n';
  }
  return os.str();
}

FeatureTable read_features_csv(std::string_view text) {
  const auto rows = textio::lines(text);
  if (rows.empty()) throw DataError("features file is empty");
  const auto header = textio::split(rows[0]);
  if (header.size() != kFeatureCount + 1 || header[0] != "person_id") {
    throw DataError("features file: unexpected header");
  }
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    if (header[j + 1] != feature_names()[j]) {
      throw DataError("features file: expected column '" + std::string(feature_names()[j]) + "'");
    }
  }
  FeatureTable table;
  for (std::size_t li = 1; li < rows.size(); ++li) {
    if (rows[li].empty()) continue;
    const auto f = textio::split(rows[li]);
    if (f.size() != kFeatureCount + 1) {
      throw DataError("features file " + line_context(li + 1) + ": wrong field count");
    }
    FeatureVector v;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      v.values[j] = textio::parse_double(f[j + 1], feature_names()[j]);
    }
    table.person_ids.push_back(f[0]);
    table.rows.push_back(v);
  }
  return table;
}

}  // namespace segmap
