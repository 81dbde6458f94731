#include "segmap/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "segmap/error.hpp"
#include "segmap/rng.hpp"
#include "segmap/textio.hpp"

namespace segmap {

namespace {

namespace bm = boost::math;

// Distribution shapes. Locations are fitted to the mean targets; scales are
// fixed.
constexpr double kLatestSigma = 1.0;
constexpr double kEarlierSigma = 0.8;
constexpr double kAgeSigma = 10.0;
constexpr double kHoursSigma = 40.0;
constexpr double kRateSigma = 0.5;
constexpr double kSenioritySigma = 0.9;
constexpr double kMaxSpellDays = 3652.0;
constexpr double kAgeMin = 16.0, kAgeMax = 70.0;
constexpr double kHoursMax = 300.0;
constexpr double kChildlessShare = 0.55;
constexpr double kExtraChildrenMean = 0.8;
constexpr int kAttemptsPerLevel = 64;

double Phi(double z) { return bm::cdf(bm::normal(), z); }
double Phic(double z) { return bm::cdf(bm::complement(bm::normal(), z)); }
double phi(double z) { return bm::pdf(bm::normal(), z); }

// Standard normal mass on (a, b], on the side that avoids cancellation.
double mass(double a, double b) { return a > 0.0 ? Phic(a) - Phic(b) : Phi(b) - Phi(a); }

double truncated_std_normal(double a, double b, double u) {
  if (a > 0.0) return -truncated_std_normal(-b, -a, 1.0 - u);
  const double pa = Phi(a), pb = Phi(b);
  const double p = pa + u * (pb - pa);
  if (!(p > 0.0)) return a;
  if (!(p < 1.0)) return b;
  return std::clamp(bm::quantile(bm::normal(), p), a, b);
}

double truncated_normal_mean(double mu, double sigma, double lo, double hi) {
  const double a = (lo - mu) / sigma, b = (hi - mu) / sigma;
  const double m = mass(a, b);
  if (!(m > 0.0)) return mu < lo ? lo : hi;
  return std::clamp(mu + sigma * (phi(a) - phi(b)) / m, lo, hi);
}

double truncated_lognormal_mean(double mu, double sigma, double lo, double hi) {
  const double a = (std::log(lo) - mu) / sigma, b = (std::log(hi) - mu) / sigma;
  const double m = mass(a, b);
  if (!(m > 0.0)) return mu < std::log(lo) ? lo : hi;
  return std::clamp(std::exp(mu + 0.5 * sigma * sigma) * mass(a - sigma, b - sigma) / m, lo, hi);
}

struct Interval {
  double lo, hi;
};

// Location parameter such that sum_k p_k * mean_k(mu) = target. mean_at is
// increasing in mu.
template <class F>
double fit_location(std::string_view variable, double target, double mu_lo, double mu_hi, F mean_at) {
  const double f_lo = mean_at(mu_lo), f_hi = mean_at(mu_hi);
  if (!(target > f_lo && target < f_hi)) {
    throw ConfigError("infeasible spec: mean." + std::string(variable) + " = " + textio::exact(target) +
                      " is outside the range (" + textio::fixed(f_lo, 4) + ", " + textio::fixed(f_hi, 4) +
                      ") implied by the bracket proportions");
  }
  double lo = mu_lo, hi = mu_hi;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_at(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

int draw(std::span<const double> p, double u) {
  double total = 0.0;
  for (double x : p) total += x;
  double acc = 0.0;
  const double t = u * total;
  for (std::size_t k = 0; k < p.size(); ++k) {
    acc += p[k];
    if (t < acc) return static_cast<int>(k);
  }
  for (std::size_t k = p.size(); k-- > 0;) {
    if (p[k] > 0.0) return static_cast<int>(k);
  }
  return 0;
}

int poisson(SplitMix64& rng, double lambda) {
  if (lambda <= 0.0) return 0;
  const double u = rng.uniform();
  double p = std::exp(-lambda), cdf = p;
  int k = 0;
  while (u > cdf && k < 100000) {
    ++k;
    p *= lambda / k;
    cdf += p;
    if (p == 0.0 && k > lambda) break;
  }
  return k;
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }

// Rounds to 2 decimals while staying inside (lo, hi].
double round2_into(double x, double lo, double hi) {
  double r = round2(x);
  if (r <= lo) r = round2(lo + 0.01);
  if (r > hi) r = hi;
  return r;
}

const std::vector<MarginalBlock> kBlocks = {
    {"duration", {"<6m", "6-12m", ">12m"}},
    {"recurrence", {"1", "2", ">2"}},
    {"age", {"<=35", "35-55", ">55"}},
    {"skill", {"sup", "clerks", "indus"}},
    {"education", {"S4", "S2", "SecDiploma", "Secondary", "Primary", "None"}},
    {"reason", {"layoff", "end", "first_job", "return", "na"}},
    {"exit", {"job", "probable_job", "quit", "training", "cancellation", "full_time_job"}},
    {"hours", {"0", "0-39", "39-78", "78-117", ">117"}},
    {"spells_per_period", {"0", "0-1", ">1"}},
    {"share", {"0", "0-0.1", "0.1-0.3", ">0.3"}},
};

const std::vector<MeanTarget> kMeans = {
    {"duration", true},        {"cumulated", true},      {"periods", true},
    {"jobs", false},           {"jobs_per_unemp", false}, {"jobs_per_year", false},
    {"offers_per_month", true}, {"wages", true},         {"hours", true},
    {"age", true},             {"seniority", true},
};

constexpr std::array<Interval, 3> kLatestBrackets = {{{0.5, 182.5}, {182.5, 365.5}, {365.5, kMaxSpellDays + 0.5}}};
constexpr std::array<Interval, 3> kAgeBrackets = {{{kAgeMin, 35.0}, {35.0, 55.0}, {55.0, kAgeMax}}};
constexpr std::array<Interval, 4> kHoursBrackets = {{{0.0, 39.0}, {39.0, 78.0}, {78.0, 117.0}, {117.0, kHoursMax}}};
constexpr std::array<std::string_view, 4> kShareCodes = {"0par", "01par", "13par", "p3par"};

const std::array<std::vector<Skill>, 3> kSkillGroups = {{
    {Skill::tecd, Skill::mait, Skill::cadr},
    {Skill::emmq, Skill::empq},
    {Skill::mano, Skill::ousp, Skill::op12, Skill::o3hq},
}};
constexpr std::array<JobLossReason, 5> kReasonOrder = {JobLossReason::LayOff, JobLossReason::EndOfContract,
                                                       JobLossReason::FirstJob, JobLossReason::Return,
                                                       JobLossReason::NA};
constexpr std::array<ExitType, 6> kExitOrder = {ExitType::Job,      ExitType::ProbableJob,  ExitType::Quit,
                                                ExitType::Training, ExitType::Cancellation, ExitType::FullTimeJobSeeker};

int skill_group(Skill s) {
  for (int g = 0; g < 3; ++g) {
    if (std::find(kSkillGroups[g].begin(), kSkillGroups[g].end(), s) != kSkillGroups[g].end()) return g;
  }
  return -1;
}

// Parameters derived once from the spec.
struct Plan {
  std::vector<double> recurrence, duration, age, skill, education, reason, exit;
  double extra_periods_mean = 0.0;  // mean of (n - 3) given n >= 3
  double latest_mu = 0.0;
  double earlier_mu = 0.0;
  double age_mu = 0.0;
  double hours_mu = 0.0;
  std::vector<double> hours_positive;  // bracket weights among latest-period workers
  double rate_mu = 0.0;
  double seniority_mu = 0.0;
  double offers_rate = 0.0;
  std::array<std::array<double, 4>, 3> share_given_duration{};  // P(share bracket | duration bracket)
  double multi_given_share = 0.0;  // P(spells/period > 1 | share bracket 13par or p3par)
  double latest_zero_given_work = 0.0;  // P(no work in latest period | worker with n >= 2)
};

Plan make_plan(const MarginalSpec& spec) {
  spec.check();
  Plan p;
  p.recurrence = spec.block("recurrence");
  p.duration = spec.block("duration");
  p.age = spec.block("age");
  p.skill = spec.block("skill");
  p.education = spec.block("education");
  p.reason = spec.block("reason");
  p.exit = spec.block("exit");

  // Recurrence: n = 1, 2, or 3 + geometric.
  const double p1 = p.recurrence[0], p2 = p.recurrence[1], p3 = p.recurrence[2];
  const double periods = spec.mean("periods");
  if (p3 > 0.0) {
    p.extra_periods_mean = (periods - p1 - 2.0 * p2) / p3 - 3.0;
  } else {
    p.extra_periods_mean = std::abs(periods - p1 - 2.0 * p2) < 1e-9 ? 0.0 : -1.0;
  }
  if (p.extra_periods_mean < -1e-9) {
    throw ConfigError("infeasible spec: mean.periods = " + textio::exact(periods) +
                      " is below the minimum implied by the recurrence proportions");
  }
  p.extra_periods_mean = std::max(0.0, p.extra_periods_mean);
  const double expected_earlier = p2 + p3 * (2.0 + p.extra_periods_mean);
  const double p_multi_period = p2 + p3;

  // Latest-spell length: one lognormal shape truncated to each bracket.
  p.latest_mu = fit_location("duration", spec.mean("duration"), std::log(0.5) - 6.0,
                             std::log(kMaxSpellDays) + 6.0, [&](double mu) {
                               double m = 0.0;
                               for (int k = 0; k < 3; ++k) {
                                 m += p.duration[k] * truncated_lognormal_mean(mu, kLatestSigma, kLatestBrackets[k].lo,
                                                                               kLatestBrackets[k].hi);
                               }
                               return m;
                             });

  const double extra_days = spec.mean("cumulated") - spec.mean("duration");
  if (expected_earlier <= 0.0) {
    if (std::abs(extra_days) > 1e-9) {
      throw ConfigError("infeasible spec: mean.cumulated differs from mean.duration but nobody has an earlier spell");
    }
  } else {
    if (!(extra_days > 0.0)) {
      throw ConfigError("infeasible spec: mean.cumulated must exceed mean.duration when some individuals recur");
    }
    p.earlier_mu = std::log(extra_days / expected_earlier) - 0.5 * kEarlierSigma * kEarlierSigma;
  }

  p.age_mu = fit_location("age", spec.mean("age"), kAgeMin - 6.0 * kAgeSigma, kAgeMax + 6.0 * kAgeSigma,
                          [&](double mu) {
                            double m = 0.0;
                            for (int k = 0; k < 3; ++k) {
                              m += p.age[k] * truncated_normal_mean(mu, kAgeSigma, kAgeBrackets[k].lo, kAgeBrackets[k].hi);
                            }
                            return m;
                          });

  // Occasional work.
  const auto& hours = spec.block("hours");
  const auto& spells = spec.block("spells_per_period");
  const auto& share = spec.block("share");
  const double none = share[0];
  if (std::abs(spells[0] - none) > 0.005) {
    throw ConfigError("infeasible spec: pct.spells_per_period and pct.share disagree on the share with no occasional work");
  }
  if (hours[0] < none - 0.005) {
    throw ConfigError("infeasible spec: pct.hours has fewer zero-hours individuals than pct.share has non-workers");
  }
  const double work = 1.0 - none;
  if (work > 0.0 && p_multi_period > 0.0) {
    p.latest_zero_given_work = std::max(0.0, hours[0] - none) / (work * p_multi_period);
  } else if (hours[0] - none > 0.005) {
    throw ConfigError("infeasible spec: pct.hours needs workers without latest-period hours but nobody recurs");
  }
  if (p.latest_zero_given_work > 1.0) {
    throw ConfigError("infeasible spec: pct.hours zero share is too large for the recurrence proportions");
  }
  p.hours_positive.assign(hours.begin() + 1, hours.end());
  p.hours_mu = fit_location("hours", spec.mean("hours"), -6.0 * kHoursSigma, kHoursMax + 6.0 * kHoursSigma,
                            [&](double mu) {
                              double m = 0.0;
                              for (int k = 0; k < 4; ++k) {
                                m += hours[k + 1] * truncated_normal_mean(mu, kHoursSigma, kHoursBrackets[k].lo,
                                                                          kHoursBrackets[k].hi);
                              }
                              return m;
                            });
  const double rate_mean = spec.mean("wages") / spec.mean("hours");
  p.rate_mu = std::log(rate_mean) - 0.5 * kRateSigma * kRateSigma;
  p.seniority_mu = std::log(spec.mean("seniority")) - 0.5 * kSenioritySigma * kSenioritySigma;
  p.offers_rate = spec.mean("offers_per_month");

  // Joint (duration, share) allocation preserving both marginals: short
  // shares need long unemployment to be expressible in whole months.
  std::array<std::array<double, 4>, 3> joint{};
  std::array<double, 3> room = {p.duration[0], p.duration[1], p.duration[2]};
  joint[2][1] = share[1];
  room[2] -= share[1];
  const double mid = room[1] + room[2];
  if (room[2] < -1e-12 || (share[2] > 0.0 && mid <= 0.0)) {
    throw ConfigError("infeasible spec: pct.share low brackets exceed the long-duration proportions");
  }
  for (int d = 1; d < 3; ++d) joint[d][2] = mid > 0.0 ? share[2] * room[d] / mid : 0.0;
  for (int d = 1; d < 3; ++d) room[d] -= joint[d][2];
  const double rest = room[0] + room[1] + room[2];
  if (share[3] > rest + 1e-12) throw ConfigError("infeasible spec: pct.share brackets exceed the cohort");
  for (int d = 0; d < 3; ++d) joint[d][3] = rest > 0.0 ? share[3] * room[d] / rest : 0.0;
  for (int d = 0; d < 3; ++d) {
    joint[d][0] = std::max(0.0, p.duration[d] - joint[d][1] - joint[d][2] - joint[d][3]);
    for (int s = 0; s < 4; ++s) p.share_given_duration[d][s] = p.duration[d] > 0.0 ? joint[d][s] / p.duration[d] : 0.0;
    if (p.duration[d] <= 0.0) p.share_given_duration[d][0] = 1.0;
  }

  const double multi_room = share[2] + share[3];
  if (spells[2] > 0.0) {
    if (multi_room <= 0.0 || spells[2] > multi_room + 0.005) {
      throw ConfigError("infeasible spec: pct.spells_per_period '>1' exceeds the upper share brackets");
    }
    p.multi_given_share = std::min(1.0, spells[2] / multi_room);
  }
  return p;
}

struct Spell {
  int days = 0;
  Date entry, exit;
  int capacity = 0;
};

std::string person_prefix(const Region& r) {
  switch (r.kind) {
    case Region::Kind::Nord: return "nord";
    case Region::Kind::Rhone: return "rhone";
    case Region::Kind::Other: return "r" + std::to_string(r.code);
  }
  return "p";
}

std::vector<RegistrationRecord> generate_person(const Plan& plan, const MarginalSpec& spec, std::uint64_t index,
                                                const std::string& id) {
  SplitMix64 rng = SplitMix64::stream(spec.seed, index);

  // Discrete memberships.
  const int rec = draw(plan.recurrence, rng.uniform());
  int n = rec + 1;
  if (rec == 2 && plan.extra_periods_mean > 0.0) {
    const double q = plan.extra_periods_mean / (1.0 + plan.extra_periods_mean);
    n += static_cast<int>(std::floor(std::log(rng.uniform_open()) / std::log(q)));
  }
  const int dur = draw(plan.duration, rng.uniform());
  const int share = draw(plan.share_given_duration[dur], rng.uniform());
  bool multi = (share >= 2) && rng.uniform() < plan.multi_given_share;
  bool latest_zero = share > 0 && n >= 2 && rng.uniform() < plan.latest_zero_given_work;
  const int hours_bracket = draw(plan.hours_positive, rng.uniform());
  const int age_br = draw(plan.age, rng.uniform());
  const int group = draw(plan.skill, rng.uniform());
  const Skill skill = kSkillGroups[group][rng.bounded(kSkillGroups[group].size())];
  const auto education = static_cast<Education>(draw(plan.education, rng.uniform()));
  std::vector<JobLossReason> reasons(n);
  std::vector<ExitType> exits(n);
  for (int r = 0; r < n; ++r) {
    reasons[r] = kReasonOrder[draw(plan.reason, rng.uniform())];
    exits[r] = kExitOrder[draw(plan.exit, rng.uniform())];
  }
  const int children = rng.uniform() < kChildlessShare ? 0 : 1 + poisson(rng, kExtraChildrenMean);

  const double age = round2_into(
      plan.age_mu + kAgeSigma * truncated_std_normal((kAgeBrackets[age_br].lo - plan.age_mu) / kAgeSigma,
                                                     (kAgeBrackets[age_br].hi - plan.age_mu) / kAgeSigma, rng.uniform_open()),
      age_br == 0 ? kAgeMin - 0.01 : kAgeBrackets[age_br].lo, kAgeBrackets[age_br].hi);
  const double seniority =
      std::max(0.01, round2(std::exp(plan.seniority_mu + kSenioritySigma * bm::quantile(bm::normal(), rng.uniform_open()))));

  // Spell lengths and dates; redrawn until the occasional-work brackets are
  // expressible in whole months.
  const int lo_days[3] = {1, 183, 366};
  const int hi_days[3] = {182, 365, static_cast<int>(kMaxSpellDays)};
  std::vector<Spell> spells(n);
  int months = 0;
  std::vector<int> order;
  for (int attempt = 0;; ++attempt) {
    if (attempt == kAttemptsPerLevel) latest_zero = false;
    if (attempt == 2 * kAttemptsPerLevel) multi = false;
    if (attempt == 3 * kAttemptsPerLevel) {
      throw NumericalError("synthetic individual " + id + " could not be realised");
    }
    const auto& br = kLatestBrackets[dur];
    const double z = truncated_std_normal((std::log(br.lo) - plan.latest_mu) / kLatestSigma,
                                          (std::log(br.hi) - plan.latest_mu) / kLatestSigma, rng.uniform_open());
    spells[n - 1].days = std::clamp(static_cast<int>(std::lround(std::exp(plan.latest_mu + kLatestSigma * z))),
                                    lo_days[dur], hi_days[dur]);
    for (int r = 0; r < n - 1; ++r) {
      const double x = std::exp(plan.earlier_mu + kEarlierSigma * bm::quantile(bm::normal(), rng.uniform_open()));
      spells[r].days = std::clamp(static_cast<int>(std::lround(x)), 1, static_cast<int>(kMaxSpellDays));
    }
    spells[n - 1].exit = spec.window.end - static_cast<int>(rng.bounded(61));
    spells[n - 1].entry = spells[n - 1].exit - spells[n - 1].days;
    for (int r = n - 2; r >= 0; --r) {
      spells[r].exit = spells[r + 1].entry - (15 + static_cast<int>(rng.bounded(106)));
      spells[r].entry = spells[r].exit - spells[r].days;
    }
    double cum_days = 0.0;
    for (auto& s : spells) {
      s.capacity = calendar_months_spanned(s.entry, s.exit);
      cum_days += s.days;
    }
    if (share == 0) break;

    order.clear();
    for (int r = latest_zero ? n - 2 : n - 1; r >= 0; --r) order.push_back(r);
    int cap = 0;
    for (int r : order) cap += spells[r].capacity;
    const double cum_months = cum_days / kDaysPerMonth;
    int m_lo = -1, m_hi = -1;
    for (int m = 1; m <= cap; ++m) {
      if (multi && m < n + 1) continue;
      if (share_bracket(static_cast<double>(m) / cum_months) != kShareCodes[share]) continue;
      if (m_lo < 0) m_lo = m;
      m_hi = m;
    }
    if (m_lo < 0) continue;
    months = m_lo + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(m_hi - m_lo + 1)));
    break;
  }

  // Occasional months per record, latest (or latest earlier) first.
  std::vector<int> per_record(n, 0), spell_count(n, 0);
  int left = months;
  int used = 0;
  for (int r : order) {
    if (left == 0) break;
    per_record[r] = std::min(left, spells[r].capacity);
    left -= per_record[r];
    if (per_record[r] > 0) {
      spell_count[r] = 1;
      ++used;
    }
  }
  if (multi && months > 0) {
    const int top = std::min(months, n + 3);
    const int target = n + 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(top - n)));
    int extra = target - used;
    while (extra > 0) {
      for (int r : order) {
        if (extra > 0 && spell_count[r] > 0 && spell_count[r] < per_record[r]) {
          ++spell_count[r];
          --extra;
        }
      }
    }
  }

  double h = 0.0;
  if (share > 0 && !latest_zero) {
    const auto& br = kHoursBrackets[hours_bracket];
    const double z = truncated_std_normal((br.lo - plan.hours_mu) / kHoursSigma, (br.hi - plan.hours_mu) / kHoursSigma,
                                          rng.uniform_open());
    h = round2_into(plan.hours_mu + kHoursSigma * z, br.lo, br.hi);
  }
  const double earlier_base = h > 0.0 ? h : 20.0 + 140.0 * rng.uniform();
  const double rate = std::exp(plan.rate_mu + kRateSigma * bm::quantile(bm::normal(), rng.uniform_open()));

  std::vector<RegistrationRecord> out(n);
  for (int r = 0; r < n; ++r) {
    auto& rec_out = out[r];
    rec_out.person_id = id;
    rec_out.region = spec.region;
    rec_out.entry_date = spells[r].entry;
    rec_out.exit_date = spells[r].exit;
    rec_out.job_loss_reason = reasons[r];
    rec_out.exit_type = exits[r];
    rec_out.seniority_years = seniority;
    rec_out.age_years = std::max(14.0, round2(age - (spells[n - 1].entry - spells[r].entry) / kDaysPerYear));
    if (r == n - 1) rec_out.age_years = age;
    rec_out.education = education;
    rec_out.skill = skill;
    rec_out.children = children;
    rec_out.job_offers = poisson(rng, plan.offers_rate * spells[r].days / kDaysPerMonth);

    double record_max = 0.0;
    for (int k = 0; k < per_record[r]; ++k) {
      double hours;
      if (r == n - 1) {
        hours = k == 0 ? h : std::clamp(round2(h * (0.9 + 0.1 * rng.uniform())), 0.01, h);
      } else {
        hours = std::max(0.01, round2(earlier_base * (0.5 + 0.5 * rng.uniform())));
      }
      record_max = std::max(record_max, hours);
      OccasionalMonth m;
      m.hours = hours;
      m.wage = round2(hours * rate);
      m.spell_index = std::min(k + 1, spell_count[r]);
      if (spec.missing_hours_rate > 0.0 && rng.uniform() < spec.missing_hours_rate) m.hours.reset();
      rec_out.occasional_months.push_back(m);
    }
    rec_out.hour_range_class =
        per_record[r] == 0 ? HourRange::Unknown : (record_max <= 78.0 ? HourRange::LE78 : HourRange::GT78);
  }
  return out;
}

}  // namespace

const std::vector<MarginalBlock>& marginal_blocks() { return kBlocks; }
const std::vector<MeanTarget>& mean_targets() { return kMeans; }

double MarginalSpec::mean(std::string_view name) const {
  const auto it = means.find(name);
  if (it == means.end()) throw ConfigError("marginal spec: missing mean." + std::string(name));
  return it->second;
}

const std::vector<double>& MarginalSpec::block(std::string_view name) const {
  const auto it = proportions.find(name);
  if (it == proportions.end()) throw ConfigError("marginal spec: missing pct." + std::string(name));
  return it->second;
}

void MarginalSpec::check() const {
  if (cohort_size < 1) throw ConfigError("marginal spec: cohort_size must be at least 1");
  if (!(missing_hours_rate >= 0.0 && missing_hours_rate < 1.0)) {
    throw ConfigError("marginal spec: missing_hours_rate must be in [0, 1)");
  }
  for (const auto& b : kBlocks) {
    const auto& p = block(b.name);
    if (p.size() != b.categories.size()) {
      throw ConfigError("marginal spec: pct." + std::string(b.name) + " needs " +
                        std::to_string(b.categories.size()) + " values");
    }
    double sum = 0.0;
    for (double x : p) {
      if (!(x >= 0.0)) throw ConfigError("marginal spec: pct." + std::string(b.name) + " has a negative value");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 0.005 + 1e-12) {
      throw ConfigError("marginal spec: pct." + std::string(b.name) + " sums to " + textio::fixed(100.0 * sum, 2) +
                        " percent");
    }
  }
  for (const auto& m : kMeans) {
    if (!m.calibrated) continue;
    if (!(mean(m.name) > 0.0)) throw ConfigError("marginal spec: mean." + std::string(m.name) + " must be positive");
  }
}

MarginalSpec parse_marginal_spec(std::string_view text) {
  MarginalSpec spec;
  int line_no = 0;
  for (const auto& raw : textio::lines(text)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t") - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) {
      throw ConfigError("marginal spec line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "region") {
        spec.region = parse_region(value);
      } else if (key == "population") {
        spec.population = textio::parse_int(value, key);
      } else if (key == "cohort_size") {
        spec.cohort_size = textio::parse_int(value, key);
      } else if (key == "seed") {
        spec.seed = static_cast<std::uint64_t>(textio::parse_int(value, key));
      } else if (key == "window_end") {
        spec.window.end = Date::parse(value);
      } else if (key == "missing_hours_rate") {
        spec.missing_hours_rate = textio::parse_double(value, key);
      } else if (key.rfind("mean.", 0) == 0) {
        const auto name = key.substr(5);
        if (std::none_of(kMeans.begin(), kMeans.end(), [&](const auto& m) { return m.name == name; })) {
          throw ConfigError("unknown key '" + key + "'");
        }
        spec.means[name] = textio::parse_double(value, key);
      } else if (key.rfind("pct.", 0) == 0) {
        const auto name = key.substr(4);
        if (std::none_of(kBlocks.begin(), kBlocks.end(), [&](const auto& b) { return b.name == name; })) {
          throw ConfigError("unknown key '" + key + "'");
        }
        std::vector<double> values;
        std::istringstream is(value);
        std::string tok;
        while (is >> tok) values.push_back(textio::parse_double(tok, key) / 100.0);
        spec.proportions[name] = std::move(values);
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError("marginal spec line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw ConfigError("marginal spec line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  spec.check();
  return spec;
}

std::string write_marginal_spec(const MarginalSpec& spec) {
  std::ostringstream os;
  os << "region = " << to_string(spec.region) << '\n';
  if (spec.population > 0) os << "population = " << spec.population << '\n';
  os << "cohort_size = " << spec.cohort_size << '\n';
  os << "seed = " << spec.seed << '\n';
  os << "window_end = " << spec.window.end.iso() << '\n';
  os << "missing_hours_rate = " << textio::exact(spec.missing_hours_rate) << '\n';
  for (const auto& m : kMeans) {
    const auto it = spec.means.find(m.name);
    if (it != spec.means.end()) os << "mean." << m.name << " = " << textio::exact(it->second) << '\n';
  }
  for (const auto& b : kBlocks) {
    const auto it = spec.proportions.find(b.name);
    if (it == spec.proportions.end()) continue;
    os << "pct." << b.name << " =";
    for (double x : it->second) {
      std::string v = textio::fixed(x * 100.0, 6);
      v.erase(v.find_last_not_of('0') + 1);
      if (v.back() == '.') v.pop_back();
      os << ' ' << v;
    }
    os << '\n';
  }
  return os.str();
}

std::vector<RegistrationRecord> generate(const MarginalSpec& spec) {
  const Plan plan = make_plan(spec);
  const std::string prefix = person_prefix(spec.region);
  const int width = std::max<int>(6, static_cast<int>(std::to_string(spec.cohort_size).size()));
  std::vector<RegistrationRecord> out;
  out.reserve(static_cast<std::size_t>(spec.cohort_size * 2));
  for (long long i = 0; i < spec.cohort_size; ++i) {
    std::string num = std::to_string(i + 1);
    const std::string id = prefix + "-" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
    auto person = generate_person(plan, spec, static_cast<std::uint64_t>(i), id);
    for (auto& r : person) out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------

bool CalibrationReport::all_pass() const {
  return std::all_of(lines.begin(), lines.end(), [](const auto& l) { return l.pass.value_or(true); });
}

std::vector<const CalibrationLine*> CalibrationReport::flagged() const {
  std::vector<const CalibrationLine*> out;
  for (const auto& l : lines) {
    if (l.pass && !*l.pass) out.push_back(&l);
  }
  return out;
}

std::string CalibrationReport::to_text() const {
  std::ostringstream os;
  os << "block,category,target,observed,tolerance,status\n";
  for (const auto& l : lines) {
    os << l.block << ',' << l.category << ',' << textio::fixed(l.target, 4) << ',' << textio::fixed(l.observed, 4)
       << ',' << textio::fixed(l.tolerance, 4) << ',' << (!l.pass ? "reported" : (*l.pass ? "ok" : "FLAG")) << '\n';
  }
  for (const auto& note : notes) os << "# " << note << '\n';
  return os.str();
}

CalibrationReport validate(std::span<const Individual> individuals, const MarginalSpec& spec) {
  CalibrationReport report;
  report.n = static_cast<long long>(individuals.size());
  if (individuals.empty()) {
    report.notes.push_back("empty cohort: nothing to compare");
    return report;
  }
  const double n = static_cast<double>(individuals.size());
  std::vector<FeatureVector> features;
  features.reserve(individuals.size());
  for (const auto& ind : individuals) features.push_back(build_features(ind));

  auto category = [](std::string_view block, const Individual& ind, const FeatureVector& f) -> int {
    if (block == "duration") {
      const auto b = duration_bracket(f[Feature::LatestDuration]);
      return b == "inf6" ? 0 : (b == "inf12" ? 1 : 2);
    }
    if (block == "recurrence") return std::min(ind.n_periods, 3) - 1;
    if (block == "age") return f[Feature::Age] <= 35.0 ? 0 : (f[Feature::Age] <= 55.0 ? 1 : 2);
    if (block == "skill") return skill_group(ind.skill);
    if (block == "education") return static_cast<int>(ind.education);
    if (block == "reason") {
      return static_cast<int>(std::find(kReasonOrder.begin(), kReasonOrder.end(), ind.job_loss_reason) -
                              kReasonOrder.begin());
    }
    if (block == "exit") {
      const auto it = std::find(kExitOrder.begin(), kExitOrder.end(), ind.exit_type);
      return it == kExitOrder.end() ? -1 : static_cast<int>(it - kExitOrder.begin());
    }
    if (block == "hours") {
      const auto b = hours_bracket(f[Feature::MaxHours]);
      const std::array<std::string_view, 5> codes = {"0ar", "arm39", "ar78", "ar117", "arp117"};
      return static_cast<int>(std::find(codes.begin(), codes.end(), b) - codes.begin());
    }
    if (block == "spells_per_period") {
      const double v = f[Feature::OccasionalSpellsPerPeriod];
      return v <= 0.0 ? 0 : (v <= 1.0 ? 1 : 2);
    }
    if (block == "share") {
      const auto b = share_bracket(f[Feature::OccasionalMonthsPerUnempMonth]);
      return static_cast<int>(std::find(kShareCodes.begin(), kShareCodes.end(), b) - kShareCodes.begin());
    }
    return -1;
  };

  bool widened = false;
  for (const auto& b : kBlocks) {
    const auto& target = spec.block(b.name);
    std::vector<long long> counts(b.categories.size(), 0);
    for (std::size_t i = 0; i < individuals.size(); ++i) {
      const int c = category(b.name, individuals[i], features[i]);
      if (c >= 0 && c < static_cast<int>(counts.size())) ++counts[c];
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
      CalibrationLine line;
      line.block = std::string(b.name);
      line.category = std::string(b.categories[c]);
      line.target = target[c];
      line.observed = static_cast<double>(counts[c]) / n;
      line.tolerance = std::max(0.015, 3.0 * std::sqrt(target[c] * (1.0 - target[c]) / n));
      if (line.tolerance > 0.015) widened = true;
      line.pass = std::abs(line.observed - line.target) <= line.tolerance + 1e-12;
      report.lines.push_back(std::move(line));
    }
  }

  // Relative tolerance: 5 %, or three standard errors of the sample mean.
  auto measure = [&](auto get) {
    double s = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < individuals.size(); ++i) {
      const double v = get(individuals[i], features[i]);
      s += v;
      ss += v * v;
    }
    const double mean = s / n;
    const double var = std::max(0.0, ss / n - mean * mean);
    return std::pair{mean, std::sqrt(var / n)};
  };
  bool means_widened = false;
  for (const auto& m : kMeans) {
    const auto it = spec.means.find(m.name);
    if (it == spec.means.end()) continue;
    std::pair<double, double> obs{0.0, 0.0};
    if (m.name == "duration") obs = measure([](const Individual& d, const FeatureVector&) { return d.latest_duration_days; });
    if (m.name == "cumulated") obs = measure([](const Individual& d, const FeatureVector&) { return d.cumulated_duration_days; });
    if (m.name == "periods") obs = measure([](const Individual& d, const FeatureVector&) { return double(d.n_periods); });
    if (m.name == "jobs") obs = measure([](const Individual&, const FeatureVector& f) { return f[Feature::OccasionalSpellsPerPeriod]; });
    if (m.name == "jobs_per_unemp") obs = measure([](const Individual&, const FeatureVector& f) { return f[Feature::OccasionalMonthsPerUnempMonth]; });
    if (m.name == "jobs_per_year") obs = measure([](const Individual&, const FeatureVector& f) { return f[Feature::OccasionalSpellsPerYear]; });
    if (m.name == "offers_per_month") obs = measure([](const Individual&, const FeatureVector& f) { return f[Feature::OffersPerMonth]; });
    if (m.name == "wages") obs = measure([](const Individual& d, const FeatureVector&) { return d.max_monthly_wage; });
    if (m.name == "hours") obs = measure([](const Individual& d, const FeatureVector&) { return d.max_monthly_hours; });
    if (m.name == "age") obs = measure([](const Individual& d, const FeatureVector&) { return d.age_years; });
    if (m.name == "seniority") obs = measure([](const Individual& d, const FeatureVector&) { return d.seniority_years; });
    CalibrationLine line;
    line.block = "mean";
    line.category = std::string(m.name);
    line.target = it->second;
    line.observed = obs.first;
    line.tolerance = std::max(0.05, 3.0 * obs.second / std::abs(it->second));
    if (m.calibrated) {
      if (line.tolerance > 0.05) means_widened = true;
      line.pass = std::abs(obs.first - it->second) <= line.tolerance * std::abs(it->second);
    }
    report.lines.push_back(std::move(line));
  }
  if (widened || means_widened) {
    report.notes.push_back("N = " + std::to_string(report.n) +
                           ": some tolerances widened to three standard errors of the observed value");
  }
  report.notes.push_back("jobs, jobs_per_unemp and jobs_per_year are reported only: read as occasional spells per "
                         "period, occasional months per unemployment month and occasional spells per year");
  return report;
}

CalibrationReport validate(std::span<const RegistrationRecord> records, const MarginalSpec& spec) {
  const auto result = ingest(records, spec.window);
  return validate(std::span<const Individual>(result.individuals), spec);
}

}  // namespace segmap
