#include "doctest.h"

#include <set>
#include <string>

#include "segmap/error.hpp"
#include "segmap/synth.hpp"
#include "segmap/textio.hpp"

using namespace segmap;

namespace {

MarginalSpec load(const std::string& name) {
  return parse_marginal_spec(textio::read_file(std::string(SEGMAP_DATA_DIR) + "/" + name));
}

bool throws_config_naming(const MarginalSpec& spec, const std::string& needle) {
  try {
    generate(spec);
  } catch (const ConfigError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_CASE("spec files parse and round-trip") {
  for (const char* name : {"nord.spec", "rhone.spec"}) {
    const auto spec = load(name);
    CHECK_NOTHROW(spec.check());
    const auto again = parse_marginal_spec(write_marginal_spec(spec));
    CHECK(write_marginal_spec(again) == write_marginal_spec(spec));
  }
  const auto nord = load("nord.spec");
  CHECK(nord.region == Region::nord());
  CHECK(nord.mean("duration") == 476.52);
  CHECK(nord.block("hours")[0] == doctest::Approx(0.676));
}

TEST_CASE("malformed specs are config errors") {
  CHECK_THROWS_AS(parse_marginal_spec("region = Nord\nbogus = 1\n"), ConfigError);
  auto spec = load("nord.spec");
  spec.proportions["age"] = {0.5, 0.2, 0.2};
  CHECK_THROWS_AS(spec.check(), ConfigError);
  spec = load("nord.spec");
  spec.proportions["age"] = {0.5, 0.5};
  CHECK_THROWS_AS(spec.check(), ConfigError);
}

TEST_CASE("unreachable means name the variable") {
  auto spec = load("nord.spec");
  spec.cohort_size = 50;
  spec.means["duration"] = 20.0;
  CHECK(throws_config_naming(spec, "mean.duration"));
  spec = load("nord.spec");
  spec.cohort_size = 50;
  spec.means["age"] = 90.0;
  CHECK(throws_config_naming(spec, "mean.age"));
}

TEST_CASE("generation is a pure function of the spec") {
  auto spec = load("rhone.spec");
  spec.cohort_size = 400;
  const auto a = write_records_csv(generate(spec));
  const auto b = write_records_csv(generate(spec));
  CHECK(a == b);
  spec.seed = 2;
  CHECK(write_records_csv(generate(spec)) != a);
}

TEST_CASE("generated registers satisfy the record invariants") {
  auto spec = load("nord.spec");
  spec.cohort_size = 1500;
  spec.missing_hours_rate = 0.05;
  const auto records = generate(spec);
  const Window w{spec.window.end};
  std::set<std::string> people;
  for (const auto& r : records) {
    CHECK_NOTHROW(validate_record(r, w));
    CHECK(effective_exit(r, w) <= w.end);
    people.insert(r.person_id);
  }
  CHECK(people.size() == 1500);
  CHECK(people.count("nord-000001") == 1);
  const auto res = ingest(records, w);
  CHECK(res.individuals.size() == 1500);
  CHECK(res.imputed_cells > 0);
}

TEST_CASE("small cohorts calibrate within their widened tolerance") {
  for (const char* name : {"nord.spec", "rhone.spec"}) {
    auto spec = load(name);
    spec.cohort_size = 3000;
    const auto rep = validate(generate(spec), spec);
    CHECK_MESSAGE(rep.all_pass(), rep.to_text());
    CHECK(rep.n == 3000);
    CHECK_FALSE(rep.notes.empty());
  }
}

TEST_CASE("calibration report flags a wrong target") {
  auto spec = load("nord.spec");
  spec.cohort_size = 2000;
  const auto records = generate(spec);
  spec.means["hours"] = 80.0;
  const auto rep = validate(records, spec);
  REQUIRE_FALSE(rep.all_pass());
  bool found = false;
  for (const auto* line : rep.flagged()) found = found || line->category == "hours";
  CHECK(found);
  CHECK(rep.to_text().find("FLAG") != std::string::npos);
}
