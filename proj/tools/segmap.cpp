// segmap command-line tool. Exit codes: 0 success, 2 config error,
// 3 data error, 4 numerical failure.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "segmap/error.hpp"
#include "segmap/report.hpp"
#include "segmap/synth.hpp"
#include "segmap/textio.hpp"

namespace {

using namespace segmap;

struct ConfigFlags {
  std::string path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* sub) {
    sub->add_option("--config", path, "key = value config file; flags override it");
    for (const auto& key : config_keys()) {
      std::string flag = "--" + std::string(key.name);
      std::replace(flag.begin() + 2, flag.end(), '_', '-');
      const std::string name(key.name);
      sub->add_option_function<std::string>(
          flag, [this, name](const std::string& v) { overrides[name] = v; }, std::string(key.help));
    }
  }

  PipelineConfig resolve(bool require_input) const {
    PipelineConfig c = path.empty() ? PipelineConfig{} : parse_config(textio::read_file(path));
    for (const auto& [k, v] : overrides) apply_config_entry(c, k, v);
    c.validate(require_input);
    return c;
  }
};

void write_into(const std::string& dir, const std::string& name, const std::string& content) {
  std::filesystem::create_directories(dir);
  textio::write_file((std::filesystem::path(dir) / name).string(), content);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segmap: collate unemployment registers, train Kohonen maps, group and interpret classes"};
  app.require_subcommand(1);
  ConfigFlags flags;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic register from a marginal spec");
  std::string spec_path, records_out, calibration_out;
  synth->add_option("--spec", spec_path, "marginal spec file")->required();
  synth->add_option("--out", records_out, "register CSV to write")->required();
  synth->add_option("--calibration", calibration_out, "also write the calibration report here");
  flags.attach(synth);

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "validate, impute and collate register records");
  std::string records_in, individuals_out;
  ingest_cmd->add_option("--records", records_in, "register CSV")->required();
  ingest_cmd->add_option("--out", individuals_out, "individuals CSV to write")->required();
  flags.attach(ingest_cmd);

  // features
  auto* features_cmd = app.add_subcommand("features", "derive the 11 classification variables");
  std::string individuals_in, features_out;
  features_cmd->add_option("--individuals", individuals_in, "individuals CSV")->required();
  features_cmd->add_option("--out", features_out, "features CSV to write")->required();
  flags.attach(features_cmd);

  // train
  auto* train = app.add_subcommand("train", "train the map and classify every individual");
  std::string features_in, model_out, assignment_out, quality_out;
  train->add_option("--features", features_in, "features CSV")->required();
  train->add_option("--model", model_out, "model file to write")->required();
  train->add_option("--assignment", assignment_out, "assignment CSV to write")->required();
  train->add_option("--quality", quality_out, "quality CSV to write");
  flags.attach(train);

  // cluster, mca, cda, report share their inputs
  std::string model_in, assignment_in, superclasses_in, out_dir;
  auto* cluster = app.add_subcommand("cluster", "Ward super-classes, connectivity and profile table");
  cluster->add_option("--model", model_in, "model file")->required();
  cluster->add_option("--features", features_in, "features CSV")->required();
  cluster->add_option("--assignment", assignment_in, "assignment CSV")->required();
  cluster->add_option("--out-dir", out_dir, "directory for the outputs")->required();
  flags.attach(cluster);

  auto* mca = app.add_subcommand("mca", "multiple correspondence analysis of the qualitative profiles");
  mca->add_option("--individuals", individuals_in, "individuals CSV")->required();
  mca->add_option("--features", features_in, "features CSV")->required();
  mca->add_option("--assignment", assignment_in, "assignment CSV")->required();
  mca->add_option("--superclasses", superclasses_in, "super-class file")->required();
  mca->add_option("--out-dir", out_dir, "directory for the outputs")->required();
  flags.attach(mca);

  auto* cda = app.add_subcommand("cda", "canonical discriminant analysis against the super-classes");
  cda->add_option("--features", features_in, "features CSV")->required();
  cda->add_option("--assignment", assignment_in, "assignment CSV")->required();
  cda->add_option("--superclasses", superclasses_in, "super-class file")->required();
  cda->add_option("--out-dir", out_dir, "directory for the outputs")->required();
  flags.attach(cda);

  auto* report = app.add_subcommand("report", "composition tables and code-vector plate");
  report->add_option("--individuals", individuals_in, "individuals CSV")->required();
  report->add_option("--features", features_in, "features CSV")->required();
  report->add_option("--assignment", assignment_in, "assignment CSV")->required();
  report->add_option("--superclasses", superclasses_in, "super-class file")->required();
  report->add_option("--model", model_in, "model file")->required();
  report->add_option("--out-dir", out_dir, "directory for the outputs")->required();
  flags.attach(report);

  auto* run = app.add_subcommand("run", "run every stage and write a bundle with a manifest");
  flags.attach(run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      const auto config = flags.resolve(false);
      MarginalSpec spec = parse_marginal_spec(textio::read_file(spec_path));
      spec.seed = config.seed;
      spec.window.end = config.window_end;
      if (config.synth_n > 0) spec.cohort_size = config.synth_n;
      const auto records = generate(spec);
      textio::write_file(records_out, write_records_csv(records));
      if (!calibration_out.empty()) {
        const auto rep = validate(std::span<const RegistrationRecord>(records), spec);
        textio::write_file(calibration_out, rep.to_text());
        for (const auto* line : rep.flagged()) {
          std::cerr << "calibration flag: " << line->block << ' ' << line->category << '\n';
        }
      }
    } else if (ingest_cmd->parsed()) {
      const auto config = flags.resolve(false);
      textio::write_file(individuals_out, stage_ingest(textio::read_file(records_in), config));
    } else if (features_cmd->parsed()) {
      flags.resolve(false);
      textio::write_file(features_out, stage_features(textio::read_file(individuals_in)));
    } else if (train->parsed()) {
      const auto config = flags.resolve(false);
      const auto out = stage_train(textio::read_file(features_in), config);
      textio::write_file(model_out, out.model);
      textio::write_file(assignment_out, out.assignment);
      if (!quality_out.empty()) textio::write_file(quality_out, out.quality);
    } else if (cluster->parsed()) {
      const auto config = flags.resolve(false);
      const auto out = stage_cluster(textio::read_file(model_in), textio::read_file(features_in),
                                     textio::read_file(assignment_in), config);
      write_into(out_dir, "merge_tree.txt", out.merge_tree);
      write_into(out_dir, "superclasses.txt", out.superclasses);
      write_into(out_dir, "connectivity.csv", out.connectivity);
      write_into(out_dir, "profile.csv", out.profile);
    } else if (mca->parsed()) {
      const auto config = flags.resolve(false);
      const auto out = stage_mca(textio::read_file(individuals_in), textio::read_file(features_in),
                                 textio::read_file(assignment_in), textio::read_file(superclasses_in), config);
      write_into(out_dir, "mca_eigenvalues.csv", out.eigenvalues);
      write_into(out_dir, "mca_coordinates.csv", out.coordinates);
      if (!out.plane_1_2.empty()) write_into(out_dir, "mca_plane_1_2.svg", out.plane_1_2);
      if (!out.plane_2_3.empty()) write_into(out_dir, "mca_plane_2_3.svg", out.plane_2_3);
      for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
    } else if (cda->parsed()) {
      const auto config = flags.resolve(false);
      const auto out = stage_cda(textio::read_file(features_in), textio::read_file(assignment_in),
                                 textio::read_file(superclasses_in), config);
      write_into(out_dir, "cda_eigenvalues.csv", out.eigenvalues);
      write_into(out_dir, "cda_coefficients.csv", out.coefficients);
      write_into(out_dir, "cda_class_means.csv", out.class_means);
      write_into(out_dir, "cda_structure.csv", out.structure);
    } else if (report->parsed()) {
      flags.resolve(false);
      const auto out = stage_report(textio::read_file(individuals_in), textio::read_file(features_in),
                                    textio::read_file(assignment_in), textio::read_file(superclasses_in),
                                    textio::read_file(model_in));
      write_into(out_dir, "composition.txt", out.composition);
      write_into(out_dir, "code_vectors.svg", out.plate);
    } else if (run->parsed()) {
      const auto bundle = run_pipeline(flags.resolve(true));
      for (const auto& f : bundle.files) std::cout << f.sha256 << "  " << f.name << '\n';
      for (const auto& w : bundle.warnings) std::cerr << "warning: " << w << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
