#include "segmap/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "segmap/cda.hpp"
#include "segmap/error.hpp"
#include "segmap/synth.hpp"
#include "segmap/textio.hpp"

namespace segmap {

namespace fs = std::filesystem;

namespace {

const std::vector<ConfigKey> kConfigKeys = {
    {"input", "register CSV to analyse (exclusive with synth_spec)"},
    {"synth_spec", "marginal spec file; a synthetic cohort is generated from it"},
    {"synth_n", "synthetic cohort size; 0 keeps the spec's cohort_size"},
    {"window_end", "observation window end, YYYY-MM-DD"},
    {"grid_rows", "map rows, 1..100"},
    {"grid_cols", "map columns, 1..100"},
    {"steps", "training presentations; 0 means 20 per individual"},
    {"eps0", "initial learning rate, (0, 1)"},
    {"eps_min", "final learning rate, (0, eps0]"},
    {"radius0", "initial neighbourhood radius, 0..max(grid_rows, grid_cols)"},
    {"standardize", "z-score the features before training (true/false)"},
    {"k", "number of super-classes, 1..grid_rows*grid_cols"},
    {"ward_weights", "unit (every code vector counts once) or size (weighted by class size)"},
    {"mca_active", "comma-separated active qualitative variables"},
    {"mca_supplementary", "comma-separated supplementary qualitative variables"},
    {"mca_axes", "axes written to the coordinate table, 1..50"},
    {"cda_ridge", "ridge factor used when the within-class scatter is ill-conditioned; 0 disables"},
    {"output_dir", "bundle directory"},
    {"seed", "seed for the synthetic cohort, map initialisation and training"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

long long int_value(std::string_view key, std::string_view value) {
  try {
    return textio::parse_int(value, key);
  } catch (const Error& e) {
    throw ConfigError(std::string("config key '") + std::string(key) + "': " + e.what());
  }
}

double double_value(std::string_view key, std::string_view value) {
  try {
    return textio::parse_double(value, key);
  } catch (const Error& e) {
    throw ConfigError(std::string("config key '") + std::string(key) + "': " + e.what());
  }
}

std::vector<QualVar> var_list(std::string_view value) {
  std::vector<QualVar> out;
  for (const auto& tok : textio::split(value, ',')) {
    const auto name = trim(tok);
    if (!name.empty()) out.push_back(parse_qual_var(name));
  }
  return out;
}

std::string var_list_text(const std::vector<QualVar>& vars) {
  std::string out;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) out += ',';
    out += qual_var_name(vars[i]);
  }
  return out;
}

Matrix to_matrix(const FeatureTable& t) {
  Matrix m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) m(i, j) = t.rows[i].values[j];
  }
  return m;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Observation super-class labels after checking that the three tables line up.
std::vector<int> labels_for(const FeatureTable& features, const Assignment& assignment,
                            const SuperClassification& sc) {
  if (assignment.unit.size() != features.rows.size()) {
    throw DataError("assignment has " + std::to_string(assignment.unit.size()) + " rows but the feature table has " +
                    std::to_string(features.rows.size()));
  }
  return observation_labels(sc, assignment);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config.
// ---------------------------------------------------------------------------

const std::vector<ConfigKey>& config_keys() { return kConfigKeys; }

std::int64_t PipelineConfig::total_steps(long long n_individuals) const {
  return steps > 0 ? steps : 20 * static_cast<std::int64_t>(n_individuals);
}

void PipelineConfig::validate(bool require_input) const {
  if (require_input && input.empty() == synth_spec.empty()) {
    throw ConfigError("exactly one of 'input' and 'synth_spec' must be set");
  }
  if (!input.empty() && !synth_spec.empty()) throw ConfigError("'input' and 'synth_spec' are exclusive");
  if (synth_n < 0) throw ConfigError("synth_n must be non-negative");
  if (grid.n_rows < 1 || grid.n_rows > 100 || grid.n_cols < 1 || grid.n_cols > 100) {
    throw ConfigError("grid_rows and grid_cols must be in 1..100");
  }
  if (steps < 0) throw ConfigError("steps must be non-negative");
  if (!(eps0 > 0.0 && eps0 < 1.0)) throw ConfigError("eps0 must be in (0, 1)");
  if (!(eps_min > 0.0 && eps_min <= eps0)) throw ConfigError("eps_min must be in (0, eps0]");
  if (radius0 < 0 || radius0 > std::max(grid.n_rows, grid.n_cols)) {
    throw ConfigError("radius0 must be in 0..max(grid_rows, grid_cols)");
  }
  if (k < 1 || k > grid.units()) throw ConfigError("k must be in 1..grid_rows*grid_cols");
  if (mca_active.empty()) throw ConfigError("mca_active must name at least one variable");
  std::set<QualVar> seen;
  for (QualVar v : mca_active) {
    if (!seen.insert(v).second) throw ConfigError("variable '" + std::string(qual_var_name(v)) + "' listed twice");
  }
  for (QualVar v : mca_supplementary) {
    if (!seen.insert(v).second) {
      throw ConfigError("variable '" + std::string(qual_var_name(v)) + "' is both active and supplementary, or listed twice");
    }
  }
  if (mca_axes < 1 || mca_axes > 50) throw ConfigError("mca_axes must be in 1..50");
  if (!(cda_ridge >= 0.0)) throw ConfigError("cda_ridge must be non-negative");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

void apply_config_entry(PipelineConfig& c, std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  if (key == "input") {
    c.input = value;
  } else if (key == "synth_spec") {
    c.synth_spec = value;
  } else if (key == "synth_n") {
    c.synth_n = int_value(key, value);
  } else if (key == "window_end") {
    try {
      c.window_end = Date::parse(value);
    } catch (const Error& e) {
      throw ConfigError(std::string("config key 'window_end': ") + e.what());
    }
  } else if (key == "grid_rows") {
    c.grid.n_rows = static_cast<int>(int_value(key, value));
  } else if (key == "grid_cols") {
    c.grid.n_cols = static_cast<int>(int_value(key, value));
  } else if (key == "steps") {
    c.steps = int_value(key, value);
  } else if (key == "eps0") {
    c.eps0 = double_value(key, value);
  } else if (key == "eps_min") {
    c.eps_min = double_value(key, value);
  } else if (key == "radius0") {
    c.radius0 = static_cast<int>(int_value(key, value));
  } else if (key == "standardize") {
    if (value == "true" || value == "1" || value == "yes") {
      c.standardize = true;
    } else if (value == "false" || value == "0" || value == "no") {
      c.standardize = false;
    } else {
      throw ConfigError("config key 'standardize': expected true or false");
    }
  } else if (key == "k") {
    c.k = static_cast<int>(int_value(key, value));
  } else if (key == "ward_weights") {
    if (value == "unit") {
      c.ward_size_weights = false;
    } else if (value == "size") {
      c.ward_size_weights = true;
    } else {
      throw ConfigError("config key 'ward_weights': expected unit or size");
    }
  } else if (key == "mca_active") {
    c.mca_active = var_list(value);
  } else if (key == "mca_supplementary") {
    c.mca_supplementary = var_list(value);
  } else if (key == "mca_axes") {
    c.mca_axes = static_cast<int>(int_value(key, value));
  } else if (key == "cda_ridge") {
    c.cda_ridge = double_value(key, value);
  } else if (key == "output_dir") {
    c.output_dir = value;
  } else if (key == "seed") {
    const auto s = int_value(key, value);
    if (s < 0) throw ConfigError("config key 'seed' must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig c;
  int line_no = 0;
  for (const auto& raw : textio::lines(text)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_config_entry(c, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return c;
}

std::string write_config(const PipelineConfig& c) {
  std::ostringstream os;
  os << "input = " << c.input << '\n'
     << "synth_spec = " << c.synth_spec << '\n'
     << "synth_n = " << c.synth_n << '\n'
     << "window_end = " << c.window_end.iso() << '\n'
     << "grid_rows = " << c.grid.n_rows << '\n'
     << "grid_cols = " << c.grid.n_cols << '\n'
     << "steps = " << c.steps << '\n'
     << "eps0 = " << textio::shortest(c.eps0) << '\n'
     << "eps_min = " << textio::shortest(c.eps_min) << '\n'
     << "radius0 = " << c.radius0 << '\n'
     << "standardize = " << (c.standardize ? "true" : "false") << '\n'
     << "k = " << c.k << '\n'
     << "ward_weights = " << (c.ward_size_weights ? "size" : "unit") << '\n'
     << "mca_active = " << var_list_text(c.mca_active) << '\n'
     << "mca_supplementary = " << var_list_text(c.mca_supplementary) << '\n'
     << "mca_axes = " << c.mca_axes << '\n'
     << "cda_ridge = " << textio::shortest(c.cda_ridge) << '\n'
     << "output_dir = " << c.output_dir << '\n'
     << "seed = " << c.seed << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Stages.
// ---------------------------------------------------------------------------

std::string stage_ingest(std::string_view records_csv, const PipelineConfig& config) {
  const auto records = read_records_csv(records_csv);
  const auto result = ingest(records, Window{config.window_end});
  return write_individuals_csv(result.individuals);
}

std::string stage_features(std::string_view individuals_csv) {
  const auto individuals = read_individuals_csv(individuals_csv);
  FeatureTable table;
  for (const auto& ind : individuals) {
    table.person_ids.push_back(ind.person_id);
    table.rows.push_back(build_features(ind));
  }
  return write_features_csv(table);
}

TrainOutput stage_train(std::string_view features_csv, const PipelineConfig& config) {
  const auto table = read_features_csv(features_csv);
  if (table.rows.empty()) throw DataError("feature table is empty");
  Matrix data = to_matrix(table);
  Standardizer standardizer;
  if (config.standardize) {
    standardizer = Standardizer::fit(data);
    data = standardizer.apply(data);
  }
  TrainingSchedule schedule;
  schedule.total_steps = config.total_steps(static_cast<long long>(table.rows.size()));
  schedule.eps0 = config.eps0;
  schedule.eps_min = config.eps_min;
  schedule.radius0 = config.radius0;
  schedule.seed = config.seed;
  SomModel model = som_train(som_init(config.grid, data, config.seed), data, schedule);
  model.standardizer = standardizer;

  const SomQuality q = som_quality(model.grid, data);
  std::ostringstream quality;
  quality << "metric,step,value\n";
  for (const auto& s : model.log) quality << "quantization_error," << s.step << ',' << textio::exact(s.quantization_error) << '\n';
  quality << "final_quantization_error," << schedule.total_steps << ',' << textio::exact(q.quantization_error) << '\n';
  quality << "topographic_error," << schedule.total_steps << ',' << textio::exact(q.topographic_error) << '\n';

  TrainOutput out;
  out.model = write_som_model(model);
  out.quality = quality.str();
  out.assignment = write_assignment(table.person_ids, som_classify(model.grid, data));
  return out;
}

ClusterOutput stage_cluster(std::string_view model_text, std::string_view features_csv, std::string_view assignment_text,
                            const PipelineConfig& config) {
  const SomModel model = read_som_model(model_text);
  const auto table = read_features_csv(features_csv);
  const Assignment assignment = read_assignment(assignment_text);
  if (assignment.unit.size() != table.rows.size()) throw DataError("assignment and feature table differ in length");

  std::vector<double> weights;
  if (config.ward_size_weights) {
    weights.assign(static_cast<std::size_t>(model.grid.units()), 0.0);
    for (int u : assignment.unit) {
      if (u < 0 || u >= model.grid.units()) throw DataError("assignment refers to a unit outside the map");
      weights[static_cast<std::size_t>(u)] += 1.0;
    }
  }
  const MergeTree tree = ward_tree(model.grid.codes, weights);
  const SuperClassification sc = cut(tree, config.k);

  ClusterOutput out;
  out.merge_tree = write_merge_tree(tree);
  out.superclasses = write_superclasses(sc);
  out.connectivity = write_connectivity(connectivity_report(sc, model.grid.shape));
  out.profile = write_profile(profile(sc, assignment, table.rows));
  return out;
}

McaOutput stage_mca(std::string_view individuals_csv, std::string_view features_csv, std::string_view assignment_text,
                    std::string_view superclasses_text, const PipelineConfig& config) {
  const auto individuals = read_individuals_csv(individuals_csv);
  const auto table = read_features_csv(features_csv);
  const Assignment assignment = read_assignment(assignment_text);
  const SuperClassification sc = read_superclasses(superclasses_text);
  if (individuals.size() != table.rows.size()) throw DataError("individuals and feature table differ in length");
  const auto labels = labels_for(table, assignment, sc);

  std::vector<QualProfile> profiles;
  profiles.reserve(individuals.size());
  for (std::size_t i = 0; i < individuals.size(); ++i) {
    if (individuals[i].person_id != table.person_ids[i]) {
      throw DataError("individuals and feature table are not in the same person order");
    }
    profiles.push_back(bracketize(individuals[i], table.rows[i], labels[i]));
  }

  const IndicatorMatrix z = build_indicator(profiles, config.mca_active, sc.k);
  const McaResult result = correspondence(burt(z));
  std::vector<SupplementaryCoordinates> sups;
  for (QualVar v : config.mca_supplementary) {
    std::vector<std::string> codes;
    const auto counts = supplementary_counts(profiles, z, v, codes, sc.k);
    auto sup = project_supplementary(result, counts, std::move(codes));
    sup.variable = std::string(qual_var_name(v));
    sups.push_back(std::move(sup));
  }

  McaOutput out;
  out.warnings = z.warnings;
  out.eigenvalues = write_mca_eigenvalues(result);
  out.coordinates = write_mca_coordinates(result, sups, config.mca_axes);
  if (result.n_axes() >= 2) out.plane_1_2 = plot_mca_plane(result, sups, 1, 2);
  if (result.n_axes() >= 3) out.plane_2_3 = plot_mca_plane(result, sups, 2, 3);
  return out;
}

CdaOutput stage_cda(std::string_view features_csv, std::string_view assignment_text, std::string_view superclasses_text,
                    const PipelineConfig& config) {
  const auto table = read_features_csv(features_csv);
  const Assignment assignment = read_assignment(assignment_text);
  const SuperClassification sc = read_superclasses(superclasses_text);
  const auto labels = labels_for(table, assignment, sc);

  // Super-classes without observations are left out of the analysis.
  std::vector<int> present;
  {
    std::set<int> s(labels.begin(), labels.end());
    present.assign(s.begin(), s.end());
  }
  std::vector<int> compact(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    compact[i] = static_cast<int>(std::lower_bound(present.begin(), present.end(), labels[i]) - present.begin()) + 1;
  }

  const Matrix x = to_matrix(table);
  const Scatter s = scatter(x, compact);
  CdaOptions options;
  options.ridge = config.cda_ridge;
  const CdaResult r = canonical(s, options);
  const int p = static_cast<int>(kFeatureCount);
  const int components = std::max(1, std::min(static_cast<int>(present.size()) - 1, p));

  std::vector<std::string> names(feature_names().begin(), feature_names().end());
  std::vector<std::string> class_names;
  for (int l : present) class_names.push_back(std::to_string(l));

  CdaOutput out;
  out.eigenvalues = write_cda_eigenvalues(r, components);
  out.coefficients = write_cda_matrix(r.coefficients, names, "variable", components);
  out.class_means = write_cda_matrix(class_means_on_canonicals(r, x, compact), class_names, "super_class", components);
  out.structure = write_cda_matrix(r.structure, names, "variable", components);
  return out;
}

ReportOutput stage_report(std::string_view individuals_csv, std::string_view features_csv,
                          std::string_view assignment_text, std::string_view superclasses_text,
                          std::string_view model_text) {
  const auto individuals = read_individuals_csv(individuals_csv);
  const auto table = read_features_csv(features_csv);
  const Assignment assignment = read_assignment(assignment_text);
  const SuperClassification sc = read_superclasses(superclasses_text);
  const SomModel model = read_som_model(model_text);
  if (individuals.size() != table.rows.size()) throw DataError("individuals and feature table differ in length");
  if (static_cast<int>(sc.label.size()) != model.grid.units()) {
    throw DataError("super-classification does not match the map size");
  }
  const auto labels = labels_for(table, assignment, sc);
  std::vector<QualProfile> profiles;
  for (std::size_t i = 0; i < individuals.size(); ++i) profiles.push_back(bracketize(individuals[i], table.rows[i], labels[i]));

  ReportOutput out;
  out.composition = emit_composition_tables(sc, labels, profiles);
  out.plate = plot_code_vectors(model.grid, sc);
  return out;
}

// ---------------------------------------------------------------------------
// Emitters.
// ---------------------------------------------------------------------------

std::string emit_composition_tables(const SuperClassification& sc, std::span<const int> labels,
                                    std::span<const QualProfile> profiles) {
  if (labels.size() != profiles.size()) throw DataError("label and profile counts differ");
  static const std::vector<std::pair<std::string_view, QualVar>> blocks = {
      {"duration", QualVar::Duration}, {"recurrence", QualVar::Recurrence}, {"age", QualVar::Age},
      {"skills", QualVar::Skill},      {"education", QualVar::Education},   {"reasons", QualVar::Reason},
      {"exit", QualVar::Exit},         {"hours", QualVar::Hours},           {"spells", QualVar::SpellsPerYear},
      {"share", QualVar::Share},
  };
  std::ostringstream os;
  bool first = true;
  for (const auto& [title, var] : blocks) {
    const auto codes = qual_var_codes(var, sc.k);
    std::vector<std::vector<long long>> counts(static_cast<std::size_t>(sc.k) + 1, std::vector<long long>(codes.size(), 0));
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      const auto it = std::find(codes.begin(), codes.end(), profiles[i][var]);
      if (it == codes.end()) {
        throw DataError("individual " + std::to_string(i) + " has unknown code '" + profiles[i][var] + "' for '" +
                        std::string(qual_var_name(var)) + "'");
      }
      if (labels[i] < 1 || labels[i] > sc.k) throw DataError("observation label outside 1..k");
      const auto c = static_cast<std::size_t>(it - codes.begin());
      ++counts[static_cast<std::size_t>(labels[i])][c];
      ++counts[0][c];
    }
    if (!first) os << '\n';
    first = false;
    os << '[' << title << "]\nsuper_class,n";
    for (const auto& c : codes) os << ',' << c;
    os << '\n';
    auto row = [&](std::size_t slot, const std::string& name) {
      const long long n = std::accumulate(counts[slot].begin(), counts[slot].end(), 0LL);
      os << name << ',' << n;
      for (long long c : counts[slot]) {
        if (n == 0) {
          os << ",NA";
        } else if (c == 0) {
          os << ",.";
        } else {
          os << ',' << textio::fixed(100.0 * static_cast<double>(c) / static_cast<double>(n), 2);
        }
      }
      os << '\n';
    };
    for (int l = 1; l <= sc.k; ++l) row(static_cast<std::size_t>(l), std::to_string(l));
    row(0, "Total");
  }
  return os.str();
}

std::string plot_code_vectors(const SomGrid& grid, const SuperClassification& sc) {
  constexpr double kCellW = 90.0, kCellH = 60.0, kPad = 6.0, kMargin = 10.0;
  const auto& shape = grid.shape;
  const int d = grid.dim();
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  if (d == static_cast<int>(kFeatureCount)) {
    const auto& names = feature_names();
    std::sort(order.begin(), order.end(), [&](int a, int b) { return names[a] < names[b]; });
  }
  double lo = 0.0, hi = 0.0;
  if (grid.codes.size() > 0) {
    lo = grid.codes.minCoeff();
    hi = grid.codes.maxCoeff();
  }
  const double span = hi - lo;
  const int k = std::max(1, sc.k);
  const double width = 2.0 * kMargin + shape.n_cols * kCellW;
  const double height = 2.0 * kMargin + shape.n_rows * kCellH;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << textio::fixed(width, 0) << "\" height=\""
     << textio::fixed(height, 0) << "\" viewBox=\"0 0 " << textio::fixed(width, 0) << ' ' << textio::fixed(height, 0)
     << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << textio::fixed(width, 0) << "\" height=\"" << textio::fixed(height, 0)
     << "\" fill=\"#ffffff\"/>\n";
  for (int u = 0; u < shape.units(); ++u) {
    const double x0 = kMargin + shape.col(u) * kCellW;
    const double y0 = kMargin + shape.row(u) * kCellH;
    const int label = u < static_cast<int>(sc.label.size()) ? sc.label[u] : 1;
    const int grey = 235 - static_cast<int>((label - 1) * 150 / std::max(1, k - 1));
    os << "<rect x=\"" << textio::fixed(x0, 2) << "\" y=\"" << textio::fixed(y0, 2) << "\" width=\""
       << textio::fixed(kCellW, 2) << "\" height=\"" << textio::fixed(kCellH, 2) << "\" fill=\"rgb(" << grey << ','
       << grey << ',' << grey << ")\" stroke=\"#ffffff\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"#000000\" stroke-width=\"1\" points=\"";
    for (int j = 0; j < d; ++j) {
      const double v = grid.codes(u, order[static_cast<std::size_t>(j)]);
      const double t = span > 0.0 ? (v - lo) / span : 0.5;
      const double x = x0 + kPad + (d > 1 ? j * (kCellW - 2.0 * kPad) / (d - 1) : 0.5 * (kCellW - 2.0 * kPad));
      const double y = y0 + kPad + (1.0 - t) * (kCellH - 2.0 * kPad);
      os << (j ? " " : "") << textio::fixed(x, 2) << ',' << textio::fixed(y, 2);
    }
    os << "\"/>\n";
    os << "<text x=\"" << textio::fixed(x0 + 2.0, 2) << "\" y=\"" << textio::fixed(y0 + kCellH - 2.0, 2)
       << "\" font-size=\"8\" font-family=\"sans-serif\">" << label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string plot_mca_plane(const McaResult& result, std::span<const SupplementaryCoordinates> sups, int axis_a,
                           int axis_b) {
  if (axis_a < 1 || axis_b < 1 || axis_a > result.n_axes() || axis_b > result.n_axes()) {
    throw ConfigError("MCA plane axes out of range");
  }
  constexpr double kSize = 640.0, kMargin = 50.0;
  const int a = axis_a - 1, b = axis_b - 1;
  struct Point {
    std::string label;
    double x, y;
    bool active;
  };
  std::vector<Point> points;
  for (Eigen::Index j = 0; j < result.principal_coordinates.rows(); ++j) {
    points.push_back({result.labels[static_cast<std::size_t>(j)], result.principal_coordinates(j, a),
                      result.principal_coordinates(j, b), true});
  }
  for (const auto& sup : sups) {
    for (std::size_t s = 0; s < sup.labels.size(); ++s) {
      if (sup.principal[s]) points.push_back({sup.labels[s], (*sup.principal[s])(a), (*sup.principal[s])(b), false});
    }
  }
  double extent = 0.0;
  for (const auto& p : points) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
  if (!(extent > 0.0)) extent = 1.0;
  const double scale = (0.5 * kSize - kMargin) / (1.1 * extent);
  const double c = 0.5 * kSize;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" viewBox=\"0 0 640 640\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"640\" fill=\"#ffffff\"/>\n";
  os << "<line x1=\"" << kMargin << "\" y1=\"320\" x2=\"" << kSize - kMargin << "\" y2=\"320\" stroke=\"#999999\"/>\n";
  os << "<line x1=\"320\" y1=\"" << kMargin << "\" x2=\"320\" y2=\"" << kSize - kMargin << "\" stroke=\"#999999\"/>\n";
  os << "<text x=\"" << kSize - kMargin << "\" y=\"314\" font-size=\"11\" font-family=\"sans-serif\" "
     << "text-anchor=\"end\">axis " << axis_a << " (" << textio::fixed(100.0 * result.shares(a), 2) << "%)</text>\n";
  os << "<text x=\"326\" y=\"" << kMargin - 6 << "\" font-size=\"11\" font-family=\"sans-serif\">axis " << axis_b
     << " (" << textio::fixed(100.0 * result.shares(b), 2) << "%)</text>\n";
  for (const auto& p : points) {
    const double px = c + p.x * scale, py = c - p.y * scale;
    if (p.active) {
      os << "<circle cx=\"" << textio::fixed(px, 2) << "\" cy=\"" << textio::fixed(py, 2)
         << "\" r=\"2.5\" fill=\"#000000\"/>\n";
      os << "<text x=\"" << textio::fixed(px + 4.0, 2) << "\" y=\"" << textio::fixed(py - 3.0, 2)
         << "\" font-size=\"10\" font-family=\"sans-serif\">" << xml_escape(p.label) << "</text>\n";
    } else {
      os << "<rect x=\"" << textio::fixed(px - 2.5, 2) << "\" y=\"" << textio::fixed(py - 2.5, 2)
         << "\" width=\"5\" height=\"5\" fill=\"#777777\"/>\n";
      os << "<text x=\"" << textio::fixed(px + 4.0, 2) << "\" y=\"" << textio::fixed(py - 3.0, 2)
         << "\" font-size=\"10\" font-family=\"sans-serif\" font-style=\"italic\" fill=\"#555555\">"
         << xml_escape(p.label) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline.
// ---------------------------------------------------------------------------

namespace {

class BundleWriter {
 public:
  explicit BundleWriter(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, std::string_view content, ArtifactBundle& bundle) {
    const fs::path path = dir_ / name;
    written_.push_back(path);
    textio::write_file(path.string(), content);
    bundle.files.push_back({name, sha256_hex(content)});
  }

  void remove_all() noexcept {
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written_.clear();
  }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

[[noreturn]] void rethrow_in_stage(const std::string& stage) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError("stage " + stage + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError("stage " + stage + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError("stage " + stage + ": " + e.what());
  } catch (const std::exception& e) {
    throw DataError("stage " + stage + ": " + e.what());
  }
}

}  // namespace

ArtifactBundle run_pipeline(const PipelineConfig& config) {
  config.validate();
  ArtifactBundle bundle;
  bundle.directory = config.output_dir;
  {
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) throw DataError("cannot create output directory '" + config.output_dir + "': " + ec.message());
  }
  BundleWriter out(config.output_dir);
  std::string stage = "input";
  try {
    std::string records;
    std::string input_hash;
    if (!config.synth_spec.empty()) {
      const std::string spec_text = textio::read_file(config.synth_spec);
      input_hash = sha256_hex(spec_text);
      MarginalSpec spec = parse_marginal_spec(spec_text);
      spec.seed = config.seed;
      spec.window.end = config.window_end;
      if (config.synth_n > 0) spec.cohort_size = config.synth_n;
      stage = "synth";
      records = write_records_csv(generate(spec));
      out.write("records.csv", records, bundle);
    } else {
      records = textio::read_file(config.input);
      input_hash = sha256_hex(records);
    }

    stage = "ingest";
    const std::string individuals = stage_ingest(records, config);
    out.write("individuals.csv", individuals, bundle);

    stage = "features";
    const std::string features = stage_features(individuals);
    out.write("features.csv", features, bundle);

    stage = "train";
    const TrainOutput trained = stage_train(features, config);
    out.write("som_model.txt", trained.model, bundle);
    out.write("som_quality.csv", trained.quality, bundle);
    out.write("assignment.csv", trained.assignment, bundle);

    stage = "cluster";
    const ClusterOutput clustered = stage_cluster(trained.model, features, trained.assignment, config);
    out.write("merge_tree.txt", clustered.merge_tree, bundle);
    out.write("superclasses.txt", clustered.superclasses, bundle);
    out.write("connectivity.csv", clustered.connectivity, bundle);
    out.write("profile.csv", clustered.profile, bundle);

    stage = "report";
    const ReportOutput report = stage_report(individuals, features, trained.assignment, clustered.superclasses,
                                             trained.model);
    out.write("composition.txt", report.composition, bundle);
    out.write("code_vectors.svg", report.plate, bundle);

    stage = "mca";
    const McaOutput mca = stage_mca(individuals, features, trained.assignment, clustered.superclasses, config);
    out.write("mca_eigenvalues.csv", mca.eigenvalues, bundle);
    out.write("mca_coordinates.csv", mca.coordinates, bundle);
    if (!mca.plane_1_2.empty()) out.write("mca_plane_1_2.svg", mca.plane_1_2, bundle);
    if (!mca.plane_2_3.empty()) out.write("mca_plane_2_3.svg", mca.plane_2_3, bundle);
    for (const auto& w : mca.warnings) bundle.warnings.push_back("mca: " + w);

    stage = "cda";
    const CdaOutput cda = stage_cda(features, trained.assignment, clustered.superclasses, config);
    out.write("cda_eigenvalues.csv", cda.eigenvalues, bundle);
    out.write("cda_coefficients.csv", cda.coefficients, bundle);
    out.write("cda_class_means.csv", cda.class_means, bundle);
    out.write("cda_structure.csv", cda.structure, bundle);

    stage = "manifest";
    std::ostringstream manifest;
    manifest << "segmap-manifest 1\n";
    manifest << "seed = " << config.seed << '\n';
    manifest << "input.sha256 = " << input_hash << '\n';
    for (const auto& line : textio::lines(write_config(config))) {
      if (line.empty() || line.rfind("output_dir", 0) == 0) continue;
      manifest << "config." << line << '\n';
    }
    for (const auto& f : bundle.files) manifest << "sha256." << f.name << " = " << f.sha256 << '\n';
    ArtifactBundle scratch;
    out.write("manifest.txt", manifest.str(), scratch);
  } catch (...) {
    out.remove_all();
    rethrow_in_stage(stage);
  }
  return bundle;
}

}  // namespace segmap
