#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>

#include "segmap/cda.hpp"
#include "segmap/error.hpp"
#include "segmap/report.hpp"
#include "segmap/som.hpp"
#include "segmap/superclass.hpp"
#include "segmap/synth.hpp"

namespace py = pybind11;
using namespace segmap;

namespace {

PipelineConfig to_config(const std::map<std::string, py::object>& entries) {
  PipelineConfig c;
  for (const auto& [key, value] : entries) {
    std::string text;
    if (py::isinstance<py::bool_>(value)) {
      text = value.cast<bool>() ? "true" : "false";
    } else {
      text = py::str(value).cast<std::string>();
    }
    apply_config_entry(c, key, text);
  }
  return c;
}

TrainingSchedule schedule(std::int64_t steps, double eps0, double eps_min, int radius0, std::uint64_t seed) {
  TrainingSchedule s;
  s.total_steps = steps;
  s.eps0 = eps0;
  s.eps_min = eps_min;
  s.radius0 = radius0;
  s.seed = seed;
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Register collation, Kohonen maps, Ward super-classes, MCA and CDA";

  auto base = py::register_exception<Error>(m, "SegmapError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  // Text-in, text-out stages; `config` maps config keys to values.
  m.def(
      "generate_register",
      [](const std::string& spec_text, long long n, std::uint64_t seed) {
        auto spec = parse_marginal_spec(spec_text);
        if (n > 0) spec.cohort_size = n;
        spec.seed = seed;
        return write_records_csv(generate(spec));
      },
      py::arg("spec_text"), py::arg("n") = 0, py::arg("seed") = 1);
  m.def(
      "calibration_report",
      [](const std::string& spec_text, const std::string& records_csv) {
        const auto spec = parse_marginal_spec(spec_text);
        const auto records = read_records_csv(records_csv);
        return validate(std::span<const RegistrationRecord>(records), spec).to_text();
      },
      py::arg("spec_text"), py::arg("records_csv"));
  m.def(
      "stage_ingest", [](const std::string& records, const std::map<std::string, py::object>& config) {
        return stage_ingest(records, to_config(config));
      },
      py::arg("records_csv"), py::arg("config") = std::map<std::string, py::object>{});
  m.def("stage_features", [](const std::string& individuals) { return stage_features(individuals); },
        py::arg("individuals_csv"));
  m.def(
      "stage_train",
      [](const std::string& features, const std::map<std::string, py::object>& config) {
        const auto out = stage_train(features, to_config(config));
        return std::map<std::string, std::string>{
            {"model", out.model}, {"quality", out.quality}, {"assignment", out.assignment}};
      },
      py::arg("features_csv"), py::arg("config") = std::map<std::string, py::object>{});
  m.def(
      "run_pipeline",
      [](const std::map<std::string, py::object>& config) {
        const auto c = to_config(config);
        c.validate();
        const auto bundle = run_pipeline(c);
        std::vector<std::pair<std::string, std::string>> files;
        for (const auto& f : bundle.files) files.emplace_back(f.name, f.sha256);
        return files;
      },
      py::arg("config"), "Runs every stage into config['output_dir']; returns (file, sha256) pairs.");

  // Numeric building blocks on numpy arrays.
  m.def(
      "som_train",
      [](const Matrix& data, int rows, int cols, std::int64_t steps, double eps0, double eps_min, int radius0,
         std::uint64_t seed) {
        const auto grid = som_init({rows, cols}, data, seed);
        if (steps <= 0) steps = 20 * static_cast<std::int64_t>(data.rows());
        const auto model = som_train(grid, data, schedule(steps, eps0, eps_min, radius0, seed));
        return Matrix(model.grid.codes);
      },
      py::arg("data"), py::arg("rows") = 10, py::arg("cols") = 10, py::arg("steps") = 0, py::arg("eps0") = 0.5,
      py::arg("eps_min") = 0.01, py::arg("radius0") = 4, py::arg("seed") = 1,
      "Code vectors (units x d) after training from data-row initialisation; steps 0 means 20 * rows.");
  m.def(
      "som_quality",
      [](const Matrix& codes, int rows, int cols, const Matrix& data) {
        const auto q = som_quality(SomGrid{{rows, cols}, codes}, data);
        return std::pair{q.quantization_error, q.topographic_error};
      },
      py::arg("codes"), py::arg("rows"), py::arg("cols"), py::arg("data"));
  m.def(
      "ward_tree",
      [](const Matrix& points) {
        std::vector<std::tuple<int, int, double>> merges;
        for (const auto& mg : ward_tree(points).merges) merges.emplace_back(mg.left, mg.right, mg.height);
        return merges;
      },
      py::arg("points"), "Merges as (left, right, height); merge m creates cluster P + m.");
  m.def(
      "ward_labels", [](const Matrix& points, int k) { return cut(ward_tree(points), k).label; },
      py::arg("points"), py::arg("k"));
  m.def(
      "cda",
      [](const Matrix& features, const std::vector<int>& labels, double ridge) {
        const auto r = canonical(scatter(features, labels), CdaOptions{ridge});
        py::dict out;
        out["eigenvalues"] = Eigen::VectorXd(r.eigenvalues);
        out["shares"] = Eigen::VectorXd(r.shares);
        out["coefficients"] = Eigen::MatrixXd(r.coefficients);
        out["n_nonzero"] = r.n_nonzero;
        return out;
      },
      py::arg("features"), py::arg("labels"), py::arg("ridge") = 0.0);
  m.def("sha256_hex", [](const py::bytes& data) { return sha256_hex(std::string(data)); });
}
