#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cdga/core/error.hpp"
#include "cdga/dataset/counts.hpp"
#include "cdga/dataset/manifest.hpp"
#include "cdga/dataset/synthetic.hpp"
#include "cdga/diagnostics/diversity.hpp"
#include "cdga/diagnostics/hessian.hpp"
#include "cdga/diagnostics/near_dup.hpp"
#include "cdga/diagnostics/sharpness.hpp"
#include "cdga/diagnostics/tsne.hpp"
#include "cdga/pipeline/commands.hpp"
#include "cdga/pipeline/config.hpp"

namespace py = pybind11;
using namespace cdga;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

std::map<std::string, EmbeddingMatrix> embeddings(const std::map<std::string, Eigen::MatrixXd>& raw) {
  std::map<std::string, EmbeddingMatrix> out;
  for (const auto& [name, m] : raw) {
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < m.rows(); ++i) ids.push_back(name + "/" + std::to_string(i));
    out.emplace(name, EmbeddingMatrix(m, ids, "python"));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core of the cross-domain generative augmentation toolkit";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);

  m.def(
      "augmented_size",
      [](std::int64_t count, int n_train_domains, int b, const std::string& kind) {
        return augmented_size(count, n_train_domains, b, parse_augmentation_kind(kind));
      },
      py::arg("count"), py::arg("n_train_domains"), py::arg("b"), py::arg("kind") = "CDGA_PG");

  m.def(
      "balanced_batch_sizes",
      [](const std::vector<std::vector<std::int64_t>>& counts) {
        return balanced_batch_sizes(CountTable{counts}).b;
      },
      py::arg("counts"), "ceil(max cell / cell) per (domain, class); None for empty cells");

  m.def(
      "scan_dataset", [](const std::filesystem::path& root) { return to_py(to_json(scan_dataset(root))); },
      py::arg("root"));

  m.def(
      "write_shapes_dataset",
      [](const std::filesystem::path& root, std::vector<std::string> domains, std::vector<std::string> classes,
         int per_cell, int image_size, std::uint64_t seed) {
        ShapesDatasetSpec spec;
        if (!domains.empty()) spec.domains = std::move(domains);
        if (!classes.empty()) spec.classes = std::move(classes);
        spec.per_cell = per_cell;
        spec.image_size = image_size;
        spec.seed = seed;
        return write_shapes_dataset(root, spec);
      },
      py::arg("root"), py::arg("domains") = std::vector<std::string>{}, py::arg("classes") = std::vector<std::string>{},
      py::arg("per_cell") = 12, py::arg("image_size") = 32, py::arg("seed") = 0);

  m.def(
      "near_duplicate_rates",
      [](const std::map<std::string, Eigen::MatrixXd>& originals,
         const std::map<std::string, Eigen::MatrixXd>& generated, double threshold) {
        return to_py(to_json(near_duplicate_rates(embeddings(originals), embeddings(generated), threshold)));
      },
      py::arg("originals"), py::arg("generated"), py::arg("threshold") = 0.95,
      "Percent of each original domain with a generated image at cosine >= threshold.");

  m.def("head_hessian", &head_hessian_closed_form, py::arg("features"), py::arg("probs"),
        "Hessian of the mean cross-entropy over softmax-head parameters; features F x N, probs C x N.");

  m.def(
      "hessian_distance",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        return hessian_distance(HeadHessian{a, "a", 0}, HeadHessian{b, "b", 0});
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "diversity_shift",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int bins) {
        DiversityOptions o;
        o.bins = bins;
        return to_py(to_json(diversity_shift(a, b, o)));
      },
      py::arg("a"), py::arg("b"), py::arg("bins") = 20);

  m.def(
      "sharpness",
      [](const std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>& loss_and_grad,
         const Eigen::VectorXd& theta, double rho, int ascent_steps, int restarts, std::uint64_t seed) {
        const Objective f = [&](const Eigen::VectorXd& t, Eigen::VectorXd* g) {
          auto [v, grad] = loss_and_grad(t);
          if (g) *g = std::move(grad);
          return v;
        };
        return sharpness(f, theta, rho, SharpnessOptions{ascent_steps, restarts, seed});
      },
      py::arg("loss_and_grad"), py::arg("theta"), py::arg("rho"), py::arg("ascent_steps") = 20,
      py::arg("restarts") = 3, py::arg("seed") = 0,
      "max over ||eps|| <= rho of L(theta + eps) - L(theta); loss_and_grad(theta) -> (loss, grad).");

  m.def(
      "tsne",
      [](const Eigen::MatrixXd& x, int iterations, double perplexity, std::uint64_t seed) {
        TsneOptions o;
        o.iterations = iterations;
        o.exaggeration_iters = std::min(250, iterations / 4);
        o.perplexity = perplexity;
        o.seed = seed;
        return tsne(x, o);
      },
      py::arg("x"), py::arg("iterations") = 1000, py::arg("perplexity") = 30.0, py::arg("seed") = 0);

  m.def(
      "load_config", [](const std::filesystem::path& path) { return to_py(to_json(load_experiment_config(path))); },
      py::arg("path"));

  m.def(
      "run_command",
      [](const std::string& command, const std::filesystem::path& config_path, bool stub_backend,
         std::optional<std::uint64_t> seed, std::optional<std::filesystem::path> out, bool resume) {
        CommandOptions o;
        o.stub_backend = stub_backend;
        o.seed = seed;
        o.out = std::move(out);
        o.resume = resume;
        const auto config = apply_overrides(load_experiment_config(config_path), o);
        CommandResult r;
        {
          py::gil_scoped_release release;
          if (command == "scan") r = cmd_scan(config, o);
          else if (command == "generate") r = cmd_generate(config, o);
          else if (command == "benchmark") r = cmd_benchmark(config, o);
          else if (command == "diagnose") r = cmd_diagnose(config, o);
          else if (command == "report") r = cmd_report(config, o);
          else throw InvalidArgument("unknown command '" + command + "'");
        }
        return py::make_tuple(r.exit_code, to_py(r.summary));
      },
      py::arg("command"), py::arg("config"), py::arg("stub_backend") = false, py::arg("seed") = py::none(),
      py::arg("out") = py::none(), py::arg("resume") = false,
      "Runs one pipeline command; returns (exit_code, summary).");
}
