#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "kman/cli.hpp"
#include "kman/errors.hpp"
#include "kman/io.hpp"
#include "kman/problems.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace kman;

namespace {

SnapshotSet as_snapshots(Matrix states) { return SnapshotSet{std::move(states), {}, std::nullopt}; }

// Keyword options map onto the same TrainOptions the CLI uses, so a Python fit and a
// `kmtool train` with the same settings produce the same manifold.
TrainedManifold fit(const Matrix& states, const std::string& method, Eigen::Index r, Eigen::Index m,
                    const std::string& kernel, double epsilon, double lam, bool normalize,
                    const std::string& offset) {
  cli::TrainOptions o;
  o.method = parse_method(method);
  o.r = r;
  o.m = m;
  o.kernel = kernel;
  o.epsilon = epsilon;
  o.lambda = lam;
  o.normalize = normalize;
  o.offset = offset;
  return train(as_snapshots(states), cli::training_config(o));
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Kernel manifolds: POD with a kernel-regression decoder correction";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&] { return py::exception<kman::Error>(mod, "KmanError"); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const kman::Error& e) {
      const py::object& type = error_type.get_stored();
      py::object exc = type(e.what());
      exc.attr("kind") = to_string(e.kind());
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  py::class_<TrainedManifold>(mod, "Manifold")
      .def_property_readonly("r", &TrainedManifold::r)
      .def_property_readonly("m", &TrainedManifold::m)
      .def_property_readonly("method", [](const TrainedManifold& t) { return std::string(to_string(t.method())); })
      .def_readonly("lam", &TrainedManifold::lambda)
      .def_readonly("jitter", &TrainedManifold::jitter)
      .def_property_readonly("offset", [](const TrainedManifold& t) { return t.basis.offset; })
      .def_property_readonly("v", [](const TrainedManifold& t) { return t.basis.v; })
      .def_property_readonly("v_bar", [](const TrainedManifold& t) { return t.basis.v_bar; })
      .def_property_readonly("singular_values", [](const TrainedManifold& t) { return t.basis.singular_values; })
      .def("encode", [](const TrainedManifold& t, const Matrix& q) { return encode_columns(t.basis, q); },
           py::arg("states"), "Latent coordinates, one column per state.")
      .def("decode", &decode_columns, py::arg("latent"))
      .def("reconstruct", &reconstruct_columns, py::arg("states"))
      .def("save", [](const TrainedManifold& t, const fs::path& dir) { io::save_manifold(dir, t); },
           py::arg("directory"));

  mod.def("fit", &fit, py::arg("states"), py::arg("method") = "kernel", py::arg("r") = 1,
          py::arg("m") = 1, py::arg("kernel") = "gaussian", py::arg("epsilon") = 1.0,
          py::arg("lam") = 0.0, py::arg("normalize") = false, py::arg("offset") = "mean",
          "Fits a manifold to the columns of `states`. method: pod, fm-qm or kernel.");
  mod.def("load", &io::load_manifold, py::arg("directory"));

  mod.def("error", [](const std::string& metric, const Matrix& truth, const Matrix& rec) {
    return evaluate(parse_metric(metric), truth, rec).value;
  }, py::arg("metric"), py::arg("truth"), py::arg("reconstruction"));
  mod.def("rbf_psi", [](const std::string& kind, double r) { return rbf_psi(parse_rbf_kind(kind), r); },
          py::arg("kind"), py::arg("r"));
  mod.def("quadratic_feature_map", &quadratic_feature_map, py::arg("x"));

  mod.def("surface_heating", [](Eigen::Index nz, Eigen::Index ntheta, Eigen::Index n_mu1, Eigen::Index n_mu2) {
    SurfaceHeatingGrid g;
    g.nz = nz;
    g.ntheta = ntheta;
    g.n_mu1 = n_mu1;
    g.n_mu2 = n_mu2;
    auto data = surface_heating_dataset(g);
    return py::make_tuple(std::move(data.train.states), std::move(data.test.states), data.scale);
  }, py::arg("nz") = 100, py::arg("ntheta") = 100, py::arg("n_mu1") = 50, py::arg("n_mu2") = 50,
     "Returns (train, test, scale) for the analytic surface-heating field.");
  mod.def("advdiff", [](double alpha, Eigen::Index n, double dt, double t_final) {
    AdvDiffConfig c;
    c.alpha = alpha;
    c.n_per_axis = n;
    c.dt = dt;
    c.t_final = t_final;
    return advdiff_simulate(c).states;
  }, py::arg("alpha"), py::arg("n_per_axis") = 64, py::arg("dt") = 0.05, py::arg("t_final") = 5.0);

  mod.def("generate_dataset", [](const std::string& problem, const std::string& config, const fs::path& out) {
    return cli::generate_dataset(problem, cli::json::parse(config), out).dump();
  }, py::arg("problem"), py::arg("config_json"), py::arg("out_dir"),
     "Writes a dataset directory; returns its manifest as a JSON string.");

  mod.attr("__version__") = KMAN_VERSION;
}
