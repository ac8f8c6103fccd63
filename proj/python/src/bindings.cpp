#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <cstring>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mss/detect.hpp"
#include "mss/error.hpp"
#include "mss/io.hpp"
#include "mss/net.hpp"
#include "mss/patterns.hpp"
#include "mss/scan.hpp"
#include "mss/simulate.hpp"

namespace py = pybind11;
using namespace mss;

namespace {

py::array_t<double> to_array(const TensorField& X) {
  const auto per_axis = X.geom.cells_per_axis();
  std::vector<py::ssize_t> shape(static_cast<std::size_t>(X.geom.d),
                                 static_cast<py::ssize_t>(per_axis));
  py::array_t<double> out(shape);
  std::memcpy(out.mutable_data(), X.values.data(), X.values.size() * sizeof(double));
  return out;
}

TensorField from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                       int R) {
  if (a.ndim() < 1) throw std::invalid_argument("tensor must have at least one axis");
  const py::ssize_t per_axis = a.shape(0);
  for (py::ssize_t j = 1; j < a.ndim(); ++j)
    if (a.shape(j) != per_axis)
      throw std::invalid_argument("tensor axes must have equal lengths");
  TensorField X;
  X.geom.d = static_cast<int>(a.ndim());
  X.geom.R = R;
  X.geom.L = static_cast<double>(per_axis) / (2.0 * R);
  X.geom.validate();
  X.values.assign(a.data(), a.data() + a.size());
  return X;
}

py::dict truth_to_dict(const GroundTruth& t) {
  py::dict d;
  d["pattern"] = t.pattern;
  d["mu"] = t.mu;
  d["t"] = t.t;
  d["h"] = t.h;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mss, m) {
  m.doc() = "multiscale scan statistics for smooth patterns in noisy tensors";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<RuntimeFault>(m, "RuntimeFault", PyExc_RuntimeError);

  py::class_<Geometry>(m, "Geometry")
      .def(py::init([](int d, double L, int R) {
             Geometry g{d, L, R};
             g.validate();
             return g;
           }),
           py::arg("d"), py::arg("L"), py::arg("R"))
      .def_readonly("d", &Geometry::d)
      .def_readonly("L", &Geometry::L)
      .def_readonly("R", &Geometry::R)
      .def_property_readonly("cells_per_axis", &Geometry::cells_per_axis)
      .def_property_readonly("cell_count", &Geometry::cell_count)
      .def("__eq__", [](const Geometry& a, const Geometry& b) { return a == b; })
      .def("__repr__", [](const Geometry& g) {
        return "Geometry(d=" + std::to_string(g.d) + ", L=" + std::to_string(g.L) +
               ", R=" + std::to_string(g.R) + ")";
      });

  py::class_<Pattern>(m, "Pattern")
      .def_readonly("name", &Pattern::name)
      .def_readonly("d", &Pattern::d)
      .def_readonly("gamma1", &Pattern::gamma1)
      .def_readonly("gamma2", &Pattern::gamma2)
      .def_readonly("c_a", &Pattern::c_a)
      .def("evaluate",
           [](const Pattern& f, const std::vector<double>& u) { return f.evaluate(u); })
      .def("__repr__", [](const Pattern& f) { return "Pattern(" + f.name + ")"; });

  m.def(
      "make_pattern",
      [](const std::string& kind, int d, const std::map<std::string, double>& params,
         const std::string& name) {
        return make_pattern(pattern_kind_from_string(kind), d, params, name);
      },
      py::arg("kind"), py::arg("d") = 1, py::arg("params") = std::map<std::string, double>{},
      py::arg("name") = "");
  m.def("built_in_dictionary", &built_in_dictionary, py::arg("d") = 1);

  py::class_<Net>(m, "Net")
      .def_readonly("d", &Net::d)
      .def_readonly("L", &Net::L)
      .def_readonly("alpha", &Net::alpha)
      .def_readonly("beta", &Net::beta)
      .def_readonly("epsilon", &Net::epsilon)
      .def_readonly("gamma", &Net::gamma)
      .def_readonly("axis_scales", &Net::axis_scales)
      .def_property_readonly("total_entries", &Net::total_entries)
      .def("__repr__", [](const Net& n) {
        return "Net(epsilon=" + std::to_string(n.epsilon) + ", entries=" +
               std::to_string(n.total_entries()) + ")";
      });

  m.def(
      "build_net",
      [](double L, int d, double epsilon, double gamma) { return build_net(L, d, epsilon, gamma); },
      py::arg("L"), py::arg("d"), py::arg("epsilon"), py::arg("gamma") = 1.0);
  m.def("refine_net", &refine_net, py::arg("net"), py::arg("loc_factor"), py::arg("scale_split"));
  m.def("v_h", &v_h, py::arg("h"), py::arg("L"));

  py::class_<ScanResult>(m, "ScanResult")
      .def_readonly("statistic", &ScanResult::statistic)
      .def_readonly("argmax_t", &ScanResult::argmax_t)
      .def_readonly("argmax_h", &ScanResult::argmax_h)
      .def_readonly("raw_convolution", &ScanResult::raw_convolution_at_argmax)
      .def_readonly("negated", &ScanResult::negated);

  py::class_<PamssResult>(m, "PamssResult")
      .def_readonly("E_n", &PamssResult::E_n)
      .def_readonly("best_pattern", &PamssResult::best_pattern)
      .def_readonly("per_pattern_scores", &PamssResult::per_pattern_scores)
      .def_readonly("per_tensor", &PamssResult::per_tensor);

  py::class_<ScanEngine>(m, "ScanEngine")
      .def(py::init([](const Geometry& g, const Net& net, std::vector<Pattern> dict,
                       bool two_sided) {
             ScanOptions opt;
             opt.two_sided = two_sided;
             return std::make_unique<ScanEngine>(g, net, std::move(dict), opt);
           }),
           py::arg("geometry"), py::arg("net"), py::arg("dictionary"),
           py::arg("two_sided") = false)
      .def(
          "scan",
          [](const ScanEngine& e,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
             std::size_t pattern_index) {
            return e.scan(from_array(a, e.geometry().R), pattern_index);
          },
          py::arg("tensor"), py::arg("pattern_index") = 0)
      .def(
          "run_pamss",
          [](const ScanEngine& e,
             const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>&
                 tensors,
             int jobs) {
            std::vector<TensorField> xs;
            xs.reserve(tensors.size());
            for (const auto& a : tensors) xs.push_back(from_array(a, e.geometry().R));
            return e.run_pamss(xs, jobs);
          },
          py::arg("tensors"), py::arg("jobs") = 1);

  py::class_<ThresholdSpec>(m, "ThresholdSpec")
      .def_readonly("delta", &ThresholdSpec::delta)
      .def_readonly("value", &ThresholdSpec::value)
      .def_readonly("n", &ThresholdSpec::n)
      .def_readonly("dict_size", &ThresholdSpec::dict_size)
      .def_property_readonly("method", [](const ThresholdSpec& t) {
        return t.method == ThresholdMethod::Theoretical ? "theoretical" : "monte_carlo";
      });

  py::class_<DetectionReport>(m, "DetectionReport")
      .def_readonly("E_n", &DetectionReport::E_n)
      .def_readonly("reject", &DetectionReport::reject)
      .def_readonly("threshold", &DetectionReport::threshold)
      .def_readonly("p_value", &DetectionReport::p_value_estimate);

  m.def("theoretical_threshold", &theoretical_threshold, py::arg("n"), py::arg("dict_size"),
        py::arg("delta"), py::arg("L"), py::arg("K"));
  m.def("make_theoretical_spec", &make_theoretical_spec, py::arg("n"), py::arg("dict_size"),
        py::arg("delta"), py::arg("L"), py::arg("K"));
  m.def(
      "mc_threshold",
      [](const Geometry& g, const std::vector<Pattern>& dict, const Net& net, int n, double delta,
         std::int64_t reps, std::uint64_t seed, int jobs) {
        return mc_threshold(g, dict, net, n, delta, reps, seed, jobs);
      },
      py::arg("geometry"), py::arg("dictionary"), py::arg("net"), py::arg("n"), py::arg("delta"),
      py::arg("reps"), py::arg("seed"), py::arg("jobs") = 1);
  m.def("decide", &decide, py::arg("result"), py::arg("threshold"));

  m.def(
      "gen_null",
      [](const Geometry& g, std::uint64_t seed, std::int64_t index) {
        SimConfig cfg;
        cfg.geom = g;
        cfg.seed = seed;
        return to_array(gen_null(cfg, index));
      },
      py::arg("geometry"), py::arg("seed"), py::arg("index") = 0);
  m.def(
      "gen_alt",
      [](const Geometry& g, const Pattern& f, double mu, const std::vector<double>& h,
         std::uint64_t seed, std::int64_t index) {
        SimConfig cfg;
        cfg.geom = g;
        cfg.seed = seed;
        cfg.hypothesis = Hypothesis::Alt;
        AltSpec alt;
        alt.pattern = f;
        alt.mu = mu;
        alt.scale_law = ScaleLaw::Fixed;
        alt.h_fixed = h;
        cfg.alt = std::move(alt);
        const TensorField X = gen_alt(cfg, index);
        return py::make_tuple(to_array(X), truth_to_dict(*X.prov.truth));
      },
      py::arg("geometry"), py::arg("pattern"), py::arg("mu"), py::arg("h"), py::arg("seed"),
      py::arg("index") = 0);

  m.def(
      "write_tensor",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, int R,
         const std::string& path) { write_tensor(from_array(a, R), path); },
      py::arg("tensor"), py::arg("R"), py::arg("path"));
  m.def(
      "read_tensor",
      [](const std::string& path) {
        const TensorField X = read_tensor(path);
        return py::make_tuple(to_array(X), X.geom);
      },
      py::arg("path"));
}
