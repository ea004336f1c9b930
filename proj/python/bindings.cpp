#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "transpec/cli.hpp"
#include "transpec/errors.hpp"
#include "transpec/report.hpp"

namespace py = pybind11;
using namespace transpec;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vec(const Array& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

Array to_array(const std::vector<double>& v) {
  Array a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

Dataset make_dataset(const Array& y, const Array& x) {
  const auto yv = to_vec(y);
  if (x.ndim() == 1) return Dataset(yv, to_vec(x), 1);
  if (x.ndim() != 2) throw Error(ErrorKind::InvalidConfig, "x must be 1- or 2-dimensional");
  return Dataset(yv, to_vec(x), static_cast<std::size_t>(x.shape(1)));
}

RunConfig parse_config(const std::string& config_json) {
  RunConfig c;
  if (!config_json.empty()) merge_json(c, Json::parse(config_json));
  return c;
}

GofConfig gof_from(const RunConfig& c) {
  GofConfig g;
  g.npt = c.npt;
  g.test = c.test;
  g.bootstrap = c.bootstrap;
  g.bootstrap.seed = c.seed_or_zero();
  g.alphas = c.alphas;
  g.workers = c.workers;
  return g;
}

template <class F>
auto apply(const Array& v, F f) {
  Array out(v.size());
  const double* in = v.data();
  double* o = out.mutable_data();
  for (py::ssize_t i = 0; i < v.size(); ++i) o[i] = f(in[i]);
  return out;
}

}  // namespace

PYBIND11_MODULE(_transpec, m) {
  m.doc() = "Specification tests for parametric transformation classes";
  m.attr("__version__") = TRANSPEC_VERSION;

  static PyObject* error_type = PyErr_NewException("transpec.TranspecError", PyExc_RuntimeError, nullptr);
  m.attr("TranspecError") = py::handle(error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const Json payload = error_payload(e)["error"];
      py::tuple args = py::make_tuple(payload["kind"].get<std::string>(), std::string(e.what()));
      PyErr_SetObject(error_type, args.ptr());
    } catch (const Json::exception& e) {
      py::tuple args = py::make_tuple(std::string("InvalidConfig"), std::string(e.what()));
      PyErr_SetObject(error_type, args.ptr());
    }
  });

  m.def("run", [](const std::string& config_json) {
        RunConfig c = config_from_json(Json::parse(config_json));
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run(c);
        }
        return py::make_tuple(render(r.json), r.csv);
      },
      py::arg("config_json"), "Run a command from its JSON config; returns (report JSON, side-table CSV).");

  m.def("yeo_johnson", [](double theta, const Array& y) {
        return apply(y, [theta](double v) { return yeo_johnson_eval(theta, v); });
      },
      py::arg("theta"), py::arg("y"));
  m.def("yeo_johnson_grad", [](double theta, const Array& y) {
        return apply(y, [theta](double v) { return yeo_johnson_grad(theta, v); });
      },
      py::arg("theta"), py::arg("y"));

  py::class_<NormalizedTransform>(m, "NormalizedTransform")
      .def(py::init([](const std::string& family, std::vector<double> theta) {
             return normalize(make_family(family), std::move(theta));
           }),
           py::arg("family"), py::arg("theta"))
      .def("__call__", [](const NormalizedTransform& h, const Array& y) {
        return apply(y, [&h](double v) { return h.eval(v); });
      })
      .def("inverse", [](const NormalizedTransform& h, const Array& s) {
        return apply(s, [&h](double v) { return h.inverse(v); });
      })
      .def_property_readonly("scale", &NormalizedTransform::scale)
      .def_property_readonly("shift", &NormalizedTransform::shift)
      .def_property_readonly("theta", &NormalizedTransform::theta);

  py::class_<NptEstimate>(m, "NptEstimate")
      .def("__call__", [](const NptEstimate& e, const Array& y) {
        return apply(y, [&e](double v) { return e.eval(v); });
      })
      .def("eval_u", [](const NptEstimate& e, const Array& u) {
        return apply(u, [&e](double v) { return e.eval_u(v); });
      })
      .def_property_readonly("u_grid", [](const NptEstimate& e) { return to_array(e.u_grid()); })
      .def_property_readonly("q_values", [](const NptEstimate& e) { return to_array(e.q_values()); })
      .def_property_readonly("q_raw", [](const NptEstimate& e) { return to_array(e.q_raw()); })
      .def_property_readonly("y_window", [](const NptEstimate& e) {
        return py::make_tuple(e.y_window().lo, e.y_window().hi);
      })
      .def_property_readonly("bandwidths", [](const NptEstimate& e) { return to_json(e.bandwidths()).dump(); });

  m.def("estimate_h", [](const Array& y, const Array& x, const std::string& config_json) {
        const Dataset d = make_dataset(y, x);
        const RunConfig c = parse_config(config_json);
        py::gil_scoped_release release;
        return estimate_h(d, c.npt);
      },
      py::arg("y"), py::arg("x"), py::arg("config_json") = "");

  m.def("test_statistic", [](const Array& y, const Array& x, const std::string& config_json) {
        const Dataset d = make_dataset(y, x);
        const RunConfig c = parse_config(config_json);
        py::gil_scoped_release release;
        const NptEstimate est = estimate_h(d, c.npt);
        const WeightFn w = WeightFn::from_sample(c.test.weight, d.ys());
        const TnResult t = compute_Tn(d, est, *make_family(c.family), w, c.test);
        Json j = {{"t_n", t.t_n}, {"gamma_hat", to_json(t.gamma)}, {"stalled", t.stalled}};
        return j.dump();
      },
      py::arg("y"), py::arg("x"), py::arg("config_json") = "");

  m.def("gof_test", [](const Array& y, const Array& x, const std::string& config_json) {
        const Dataset d = make_dataset(y, x);
        const RunConfig c = parse_config(config_json);
        py::gil_scoped_release release;
        return to_json(gof_test(d, make_family(c.family), gof_from(c))).dump();
      },
      py::arg("y"), py::arg("x"), py::arg("config_json") = "");

  m.def("relevant_test", [](const Array& y, const Array& x, const std::string& config_json) {
        const Dataset d = make_dataset(y, x);
        const RunConfig c = parse_config(config_json);
        RelevantConfig rc = c.relevant;
        rc.seed = c.seed_or_zero();
        rc.workers = c.workers;
        py::gil_scoped_release release;
        return to_json(relevant_test(d, make_family(c.family), rc, c.npt, c.test)).dump();
      },
      py::arg("y"), py::arg("x"), py::arg("config_json") = "");

  m.def("simulate", [](double theta0, std::size_t n, std::uint64_t seed, const std::string& r, double c,
                       bool local) {
        SimScenario sc;
        sc.theta0 = theta0;
        sc.n = n;
        if (!r.empty()) sc.alternative = {local ? AltKind::Local : AltKind::Fixed, parse_r(r), c, local ? c : 1.0};
        Dataset d;
        {
          py::gil_scoped_release release;
          Rng rng(seed, {1});
          d = generate(sc, rng);
        }
        return py::make_tuple(to_array(d.ys()), to_array(d.xs()));
      },
      py::arg("theta0"), py::arg("n"), py::arg("seed"), py::arg("r") = "", py::arg("c") = 0.0,
      py::arg("local") = false,
      "Draw (y, x) from the simulation design. With local=True, c scales the n^(-1/2) direction.");

  m.def("bootstrap_quantile", [](const Array& stats, double alpha) {
        const auto v = to_vec(stats);
        return bootstrap_quantile(v, alpha);
      },
      py::arg("stats"), py::arg("alpha"));

  m.def("read_dataset", [](const std::string& path) {
        const Dataset d = read_dataset(path);
        return py::make_tuple(to_array(d.ys()), to_array(d.xs()), d.dx());
      },
      py::arg("path"));
}
