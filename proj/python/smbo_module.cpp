#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "smbo/acquisition.hpp"
#include "smbo/cli.hpp"
#include "smbo/dcn_space.hpp"
#include "smbo/density.hpp"
#include "smbo/error.hpp"
#include "smbo/optimizer.hpp"
#include "smbo/report.hpp"
#include "smbo/trial_store.hpp"

namespace py = pybind11;
using namespace smbo;

namespace {

py::object to_py(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return py::none();
    case nlohmann::json::value_t::boolean: return py::bool_(j.get<bool>());
    case nlohmann::json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
    case nlohmann::json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
    case nlohmann::json::value_t::number_float: return py::float_(j.get<double>());
    case nlohmann::json::value_t::string: return py::str(j.get<std::string>());
    case nlohmann::json::value_t::array: {
      py::list out;
      for (const auto& x : j) out.append(to_py(x));
      return out;
    }
    case nlohmann::json::value_t::object: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_py(v);
      return out;
    }
    default: throw Error("unsupported JSON value");
  }
}

nlohmann::json from_py(const py::handle& h) {
  if (h.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(h)) return h.cast<bool>();
  if (py::isinstance<py::int_>(h)) {
    if (h.cast<py::int_>() >= py::int_(0)) return h.cast<std::uint64_t>();
    return h.cast<std::int64_t>();
  }
  if (py::isinstance<py::float_>(h)) return h.cast<double>();
  if (py::isinstance<py::str>(h)) return h.cast<std::string>();
  if (py::isinstance<py::dict>(h)) {
    auto out = nlohmann::json::object();
    for (const auto& [k, v] : h.cast<py::dict>()) out[py::str(k).cast<std::string>()] = from_py(v);
    return out;
  }
  if (py::isinstance<py::list>(h) || py::isinstance<py::tuple>(h)) {
    auto out = nlohmann::json::array();
    for (const auto& x : h) out.push_back(from_py(x));
    return out;
  }
  throw Error("cannot convert Python value of type " + std::string(py::str(py::type::of(h))));
}

Assignment assignment_from_py(const py::dict& d) { return Assignment::from_json(from_py(d)); }
py::dict assignment_to_py(const Assignment& a) { return to_py(a.to_json()); }

std::vector<Trial> trials_from_py(const py::list& xs) {
  std::vector<Trial> out;
  for (const auto& x : xs) out.push_back(trial_from_json(from_py(x)));
  return out;
}

py::list trials_to_py(const std::vector<Trial>& ts) {
  py::list out;
  for (const auto& t : ts) out.append(to_py(to_json(t)));
  return out;
}

/// Calls a Python function with the assignment dict; it returns the error.
class CallableEvaluator : public Evaluator {
 public:
  explicit CallableEvaluator(py::function f) : f_(std::move(f)) {}
  EvaluationResult evaluate(const EvalRequest& r) override {
    py::gil_scoped_acquire gil;
    const double e = f_(assignment_to_py(*r.assignment)).cast<double>();
    return EvaluationResult::ok(e);
  }

 private:
  py::function f_;
};

OptimizerConfig make_config(std::size_t t_init, std::size_t n_total, double gamma, double p,
                            std::size_t candidates, std::uint64_t seed) {
  OptimizerConfig cfg;
  cfg.t_init = t_init;
  cfg.n_total = n_total;
  cfg.acquisition.gamma = gamma;
  cfg.acquisition.p_hybrid = p;
  cfg.acquisition.n_candidates = candidates;
  cfg.master_seed = seed;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sequential model-based search over conditional hyper-parameter spaces";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<HardFault>(m, "HardFault", error.ptr());

  py::class_<SearchSpace>(m, "SearchSpace")
      .def_static("from_json", [](const py::dict& d) { return SearchSpace::from_json(from_py(d)); })
      .def_static("from_file", [](const std::string& path) { return dcn::load_space_file(path); })
      .def("to_json", [](const SearchSpace& s) { return to_py(s.to_json()); })
      .def_property_readonly("name", &SearchSpace::name)
      .def_property_readonly("version", &SearchSpace::version)
      .def("param_names",
           [](const SearchSpace& s) {
             std::vector<std::string> out;
             for (const auto& p : s.params()) out.push_back(p.name);
             return out;
           })
      .def("sample", [](const SearchSpace& s, std::uint64_t seed) {
        Rng rng(seed);
        return assignment_to_py(sample_uniform(s, rng));
      }, py::arg("seed"))
      .def("validate", [](const SearchSpace& s, const py::dict& a) { return validate(s, assignment_from_py(a)); });

  py::class_<DensityModel>(m, "DensityModel")
      .def_static("fit",
                  [](const SearchSpace& s, const py::list& obs) {
                    std::vector<Assignment> xs;
                    for (const auto& o : obs) xs.push_back(assignment_from_py(o.cast<py::dict>()));
                    return DensityModel::fit(s, xs);
                  },
                  py::keep_alive<0, 1>())
      .def("log_density", [](const DensityModel& d, const py::dict& a) { return d.log_density(assignment_from_py(a)); });

  m.def("score_tpe", &score_tpe, py::arg("l_log"), py::arg("g_log"), py::arg("e_star"), py::arg("gamma"));
  m.def("score_simplified", &score_simplified, py::arg("l_log"));
  m.def(
      "split_trials",
      [](const py::list& trials, double gamma) {
        const auto s = split_trials(trials_from_py(trials), gamma);
        return py::make_tuple(s.e_star, trials_to_py(s.good), trials_to_py(s.bad));
      },
      py::arg("trials"), py::arg("gamma") = 0.5);
  m.def(
      "propose_next",
      [](const py::list& history, const SearchSpace& space, double gamma, double p, std::size_t candidates,
         std::uint64_t seed) {
        AcquisitionConfig cfg{gamma, p, candidates};
        Rng rng(seed);
        const auto prop = propose_next(trials_from_py(history), space, cfg, rng);
        return py::make_tuple(assignment_to_py(prop.assignment), std::string(to_string(prop.branch)));
      },
      py::arg("history"), py::arg("space"), py::arg("gamma") = 0.5, py::arg("p") = 0.9,
      py::arg("candidates") = 64, py::arg("seed") = 0);

  m.def(
      "optimize",
      [](const SearchSpace& space, py::function objective, const std::string& store, std::size_t n_total,
         std::size_t t_init, double gamma, double p, std::size_t candidates, std::uint64_t seed) {
        const auto cfg = make_config(t_init, n_total, gamma, p, candidates, seed);
        CallableEvaluator ev(std::move(objective));
        auto st = TrialStore::open_or_create(store, make_header(space, cfg));
        return trials_to_py(resume(space, ev, cfg, st).trials);
      },
      py::arg("space"), py::arg("objective"), py::arg("store"), py::arg("n_total") = 100, py::arg("t_init") = 32,
      py::arg("gamma") = 0.5, py::arg("p") = 0.9, py::arg("candidates") = 64, py::arg("seed") = 0);
  m.def(
      "load_trials",
      [](const std::string& path, bool recover) {
        const auto db = load(path, LoadOptions{recover, std::nullopt});
        return py::make_tuple(to_py(to_json(db.header)), trials_to_py(db.trials));
      },
      py::arg("path"), py::arg("recover") = false);
  m.def(
      "compute_curves",
      [](const py::list& trials, std::size_t window) {
        const auto ts = trials_from_py(trials);
        return curves_to_csv(compute_curves(ts, window));
      },
      py::arg("trials"), py::arg("window") = 10);
  m.def("best_trials", [](const py::list& trials, std::size_t k) { return to_py(best_trials(trials_from_py(trials), k)); },
        py::arg("trials"), py::arg("k") = 3);

  m.def(
      "surrogate_error",
      [](const py::dict& surface, const py::dict& a) {
        return eval_surrogate(assignment_from_py(a), SurfaceSpec::from_json(from_py(surface))).error;
      },
      py::arg("surface"), py::arg("assignment"));
  m.def(
      "random_surface", [](const SearchSpace& s, std::uint64_t seed) { return to_py(SurfaceSpec::random_for(s, seed).to_json()); },
      py::arg("space"), py::arg("seed") = 0);

  m.def("dcn_space", [](const py::dict& profile) { return dcn::build_space(dcn::RangeProfile::from_json(from_py(profile))); },
        py::arg("profile"));
  m.def("dcn_default_profile", [] { return to_py(dcn::RangeProfile{}.to_json()); });
  m.def(
      "decode_architecture",
      [](const SearchSpace& space, const py::dict& a) -> py::object {
        const auto d = dcn::decode(space, assignment_from_py(a));
        if (const auto* bad = std::get_if<dcn::InvalidArchitecture>(&d)) return py::str(bad->reason);
        const auto& arch = std::get<dcn::ArchitectureDescription>(d);
        py::dict out;
        out["num_blocks"] = arch.blocks.size();
        out["num_hidden"] = arch.hidden.size();
        std::vector<std::int64_t> sizes;
        for (const auto& s : arch.block_outputs) sizes.push_back(s.height);
        out["spatial_sizes"] = sizes;
        out["trainable_params"] = arch.trainable_param_count;
        out["config"] = dcn::export_config(arch);
        return out;
      },
      py::arg("space"), py::arg("assignment"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
