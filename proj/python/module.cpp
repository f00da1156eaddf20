#include <map>
#include <optional>
#include <string>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tskit/arnoldi.hpp"
#include "tskit/cli/config.hpp"
#include "tskit/cli/runner.hpp"
#include "tskit/continuation.hpp"
#include "tskit/models.hpp"
#include "tskit/projective.hpp"
#include "tskit/rpm.hpp"

namespace py = pybind11;
using namespace tskit;

namespace {

using ParamMap = std::map<std::string, double>;

// Python callers pass parameters as a dict; an empty dict means the model
// defaults. `continuation` names the continuation slot, defaulting to the
// model's own choice.
Parameters resolve(const Timestepper& m, const std::optional<ParamMap>& values,
                   const std::optional<std::string>& continuation = std::nullopt) {
  Parameters p = m.default_parameters();
  if (values) {
    for (const auto& [k, v] : *values) p.set(k, v);
  }
  if (continuation) p.set_continuation(*continuation);
  return p;
}

ParamMap to_map(const Parameters& p) { return p.values(); }

RpmOptions rpm_options(const py::kwargs& kw) {
  RpmOptions o;
  for (const auto& item : kw) {
    const std::string key = py::cast<std::string>(item.first);
    const py::handle v = item.second;
    if (key == "tolerance") o.tolerance = py::cast<double>(v);
    else if (key == "max_iterations") o.max_iterations = py::cast<int>(v);
    else if (key == "max_basis") o.max_basis = py::cast<int>(v);
    else if (key == "grow_threshold") o.grow_threshold = py::cast<double>(v);
    else if (key == "drop_threshold") o.drop_threshold = py::cast<double>(v);
    else if (key == "history_length") o.history_length = py::cast<int>(v);
    else if (key == "warmup_iterations") o.warmup_iterations = py::cast<int>(v);
    else if (key == "refresh_interval") o.refresh_interval = py::cast<int>(v);
    else throw py::type_error("rpm_solve: unexpected keyword '" + key + "'");
  }
  return o;
}

// Python-defined maps. The GIL is held whenever the solvers call back in,
// since every entry point below runs on the calling Python thread.
class PyTimestepper : public FunctionTimestepper {
 public:
  PyTimestepper(std::size_t dim, py::function fn, std::string name, ParamMap defaults)
      : FunctionTimestepper(
            dim,
            [fn](const StateVector& u, const Parameters& p) {
              py::gil_scoped_acquire gil;
              return py::cast<StateVector>(fn(u, p.values()));
            },
            std::move(name), Parameters(std::move(defaults))) {}
};

}  // namespace

PYBIND11_MODULE(_tskit, m) {
  m.doc() = "Matrix-free fixed-point, stability, continuation and projective tools for black-box cycle maps";

  // One Python class per error kind, all deriving from tskit.Error.
  // Translators run newest first, so the base class is registered first.
  auto& base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<UnstableEnvelope>(m, "UnstableEnvelope", base.ptr());
  py::register_exception<NotAFixedPoint>(m, "NotAFixedPoint", base.ptr());
  py::register_exception<CflViolation>(m, "CflViolation", base.ptr());
  py::register_exception<NegativeConcentration>(m, "NegativeConcentration", base.ptr());
  py::register_exception<InitialSolveFailed>(m, "InitialSolveFailed", base.ptr());
  py::register_exception<IncomparableRuns>(m, "IncomparableRuns", base.ptr());

  // ---------------------------------------------------------------- models
  py::class_<Timestepper>(m, "Timestepper")
      .def_property_readonly("dimension", &Timestepper::dimension)
      .def_property_readonly("name", &Timestepper::name)
      .def_property_readonly("period", &Timestepper::period)
      .def_property_readonly("evaluations", &Timestepper::evaluations)
      .def("default_parameters", [](const Timestepper& t) { return to_map(t.default_parameters()); })
      .def("default_initial_state", &Timestepper::default_initial_state)
      .def(
          "evaluate",
          [](const Timestepper& t, const StateVector& u, std::optional<ParamMap> p) {
            return t.evaluate(u, resolve(t, p));
          },
          py::arg("u"), py::arg("params") = py::none());

  py::class_<PyTimestepper, Timestepper>(m, "FunctionTimestepper")
      .def(py::init<std::size_t, py::function, std::string, ParamMap>(), py::arg("dimension"), py::arg("fn"),
           py::arg("name") = "function", py::arg("defaults") = ParamMap{});

  py::class_<LinearMapModel, Timestepper>(m, "LinearMapModel")
      .def(py::init([](std::vector<double> eigenvalues, std::vector<std::pair<double, double>> complex_pairs,
                       std::optional<StateVector> offset, std::optional<StateVector> fixed_point,
                       std::optional<std::uint64_t> conjugation_seed, std::optional<int> lambda_slot) {
             LinearMapSpec s;
             s.real_eigenvalues = std::move(eigenvalues);
             s.complex_pairs = std::move(complex_pairs);
             s.offset = std::move(offset);
             s.fixed_point = std::move(fixed_point);
             s.conjugation_seed = conjugation_seed;
             s.lambda_slot = lambda_slot;
             return std::make_unique<LinearMapModel>(std::move(s));
           }),
           py::arg("eigenvalues"), py::arg("complex_pairs") = std::vector<std::pair<double, double>>{},
           py::arg("offset") = py::none(), py::arg("fixed_point") = py::none(),
           py::arg("conjugation_seed") = py::none(), py::arg("lambda_slot") = py::none())
      .def("matrix", [](const LinearMapModel& l) { return l.matrix(); })
      .def("fixed_point", [](const LinearMapModel& l) { return l.fixed_point(); });

  py::class_<QuadraticMap, Timestepper>(m, "QuadraticMap")
      .def(py::init<std::size_t, double>(), py::arg("dimension") = 1, py::arg("lambda_") = 0.0);

  py::class_<ForcedOscillatorModel, Timestepper>(m, "ForcedOscillatorModel")
      .def(py::init([](double zeta, double omega0, double omega, double forcing, int n_steps) {
             return std::make_unique<ForcedOscillatorModel>(ForcedOscillatorSpec{zeta, omega0, omega, forcing, n_steps});
           }),
           py::arg("zeta") = 0.1, py::arg("omega0") = 1.0, py::arg("omega") = 1.0, py::arg("forcing") = 1.0,
           py::arg("n_steps") = ForcedOscillatorSpec{}.n_steps)
      .def_static("monodromy", [](const ParamMap& p) { return ForcedOscillatorModel::monodromy(Parameters(p)); })
      .def_static("periodic_state",
                  [](const ParamMap& p) { return ForcedOscillatorModel::periodic_state(Parameters(p)); });

  py::class_<AdsorptionColumnModel, Timestepper>(m, "AdsorptionColumnModel")
      .def(py::init([](int n_z, double length, double dt) {
             return std::make_unique<AdsorptionColumnModel>(AdsorptionGeometry{n_z, length, dt});
           }),
           py::arg("n_z") = 90, py::arg("length") = 1.0, py::arg("dt") = 0.005)
      .def_property_readonly("max_balance_error", &AdsorptionColumnModel::max_balance_error)
      .def("reset_balance_monitor", &AdsorptionColumnModel::reset_balance_monitor);

  // --------------------------------------------------------------- solvers
  py::class_<FixedPointResult>(m, "FixedPointResult")
      .def_readonly("u", &FixedPointResult::u)
      .def_readonly("residual", &FixedPointResult::residual)
      .def_readonly("iterations", &FixedPointResult::iterations)
      .def_readonly("map_calls", &FixedPointResult::map_calls)
      .def_readonly("residual_history", &FixedPointResult::residual_history)
      .def_property_readonly("status", [](const FixedPointResult& r) { return to_string(r.status); })
      .def_property_readonly("converged", &FixedPointResult::converged)
      .def_property_readonly("basis", [](const FixedPointResult& r) { return r.basis.z; })
      .def_property_readonly("slow_multipliers", [](const FixedPointResult& r) { return slow_multipliers(r.basis); });

  m.def(
      "rpm_solve",
      [](const Timestepper& t, const StateVector& u0, std::optional<ParamMap> params, const py::kwargs& kw) {
        return rpm_solve(t, u0, resolve(t, params), rpm_options(kw));
      },
      py::arg("model"), py::arg("u0"), py::arg("params") = py::none(),
      "Recursive Projection Method. Keyword options mirror RpmOptions (tolerance, max_basis, ...).");

  py::class_<DirectResult>(m, "DirectResult")
      .def_readonly("u", &DirectResult::u)
      .def_readonly("change", &DirectResult::change)
      .def_readonly("cycles", &DirectResult::cycles)
      .def_readonly("converged", &DirectResult::converged)
      .def_readonly("map_calls", &DirectResult::map_calls);

  m.def(
      "direct_simulation",
      [](const Timestepper& t, const StateVector& u0, double tolerance, int max_cycles,
         std::optional<ParamMap> params) { return direct_simulation(t, u0, resolve(t, params), tolerance, max_cycles); },
      py::arg("model"), py::arg("u0"), py::arg("tolerance") = 1e-6, py::arg("max_cycles") = 100000,
      py::arg("params") = py::none());

  py::class_<RitzPair>(m, "RitzPair")
      .def_readonly("value", &RitzPair::value)
      .def_readonly("residual", &RitzPair::residual)
      .def_readonly("cluster", &RitzPair::cluster);

  py::class_<FloquetResult>(m, "FloquetResult")
      .def_readonly("pairs", &FloquetResult::pairs)
      .def_readonly("stable", &FloquetResult::stable)
      .def_property_readonly("multipliers",
                             [](const FloquetResult& f) {
                               std::vector<Complex> out;
                               for (const auto& rp : f.pairs) out.push_back(rp.value);
                               return out;
                             })
      .def_property_readonly("breakdown", [](const FloquetResult& f) { return f.factorization.breakdown; })
      .def_property_readonly("warning", [](const FloquetResult& f) { return f.factorization.warning; });

  m.def(
      "floquet_multipliers",
      [](const Timestepper& t, const StateVector& u_star, int k, std::optional<ParamMap> params,
         std::optional<StateVector> start, double stability_margin) {
        FloquetOptions o;
        o.start = std::move(start);
        o.stability_margin = stability_margin;
        return floquet_multipliers(t, u_star, resolve(t, params), k, o);
      },
      py::arg("model"), py::arg("u_star"), py::arg("k"), py::arg("params") = py::none(), py::arg("start") = py::none(),
      py::arg("stability_margin") = 1e-8);

  py::class_<BranchPoint>(m, "BranchPoint")
      .def_readonly("u", &BranchPoint::u)
      .def_readonly("lambda_", &BranchPoint::lambda)
      .def_readonly("arclength", &BranchPoint::arclength)
      .def_readonly("residual", &BranchPoint::residual)
      .def_readonly("fold", &BranchPoint::fold)
      .def_readonly("multipliers", &BranchPoint::multipliers)
      .def_readonly("slow_determinant", &BranchPoint::slow_determinant);

  py::class_<FoldRecord>(m, "FoldRecord")
      .def_readonly("lambda_", &FoldRecord::lambda)
      .def_readonly("u", &FoldRecord::u)
      .def_readonly("left", &FoldRecord::left)
      .def_readonly("right", &FoldRecord::right);

  py::class_<BranchResult>(m, "BranchResult")
      .def_readonly("points", &BranchResult::points)
      .def_readonly("map_calls", &BranchResult::map_calls)
      .def_property_readonly("termination", [](const BranchResult& b) { return to_string(b.termination); });

  m.def(
      "trace_branch",
      [](const Timestepper& t, const StateVector& u0, double lambda0, double lambda_min, double lambda_max,
         std::optional<ParamMap> params, std::optional<std::string> parameter, double step, double tolerance,
         int max_points) {
        ContinuationOptions o;
        o.step = step;
        o.step_max = std::max(o.step_max, step);
        o.tolerance = tolerance;
        o.max_points = max_points;
        return trace_branch(t, u0, lambda0, resolve(t, params, parameter), lambda_min, lambda_max, o);
      },
      py::arg("model"), py::arg("u0"), py::arg("lambda0"), py::arg("lambda_min"), py::arg("lambda_max"),
      py::arg("params") = py::none(), py::arg("parameter") = py::none(), py::arg("step") = 0.01,
      py::arg("tolerance") = 1e-8, py::arg("max_points") = 400);

  m.def(
      "detect_fold",
      [](const BranchResult& b, const Timestepper* t, std::optional<ParamMap> params,
         std::optional<std::string> parameter) {
        if (!t) return detect_fold(b.points);
        return detect_fold(*t, b.points, resolve(*t, params, parameter), ContinuationOptions{});
      },
      py::arg("branch"), py::arg("model") = nullptr, py::arg("params") = py::none(),
      py::arg("parameter") = py::none(),
      "Folds between sign changes of det(I - H); refined by bisection when a model is given.");

  py::class_<EnvelopeTrajectory>(m, "EnvelopeTrajectory")
      .def_readonly("map_calls", &EnvelopeTrajectory::map_calls)
      .def_readonly("cycles_covered", &EnvelopeTrajectory::cycles_covered)
      .def_readonly("rounds", &EnvelopeTrajectory::rounds)
      .def_readonly("converged", &EnvelopeTrajectory::converged)
      .def_readonly("jumps", &EnvelopeTrajectory::jumps)
      .def_readonly("final_state", &EnvelopeTrajectory::final_state)
      .def_readonly("final_chord_norm", &EnvelopeTrajectory::final_chord_norm)
      .def_property_readonly("speedup", &EnvelopeTrajectory::speedup);

  m.def(
      "projective_run",
      [](const Timestepper& t, const StateVector& u0, int inner_steps, int jump, double tolerance, bool adaptive,
         int max_rounds, std::optional<ParamMap> params) {
        ProjectiveSchedule s;
        s.inner_steps = inner_steps;
        s.jump = jump;
        s.tolerance = tolerance;
        s.adaptive = adaptive;
        s.max_rounds = max_rounds;
        return projective_run(t, u0, resolve(t, params), s);
      },
      py::arg("model"), py::arg("u0"), py::arg("inner_steps") = 3, py::arg("jump") = 9, py::arg("tolerance") = 1e-6,
      py::arg("adaptive") = false, py::arg("max_rounds") = 10000, py::arg("params") = py::none());

  m.def("adaptive_jump_cap", &adaptive_jump_cap, py::arg("mu_hat"), py::arg("inner_steps"));

  // ------------------------------------------------------------ batch runs
  py::class_<cli::RunReport>(m, "RunReport")
      .def_readonly("task", &cli::RunReport::task)
      .def_readonly("model", &cli::RunReport::model)
      .def_readonly("status", &cli::RunReport::status)
      .def_readonly("success", &cli::RunReport::success)
      .def_readonly("map_calls", &cli::RunReport::map_calls)
      .def_readonly("wall_seconds", &cli::RunReport::wall_seconds)
      .def_readonly("headline", &cli::RunReport::headline)
      .def_readonly("csv_paths", &cli::RunReport::csv_paths)
      .def_readonly("fixed_point", &cli::RunReport::fixed_point)
      .def("to_text", &cli::RunReport::to_text);

  m.def(
      "run_config",
      [](const std::string& yaml, std::optional<std::string> out) {
        cli::RunConfig c = cli::parse_config(yaml);
        if (out) c.output.directory = *out;
        return cli::run_task(c);
      },
      py::arg("yaml"), py::arg("out") = py::none(), "Parse YAML config text and run its task.");

  m.def("validate_config", [](const std::string& yaml) { return cli::serialize_config(cli::parse_config(yaml)); },
        py::arg("yaml"), "Parse YAML config text; returns the canonical form with every default spelled out.");

  m.def(
      "speedup",
      [](const cli::RunReport& a, const cli::RunReport& b) { return cli::compare_runs(a, b).speedup; },
      py::arg("a"), py::arg("b"));
}
