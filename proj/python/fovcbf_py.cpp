#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fovcbf/cbf_core.hpp"
#include "fovcbf/config.hpp"
#include "fovcbf/dynamics.hpp"
#include "fovcbf/error.hpp"
#include "fovcbf/geom3d.hpp"
#include "fovcbf/qp.hpp"
#include "fovcbf/scenarios.hpp"

namespace py = pybind11;
using namespace fovcbf;
using namespace pybind11::literals;

namespace {

Rotation to_rotation(const Mat3& m) { return Rotation::from_matrix(m); }

py::dict solution_dict(const QpSolution& s) {
  return py::dict("z"_a = s.z, "status"_a = to_string(s.status), "kkt_residual"_a = s.kkt_residual,
                  "primal_residual"_a = s.primal_residual, "active_set"_a = s.active_set,
                  "iterations"_a = s.iterations);
}

py::dict summary_dict(const Summary& s) {
  return py::dict("min_h"_a = s.min_h, "max_tracking_error"_a = s.max_tracking_error,
                  "rms_tracking_error"_a = s.rms_tracking_error,
                  "infeasible_steps"_a = s.infeasible_steps, "max_c2_used"_a = s.max_c2_used,
                  "min_c2_used"_a = s.min_c2_used, "tracking_error_at_5s"_a = s.tracking_error_at_5s,
                  "max_tracking_error_after_5s"_a = s.max_tracking_error_after_5s,
                  "steps"_a = s.steps);
}

// column-per-record arrays, cheaper to hand to numpy than a list of records
py::dict log_dict(const SimLog& log) {
  const auto n = static_cast<py::ssize_t>(log.records.size());
  const py::ssize_t nf = log.features;
  py::array_t<double> t(n), min_h(n), err(n);
  py::array_t<double> p({n, py::ssize_t{3}}), v({n, py::ssize_t{3}}), w({n, py::ssize_t{3}});
  py::array_t<double> R({n, py::ssize_t{3}, py::ssize_t{3}});
  py::array_t<double> un({n, py::ssize_t{6}}), uf({n, py::ssize_t{6}});
  py::array_t<double> h({n, nf}), c1({n, nf}), c2({n, nf}), dt({n, nf});
  py::list status;
  auto T = t.mutable_unchecked<1>();
  auto MH = min_h.mutable_unchecked<1>();
  auto E = err.mutable_unchecked<1>();
  auto P = p.mutable_unchecked<2>();
  auto V = v.mutable_unchecked<2>();
  auto W = w.mutable_unchecked<2>();
  auto RR = R.mutable_unchecked<3>();
  auto UN = un.mutable_unchecked<2>();
  auto UF = uf.mutable_unchecked<2>();
  auto H = h.mutable_unchecked<2>();
  auto C1 = c1.mutable_unchecked<2>();
  auto C2 = c2.mutable_unchecked<2>();
  auto D = dt.mutable_unchecked<2>();
  for (py::ssize_t k = 0; k < n; ++k) {
    const SimRecord& r = log.records[k];
    T(k) = r.t;
    MH(k) = r.min_h;
    E(k) = r.tracking_error;
    for (int i = 0; i < 3; ++i) {
      P(k, i) = r.state.p[i];
      V(k, i) = r.state.v[i];
      W(k, i) = r.state.omega[i];
      for (int j = 0; j < 3; ++j) RR(k, i, j) = r.state.R.matrix()(i, j);
    }
    for (int i = 0; i < 6; ++i) {
      UN(k, i) = r.u_nominal[i];
      UF(k, i) = r.u_filtered[i];
    }
    const bool filtered = !r.c1.empty();
    for (py::ssize_t i = 0; i < nf; ++i) {
      H(k, i) = r.h[i];
      C1(k, i) = filtered ? r.c1[i] : std::nan("");
      C2(k, i) = filtered ? r.c2[i] : std::nan("");
      D(k, i) = i < static_cast<py::ssize_t>(r.d_tilde.size()) ? r.d_tilde[i] : std::nan("");
    }
    status.append(to_string(r.status));
  }
  return py::dict("t"_a = t, "p"_a = p, "R"_a = R, "v"_a = v, "omega"_a = w, "h"_a = h,
                  "min_h"_a = min_h, "tracking_error"_a = err, "u_nominal"_a = un,
                  "u_filtered"_a = uf, "c1"_a = c1, "c2"_a = c2, "d_tilde"_a = dt,
                  "status"_a = status, "summary"_a = summary_dict(metrics(log)));
}

}  // namespace

PYBIND11_MODULE(fovcbf, m) {
  m.doc() = "Field-of-view CBF safety filter for first- and second-order rigid bodies";

  // args are (message, code name)
  static PyObject* error = PyErr_NewException("fovcbf.Error", PyExc_RuntimeError, nullptr);
  m.attr("Error") = py::handle(error);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetObject(error, py::make_tuple(e.what(), to_string(e.code())).ptr());
    }
  });

  // geometry
  m.def("hat", &hat, "v"_a);
  m.def("vee", &vee, "m"_a);
  m.def("projector", &projector, "unit"_a);
  m.def("so3_exp", [](const Vec3& w) { return Mat3(so3_exp(w).matrix()); }, "omega"_a);
  m.def("so3_log", [](const Mat3& R) { return so3_log(to_rotation(R)); }, "R"_a);
  m.def("look_at", [](const Vec3& f, const Vec3& up) { return Mat3(Rotation::look_at(f, up).matrix()); },
        "forward"_a, "up"_a = Vec3::UnitZ());
  m.def("bearing_distance", [](const Vec3& p, const Vec3& q) {
    const auto bd = bearing_distance(p, q);
    return py::make_tuple(bd.beta, bd.distance);
  }, "p"_a, "q"_a);

  // barrier pieces
  py::class_<FovSensor>(m, "FovSensor")
      .def(py::init(&FovSensor::make), "axis"_a, "half_aperture"_a)
      .def_readonly("axis", &FovSensor::axis)
      .def_readonly("half_aperture", &FovSensor::half_aperture)
      .def_readonly("cos_half_aperture", &FovSensor::cos_half_aperture);

  py::class_<ClassK>(m, "ClassK")
      .def(py::init(&ClassK::linear), "kappa"_a)
      .def_readonly("kappa", &ClassK::kappa)
      .def("__call__", &ClassK::operator(), "h"_a);

  py::class_<RobustnessParams>(m, "RobustnessParams")
      .def(py::init([](double gamma0, double d_min, double d_max, double margin) {
             RobustnessParams rp{gamma0, d_min, d_max, margin};
             rp.validate();
             return rp;
           }),
           "gamma0"_a = 3.0, "d_min"_a = 0.5, "d_max"_a = 15.0, "margin"_a = 0.0)
      .def_readwrite("gamma0", &RobustnessParams::gamma0)
      .def_readwrite("d_min", &RobustnessParams::d_min)
      .def_readwrite("d_max", &RobustnessParams::d_max)
      .def_readwrite("margin", &RobustnessParams::margin);

  py::class_<Interval>(m, "Interval")
      .def_readonly("lo", &Interval::lo)
      .def_readonly("hi", &Interval::hi)
      .def_readonly("closed", &Interval::closed)
      .def("contains", &Interval::contains, "x"_a, "tol"_a = 0.0)
      .def("__repr__", [](const Interval& i) {
        return std::string(i.closed ? "[" : "(") + std::to_string(i.lo) + ", " + std::to_string(i.hi) +
               (i.closed ? "]" : ")");
      });

  py::class_<BodyState>(m, "BodyState")
      .def(py::init([](const Vec3& p, const Mat3& R, const Vec3& v, const Vec3& omega) {
             return BodyState{p, to_rotation(R), v, omega};
           }),
           "p"_a = Vec3::Zero(), "R"_a = Mat3::Identity(), "v"_a = Vec3::Zero(),
           "omega"_a = Vec3::Zero())
      .def_readwrite("p", &BodyState::p)
      .def_property("R", [](const BodyState& s) { return Mat3(s.R.matrix()); },
                    [](BodyState& s, const Mat3& R) { s.R = to_rotation(R); })
      .def_readwrite("v", &BodyState::v)
      .def_readwrite("omega", &BodyState::omega);

  py::class_<FeatureObs>(m, "FeatureObs")
      .def(py::init([](const Vec3& beta, const Vec3& beta_dot, double d_hat, const Vec3& q) {
             return FeatureObs{beta, beta_dot, d_hat, q};
           }),
           "beta"_a, "beta_dot"_a = Vec3::Zero(), "d_hat"_a = 1.0, "q"_a = Vec3::Zero())
      .def_readwrite("beta", &FeatureObs::beta)
      .def_readwrite("beta_dot", &FeatureObs::beta_dot)
      .def_readwrite("d_hat", &FeatureObs::d_hat)
      .def_readwrite("q", &FeatureObs::q);

  py::class_<ConstraintRow>(m, "ConstraintRow")
      .def_readonly("coeff_u", &ConstraintRow::coeff_u)
      .def_readonly("coeff_c1", &ConstraintRow::coeff_c1)
      .def_readonly("coeff_c2", &ConstraintRow::coeff_c2)
      .def_readonly("rhs", &ConstraintRow::rhs)
      .def("residual", &ConstraintRow::residual, "u"_a, "c1"_a, "c2"_a);

  py::class_<FeatureRows>(m, "FeatureRows")
      .def_readonly("rows", &FeatureRows::rows)
      .def_readonly("gamma0", &FeatureRows::gamma0)
      .def_readonly("c2_range", &FeatureRows::c2_range)
      .def_readonly("barrier", &FeatureRows::barrier);

  m.def("barrier", [](const Vec3& beta, const Mat3& R, const FovSensor& s) {
    return barrier(beta, to_rotation(R), s);
  }, "beta"_a, "R"_a, "sensor"_a);
  m.def("grad_p", [](const Vec3& beta, const Mat3& R, const FovSensor& s, double d) {
    return grad_p(beta, to_rotation(R), s, d);
  }, "beta"_a, "R"_a, "sensor"_a, "d"_a);
  m.def("grad_R", [](const Vec3& beta, const Mat3& R, const FovSensor& s) {
    return grad_R(beta, to_rotation(R), s);
  }, "beta"_a, "R"_a, "sensor"_a);
  m.def("lie_derivative", &lie_derivative, "state"_a, "obs"_a, "sensor"_a);
  m.def("k_constant", &k_constant, "gamma1"_a, "gamma2"_a);
  m.def("c2_bounds_first", &c2_bounds_first, "params"_a);
  m.def("c2_bounds_second", &c2_bounds_second, "k"_a, "params"_a);
  m.def("first_order_rows", &first_order_rows, "state"_a, "obs"_a, "sensor"_a, "gamma"_a, "params"_a);
  m.def("second_order_rows", &second_order_rows, "state"_a, "obs"_a, "sensor"_a, "gamma1"_a,
        "gamma2"_a, "params"_a);

  // QP
  m.def("solve_qp", [](const MatX& H, const VecX& g, std::optional<MatX> A_ineq,
                       std::optional<VecX> b_ineq, std::optional<MatX> A_eq, std::optional<VecX> b_eq,
                       std::optional<VecX> lower, std::optional<VecX> upper) {
    const Eigen::Index n = g.size();
    QpProblem qp{H, g, A_ineq.value_or(MatX(0, n)), b_ineq.value_or(VecX(0)),
                 A_eq.value_or(MatX(0, n)), b_eq.value_or(VecX(0)),
                 lower.value_or(VecX::Constant(n, -std::numeric_limits<double>::infinity())),
                 upper.value_or(VecX::Constant(n, std::numeric_limits<double>::infinity()))};
    return solution_dict(solve(qp));
  }, "H"_a, "g"_a, "A_ineq"_a = py::none(), "b_ineq"_a = py::none(), "A_eq"_a = py::none(),
     "b_eq"_a = py::none(), "lower"_a = py::none(), "upper"_a = py::none(),
     "Minimize 0.5 z'Hz + g'z subject to A_ineq z >= b_ineq, A_eq z = b_eq, lower <= z <= upper.");

  m.def("filter_input", [](const Input6& u_star, const std::vector<FeatureRows>& rows, double slack_weight) {
    const QpSolution s = solve(build_filter_qp(u_star, rows, slack_weight));
    const FilterLayout layout{static_cast<int>(rows.size()), slack_weight > 0.0};
    std::vector<double> c1, c2;
    for (int i = 0; i < layout.features; ++i) {
      c1.push_back(s.z[layout.c1(i)]);
      c2.push_back(s.z[layout.c2(i)]);
    }
    return py::dict("u"_a = Input6(layout.input(s.z)), "c1"_a = c1, "c2"_a = c2,
                    "status"_a = to_string(s.status), "kkt_residual"_a = s.kkt_residual);
  }, "u_nominal"_a, "rows"_a, "slack_weight"_a = 0.0,
     "Project a nominal input onto the set allowed by the feature rows.");

  // dynamics
  py::class_<QuadrotorParams>(m, "QuadrotorParams")
      .def(py::init<>())
      .def_readwrite("mass", &QuadrotorParams::mass)
      .def_readwrite("inertia", &QuadrotorParams::inertia)
      .def_readwrite("gravity", &QuadrotorParams::gravity);

  py::class_<TrackingGains>(m, "TrackingGains")
      .def(py::init<>())
      .def_readwrite("k_p", &TrackingGains::k_p)
      .def_readwrite("k_v", &TrackingGains::k_v)
      .def_readwrite("k_R", &TrackingGains::k_R)
      .def_readwrite("k_omega", &TrackingGains::k_omega);

  m.def("step_first_order", &step_first_order, "state"_a, "velocity"_a, "dt"_a);
  m.def("step_second_order", &step_second_order, "state"_a, "accel"_a, "dt"_a);
  m.def("map_accel_to_quadrotor", [](const Input6& a, const BodyState& s, const QuadrotorParams& qp) {
    const Wrench w = map_accel_to_quadrotor(a, s, qp);
    return py::make_tuple(w.thrust, w.torque);
  }, "accel"_a, "state"_a, "params"_a);
  m.def("quadrotor_step", [](const BodyState& s, double thrust, const Vec3& torque, double dt,
                             const QuadrotorParams& qp) {
    return quadrotor_step(s, Wrench{thrust, torque}, dt, qp);
  }, "state"_a, "thrust"_a, "torque"_a, "dt"_a, "params"_a);
  m.def("reference", [](double t) {
    const Reference r = reference(t);
    return py::make_tuple(r.p, r.v, r.a);
  }, "t"_a);
  m.def("gate_features", [] {
    const auto g = gate_features();
    return std::vector<Vec3>(g.begin(), g.end());
  });

  // scenarios
  py::enum_<ScenarioKind>(m, "ScenarioKind")
      .value("FirstOrder", ScenarioKind::FirstOrder)
      .value("DoubleIntegrator", ScenarioKind::DoubleIntegrator)
      .value("Quadrotor", ScenarioKind::Quadrotor);
  py::enum_<DistanceMode>(m, "DistanceMode")
      .value("ConstantOne", DistanceMode::ConstantOne)
      .value("TrueDistance", DistanceMode::TrueDistance)
      .value("TrueTimesRatio", DistanceMode::TrueTimesRatio)
      .value("RandomRatio", DistanceMode::RandomRatio);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init([](ScenarioKind k) { return ScenarioConfig::defaults(k); }),
           "kind"_a = ScenarioKind::DoubleIntegrator)
      .def_readwrite("kind", &ScenarioConfig::kind)
      .def_readwrite("duration", &ScenarioConfig::duration)
      .def_readwrite("dt", &ScenarioConfig::dt)
      .def_readwrite("sensor", &ScenarioConfig::sensor)
      .def_readwrite("features", &ScenarioConfig::features)
      .def_readwrite("params", &ScenarioConfig::rp)
      .def_readwrite("gains", &ScenarioConfig::gains)
      .def_readwrite("quad", &ScenarioConfig::quad)
      .def_readwrite("kappa", &ScenarioConfig::kappa)
      .def_readwrite("kappa1", &ScenarioConfig::kappa1)
      .def_readwrite("kappa2", &ScenarioConfig::kappa2)
      .def_readwrite("d_hat_mode", &ScenarioConfig::d_hat_mode)
      .def_readwrite("d_hat_ratio", &ScenarioConfig::d_hat_ratio)
      .def_readwrite("slack_weight", &ScenarioConfig::slack_weight)
      .def_readwrite("thrust_ref_time_constant", &ScenarioConfig::thrust_ref_time_constant)
      .def_readwrite("max_tilt", &ScenarioConfig::max_tilt)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_readwrite("filter_enabled", &ScenarioConfig::filter_enabled)
      .def("validate", &ScenarioConfig::validate)
      .def("__eq__", &ScenarioConfig::operator==)
      .def("__str__", &serialize_config);

  m.def("parse_config", &parse_config, "path"_a);
  m.def("parse_config_string", &parse_config_string, "text"_a, "origin"_a = "<input>");
  m.def("serialize_config", &serialize_config, "config"_a);
  m.def("run", [](const ScenarioConfig& c) {
    SimLog log;
    {
      py::gil_scoped_release release;
      log = run(c);
    }
    return log_dict(log);
  }, "config"_a, "Simulate a scenario and return per-step arrays plus a summary.");
}
