#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ehsim/bounds.hpp"
#include "ehsim/cli.hpp"
#include "ehsim/errors.hpp"
#include "ehsim/model.hpp"
#include "ehsim/numerics.hpp"
#include "ehsim/serialize.hpp"
#include "ehsim/sim.hpp"
#include "ehsim/version.hpp"

namespace py = pybind11;

using ehsim::model::ArrivalModel;

namespace {

ehsim::numerics::LogBase parse_base(const std::string& base) {
  if (base == "nats") return ehsim::numerics::LogBase::nats;
  if (base == "bits") return ehsim::numerics::LogBase::bits;
  throw ehsim::ConfigError("base must be 'nats' or 'bits'");
}

py::dict estimate_to_dict(const ehsim::sim::SimConfig& cfg,
                          const ehsim::sim::ThroughputEstimate& est) {
  py::dict extras;
  extras["epoch_count"] = est.extras.epoch_count;
  extras["mean_inter_epoch_time"] = est.extras.mean_inter_epoch_time;
  extras["fkg_lhs"] = est.extras.fkg_lhs;
  extras["fkg_rhs"] = est.extras.fkg_rhs;
  extras["spend_second_moment"] = est.extras.spend_second_moment;
  extras["joint_on_fraction"] = est.extras.joint_on_fraction;
  extras["h_above_gamma_fraction"] = est.extras.h_above_gamma_fraction;
  extras["slots_simulated"] = est.extras.slots_simulated;
  py::dict d;
  d["mean_bits_per_slot"] = est.mean;
  d["std_err"] = est.std_err;
  d["n_effective"] = est.n_effective;
  d["extras"] = extras;
  d["json"] = ehsim::serialize::estimate_json(cfg, est);
  return d;
}

}  // namespace

PYBIND11_MODULE(_ehsim, m) {
  m.doc() = "Energy-harvesting fading-link simulator and bounds engine";
  m.attr("__version__") = ehsim::kVersion;

  py::register_exception<ehsim::UnsupportedRegime>(m, "UnsupportedRegime",
                                                   PyExc_RuntimeError);
  py::register_exception<ehsim::NeutralityViolation>(m, "NeutralityViolation",
                                                     PyExc_RuntimeError);

  py::class_<ArrivalModel>(m, "ArrivalModel")
      .def_static("bernoulli", &ArrivalModel::bernoulli, py::arg("p"),
                  py::arg("energy"))
      .def_static("uniform", &ArrivalModel::uniform, py::arg("lo"), py::arg("hi"))
      .def_static("discrete", &ArrivalModel::discrete, py::arg("values"),
                  py::arg("probs"))
      .def_static("parse", &ehsim::cli::parse_arrival_spec, py::arg("spec"))
      .def("mean", &ArrivalModel::mean)
      .def("second_moment", &ArrivalModel::second_moment)
      .def("median", &ArrivalModel::median)
      .def("describe", &ArrivalModel::describe)
      .def("__repr__", [](const ArrivalModel& a) {
        return "ArrivalModel(" + a.describe() + ")";
      });

  m.def("exp_integral_e1", &ehsim::numerics::exp_integral_e1, py::arg("x"));
  m.def("exp_scaled_e1", &ehsim::numerics::exp_scaled_e1, py::arg("x"));
  m.def(
      "fading_log_moment",
      [](double a, const std::string& base) {
        return ehsim::numerics::fading_log_moment(a, parse_base(base));
      },
      py::arg("a"), py::arg("base") = "nats");

  m.def("transmitter_upper_bound", &ehsim::bounds::transmitter_upper_bound,
        py::arg("arrivals"));
  m.def(
      "cfp_lower_bound_bernoulli",
      [](double p, double b_max) {
        return ehsim::bounds::cfp_lower_bound_bernoulli(p, b_max);
      },
      py::arg("p"), py::arg("b_max"));
  m.def(
      "solve_gap_constant",
      [](double p) { return ehsim::bounds::solve_gap_constant(p); }, py::arg("p"));
  m.def(
      "bernoulli_gap_bound",
      [](double p) { return ehsim::bounds::bernoulli_gap_bound(p); }, py::arg("p"));
  m.def("general_gap_bound", &ehsim::bounds::general_gap_bound, py::arg("arrivals"));
  m.def("cfp_general_intermediate_lb", &ehsim::bounds::cfp_general_intermediate_lb,
        py::arg("delta"));
  m.def(
      "capacity_bracket",
      [](const ArrivalModel& arr, double c_input) {
        const auto b = ehsim::bounds::capacity_bracket(arr, c_input);
        return py::make_tuple(b.lower, b.upper);
      },
      py::arg("arrivals"), py::arg("c_input") = 0.0);
  m.def("rx_upper_bound_general", &ehsim::bounds::rx_upper_bound_general,
        py::arg("tx_arrivals"), py::arg("q"));
  m.def(
      "rx_simple_lower_bound",
      [](double p, double q, double b_max) {
        return ehsim::bounds::rx_simple_lower_bound(p, q, b_max);
      },
      py::arg("p"), py::arg("q"), py::arg("b_max"));
  m.def(
      "unit_battery_rx_upper_bound",
      [](double p, double q) {
        const auto b = ehsim::bounds::unit_battery_rx_upper_bound(p, q);
        return py::make_tuple(b.t_ub, b.gamma_star);
      },
      py::arg("p"), py::arg("q"));
  m.def("ctp_lower_bound_guarantee", &ehsim::bounds::ctp_lower_bound_guarantee,
        py::arg("t_ub_rx"));

  m.def(
      "simulate",
      [](const std::string& arrivals, const std::string& mode,
         const std::string& policy, const std::string& rx_policy, double p,
         double q, double b_max, double rx_on_cost, double rx_b_max,
         const std::string& prefactor, std::uint64_t slots, std::uint32_t reps,
         std::uint64_t seed, std::int64_t warmup, const std::string& ctp_gate,
         double ctp_coin, bool force_gate_open) {
        ehsim::cli::SimulateOptions opt;
        opt.arrivals = arrivals;
        opt.mode = mode;
        opt.policy = policy;
        opt.rx_policy = rx_policy;
        opt.p = p;
        opt.q = q;
        opt.b_max = b_max;
        opt.rx_on_cost = rx_on_cost;
        opt.rx_b_max = rx_b_max;
        opt.prefactor = prefactor;
        opt.slots = slots;
        opt.reps = reps;
        opt.seed = seed;
        opt.warmup = warmup;
        opt.ctp_gate = ctp_gate;
        opt.ctp_coin = ctp_coin;
        opt.force_gate_open = force_gate_open;
        const auto cfg = ehsim::cli::make_sim_config(opt);
        ehsim::sim::ThroughputEstimate est;
        {
          py::gil_scoped_release release;
          est = ehsim::sim::run(cfg);
        }
        return estimate_to_dict(cfg, est);
      },
      py::arg("arrivals") = "bernoulli:p=0.5,e=1", py::arg("mode") = "tx_only",
      py::arg("policy") = "", py::arg("rx_policy") = "ctp", py::arg("p") = 0.5,
      py::arg("q") = 0.5,
      py::arg("b_max") = std::numeric_limits<double>::quiet_NaN(),
      py::arg("rx_on_cost") = 1.0,
      py::arg("rx_b_max") = std::numeric_limits<double>::quiet_NaN(),
      py::arg("prefactor") = "auto", py::arg("slots") = 100000,
      py::arg("reps") = 5, py::arg("seed") = 1, py::arg("warmup") = -1,
      py::arg("ctp_gate") = "latch_once",
      py::arg("ctp_coin") = std::numeric_limits<double>::quiet_NaN(),
      py::arg("force_gate_open") = false);
}
