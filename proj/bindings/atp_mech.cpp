// Python bindings. Instances, bids, curves and reports cross the boundary in
// the same JSON shapes the command line tool reads and writes, converted to
// and from plain Python dicts and lists.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "atp/ces_solver.hpp"
#include "atp/equilibrium.hpp"
#include "atp/io.hpp"
#include "atp/maxmin_mech.hpp"

namespace py = pybind11;
using atp::io::json;

namespace {

json from_python(const py::handle& obj) {
    const py::object dumps = py::module_::import("json").attr("dumps");
    return atp::io::parse_json_text(dumps(obj).cast<std::string>(), "<python>");
}

py::object to_python(const json& doc) {
    const py::object loads = py::module_::import("json").attr("loads");
    return loads(doc.dump());
}

atp::Rho rho_from_python(const py::handle& obj) {
    if (py::isinstance<py::str>(obj)) return atp::Rho::parse(obj.cast<std::string>());
    return atp::Rho::parse(py::str(obj).cast<std::string>());
}

atp::CurveFamily curves_arg(const py::handle& obj, std::size_t goods) {
    return atp::io::curves_from_json(from_python(obj), goods);
}

}  // namespace

PYBIND11_MODULE(atp_mech, m) {
    m.doc() = "Trading post bandwidth allocation: CES solver, equilibria and maxmin mechanisms";

    py::register_exception<atp::io::ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<atp::NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);
    py::register_exception<atp::NotAnEquilibrium>(m, "NotAnEquilibrium", PyExc_RuntimeError);

    m.def(
        "solve",
        [](const py::dict& instance, const py::object& rho) {
            const auto inst = atp::io::instance_from_json(from_python(instance));
            const auto r = rho_from_python(rho);
            if (r.kind() != atp::Rho::Kind::NegInfinity) return to_python(atp::io::to_json(atp::solve_ces(inst, r)));
            auto out = atp::io::to_json(atp::solve_maxmin(inst));
            out["gamma"] = atp::maxmin_gamma(inst.supplies(), inst.desired_sets()).value_or(0.0);
            return to_python(out);
        },
        py::arg("instance"), py::arg("rho"),
        "Welfare-maximizing allocation. rho is a float below 1, 1, or '-inf'.");

    m.def(
        "construct_equilibrium",
        [](const py::dict& instance, double rho) {
            const auto inst = atp::io::instance_from_json(from_python(instance));
            const auto eq = atp::construct_atp_rho_equilibrium(inst, atp::Rho::finite(rho));
            return to_python({{"bids", atp::io::to_json(eq.bids)},
                              {"curves", atp::io::to_json(eq.curves)},
                              {"allocation", atp::io::to_json(eq.allocation)},
                              {"utilities", atp::utilities(inst, eq.allocation)},
                              {"welfare", eq.welfare},
                              {"optimum", eq.optimum.objective}});
        },
        py::arg("instance"), py::arg("rho"));

    m.def(
        "allocate",
        [](const py::dict& instance, const py::object& curves, const py::object& bids) {
            const auto inst = atp::io::instance_from_json(from_python(instance));
            const auto f = curves_arg(curves, inst.goods());
            const auto b = atp::io::bids_from_json(from_python(bids), inst.agents(), inst.goods());
            return to_python(atp::io::to_json(atp::atp_allocate(inst, f, b)));
        },
        py::arg("instance"), py::arg("curves"), py::arg("bids"));

    m.def(
        "verify_ne",
        [](const py::dict& instance, const py::object& curves, const py::object& bids, bool sweep, double tol_eq) {
            const auto inst = atp::io::instance_from_json(from_python(instance));
            const auto f = curves_arg(curves, inst.goods());
            const auto b = atp::io::bids_from_json(from_python(bids), inst.agents(), inst.goods());
            atp::NeCheckOptions options;
            options.deviation_sweep = sweep;
            options.tol_eq = tol_eq;
            return to_python(atp::io::to_json(atp::verify_tp_ne(inst, f, b, options)));
        },
        py::arg("instance"), py::arg("curves"), py::arg("bids"), py::arg("sweep") = false,
        py::arg("tol_eq") = atp::kTolEq);

    m.def(
        "maxmin_gamma",
        [](const std::vector<double>& supplies, const std::vector<atp::GoodSet>& sets) {
            return atp::maxmin_gamma(supplies, sets);
        },
        py::arg("supplies"), py::arg("sets"));

    m.def(
        "mechanism1",
        [](const std::vector<double>& supplies, const std::vector<atp::GoodSet>& reports) {
            return to_python(atp::io::to_json(atp::mechanism1(supplies.size(), supplies, reports)));
        },
        py::arg("supplies"), py::arg("reports"));

    m.def(
        "mechanism2",
        [](const std::vector<double>& supplies, const atp::ReportMatrix& reports) {
            const auto out = atp::mechanism2(supplies.size(), supplies, reports);
            return to_python({{"allocation", atp::io::to_json(out.allocation)},
                              {"unpenalized", atp::io::to_json(out.unpenalized)},
                              {"eta", out.penalty.eta},
                              {"nbar", out.penalty.nbar},
                              {"alpha", out.penalty.alpha}});
        },
        py::arg("supplies"), py::arg("reports"),
        "reports[i][k] is agent i's claim about the goods agent k desires.");

    m.def(
        "demo_not_strategyproof",
        [](const py::object& rho) {
            return to_python(atp::io::to_json(atp::demo_not_strategyproof_ces(rho_from_python(rho))));
        },
        py::arg("rho"));

    m.def(
        "demo_bad_ne",
        [](std::size_t n) { return to_python(atp::io::to_json(atp::demo_bad_ne_m1(n))); }, py::arg("n"));
}
