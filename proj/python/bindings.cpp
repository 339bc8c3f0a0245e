#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "causalci/bayesnet.hpp"
#include "causalci/citest.hpp"
#include "causalci/discovery.hpp"
#include "causalci/evalbench.hpp"
#include "causalci/numstat.hpp"

namespace py = pybind11;
using namespace causalci;

namespace {

Method method_arg(const std::string& name) {
    auto m = parse_method(name);
    if (!m) throw py::value_error("unknown method: " + name);
    return *m;
}

py::dict decision_dict(const CiDecision& d) {
    py::dict out;
    out["method"] = std::string(to_string(d.method));
    out["statistic"] = d.statistic;
    out["p_value"] = d.p_value ? py::cast(*d.p_value) : py::none();
    out["df"] = d.df ? py::cast(*d.df) : py::none();
    out["independent"] = d.independent;
    out["strata_used"] = d.strata_used;
    out["degenerate"] = d.degenerate;
    return out;
}

TestConfig make_config(double significance, std::optional<double> mi_threshold, bool fit_alpha, int max_cond_set) {
    TestConfig c;
    c.significance = significance;
    c.mi_threshold = mi_threshold;
    c.bf_chi2_fit_alpha = fit_alpha;
    c.max_cond_set = max_cond_set;
    c.validate();
    return c;
}

Dataset dataset_from_csv(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Discrete conditional independence tests and PC structure learning";

    py::register_exception<DegenerateInput>(m, "DegenerateInput", PyExc_ValueError);
    py::register_exception<BifParseError>(m, "BifParseError", PyExc_ValueError);
    py::register_exception<CsvError>(m, "CsvError", PyExc_ValueError);

    m.def("ln_gamma", &numstat::ln_gamma, py::arg("x"));
    m.def("digamma", &numstat::digamma, py::arg("x"));
    m.def("chi2_sf", &numstat::chi2_sf, py::arg("x"), py::arg("df"));
    m.def(
        "log_polya", [](const std::vector<Count>& counts, double alpha) { return numstat::log_polya(counts, alpha); },
        py::arg("counts"), py::arg("alpha"));
    m.def(
        "estimate_alpha",
        [](const std::vector<Count>& counts) {
            const auto e = numstat::estimate_alpha_map(counts);
            py::dict out;
            out["alpha"] = e.alpha;
            out["converged"] = e.converged;
            out["iterations"] = e.iterations;
            out["clamped"] = e.clamped;
            return out;
        },
        py::arg("counts"));

    m.def(
        "mi_mle", [](const std::vector<std::vector<Count>>& t) { return mi_mle(ContingencyTable(t)); },
        py::arg("table"));
    m.def(
        "mi_eb",
        [](const std::vector<std::vector<Count>>& t, std::optional<double> alpha) {
            return mi_eb(ContingencyTable(t), alpha);
        },
        py::arg("table"), py::arg("alpha") = py::none());
    m.def(
        "bayes_factor",
        [](const std::vector<std::vector<Count>>& t) { return bayes_factor(ContingencyTable(t), TestConfig{}); },
        py::arg("table"));
    m.def(
        "theta_tilde",
        [](const std::vector<Count>& counts, double alpha) {
            const auto t = solve_theta_tilde(counts, alpha);
            py::dict out;
            out["values"] = t.values;
            out["a"] = t.a;
            out["b"] = t.b;
            out["fallback"] = t.fallback;
            return out;
        },
        py::arg("counts"), py::arg("alpha"));
    m.def(
        "ci_test",
        [](const std::vector<std::vector<Count>>& t, const std::string& method, double significance,
           std::optional<double> mi_threshold, bool fit_alpha) {
            const auto config = make_config(significance, mi_threshold, fit_alpha, 4);
            MiThresholdCache cache;
            return decision_dict(marginal_test(method_arg(method), ContingencyTable(t), config, &cache));
        },
        py::arg("table"), py::arg("method") = "g", py::arg("significance") = 0.05,
        py::arg("mi_threshold") = py::none(), py::arg("fit_alpha") = true);

    m.def(
        "sample_bif",
        [](const std::string& bif, std::size_t n, std::uint64_t seed) {
            std::ostringstream out;
            write_csv(forward_sample(parse_bif(bif), n, seed), out);
            return out.str();
        },
        py::arg("bif"), py::arg("n"), py::arg("seed"),
        "Forward-samples a BIF network; returns CSV text with a header row.");
    m.def(
        "network_shape",
        [](const std::string& bif) {
            const auto net = parse_bif(bif);
            return py::make_tuple(net.names(), net.dag().num_edges());
        },
        py::arg("bif"));

    m.def(
        "discover",
        [](const std::string& csv, const std::string& method, double significance, std::optional<double> mi_threshold,
           bool fit_alpha, int max_cond_set) {
            const Dataset data = dataset_from_csv(csv);
            const auto config = make_config(significance, mi_threshold, fit_alpha, max_cond_set);
            MiThresholdCache cache;
            const auto r = learn_cpdag(data, method_arg(method), config, nullptr, &cache);
            py::dict out;
            out["edges"] = to_edge_list(r.cpdag, data.names());
            out["ci_test_count"] = r.stats.ci_test_count;
            out["tests_by_order"] = r.stats.tests_by_order;
            out["orientation_conflicts"] = r.stats.orientation_conflicts;
            return out;
        },
        py::arg("csv"), py::arg("method") = "g", py::arg("significance") = 0.05, py::arg("mi_threshold") = py::none(),
        py::arg("fit_alpha") = true, py::arg("max_cond_set") = 4,
        "Runs PC on CSV text; returns the CPDAG edge list and test counts.");
    m.def(
        "oracle_shd",
        [](const std::string& bif) {
            const auto net = parse_bif(bif);
            DSeparationTest oracle(net.dag());
            const auto r = learn_cpdag(oracle);
            return shd(r.cpdag, dag_to_cpdag(net.dag()));
        },
        py::arg("bif"), "SHD of PC with the d-separation oracle against the network's CPDAG.");
}
