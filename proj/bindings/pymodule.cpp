#include "cospec/bicm.hpp"
#include "cospec/common.hpp"
#include "cospec/motifs.hpp"
#include "cospec/rca.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>

namespace py = pybind11;
using namespace cospec;

namespace {

std::string padded(const char* prefix, int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i);
    return buf;
}

BipartiteNetwork net_from_adj(const Eigen::MatrixXi& adj) {
    BipartiteNetwork net;
    net.adj = adj;
    for (int c = 0; c < adj.rows(); ++c)
        net.countries.push_back(padded("C", c));
    for (int s = 0; s < adj.cols(); ++s)
        net.sectors.push_back(padded("S", s));
    return net;
}

CountryGroups groups_from_flags(const std::vector<int>& cee_flags) {
    std::map<std::string, std::string> m;
    for (std::size_t c = 0; c < cee_flags.size(); ++c)
        m[padded("C", static_cast<int>(c))] = cee_flags[c] ? "CEE" : "EU15";
    return CountryGroups(std::move(m));
}

} // namespace

PYBIND11_MODULE(cospec, m) {
    m.doc() = "Bipartite co-specialization networks, BiCM null models, motif z-scores";

    py::register_exception<DataError>(m, "DataError");
    py::register_exception<NumericError>(m, "NumericError");

    py::class_<BicmModel>(m, "BicmModel")
        .def_readonly("x", &BicmModel::x)
        .def_readonly("y", &BicmModel::y)
        .def_readonly("p", &BicmModel::p)
        .def_property_readonly("residual",
                               [](const BicmModel& mod) { return mod.diagnostics.residual; })
        .def_property_readonly("iterations",
                               [](const BicmModel& mod) { return mod.diagnostics.iterations; });

    m.def(
        "rca",
        [](const Eigen::MatrixXd& employment) {
            RcaMatrix r = rca_from_employment(employment);
            Eigen::MatrixXd out = r.values;
            for (int c = 0; c < out.rows(); ++c)
                for (int s = 0; s < out.cols(); ++s)
                    if (!r.defined(c, s))
                        out(c, s) = std::numeric_limits<double>::quiet_NaN();
            return out;
        },
        py::arg("employment"), "Balassa RCA matrix; undefined cells are NaN");

    m.def(
        "binarize",
        [](const Eigen::MatrixXd& rca, double threshold) {
            Eigen::MatrixXi out = Eigen::MatrixXi::Zero(rca.rows(), rca.cols());
            for (int c = 0; c < rca.rows(); ++c)
                for (int s = 0; s < rca.cols(); ++s)
                    if (!std::isnan(rca(c, s)) && rca(c, s) >= threshold)
                        out(c, s) = 1;
            return out;
        },
        py::arg("rca"), py::arg("threshold") = 1.0);

    m.def(
        "motif_total",
        [](const Eigen::MatrixXi& adj) { return motif_total(net_from_adj(adj)); },
        py::arg("adjacency"));

    m.def(
        "motif_node", [](const Eigen::MatrixXi& adj) { return motif_node(net_from_adj(adj)); },
        py::arg("adjacency"));

    m.def(
        "fit_bicm",
        [](const Eigen::VectorXi& diversification, const Eigen::VectorXi& ubiquity,
           double tolerance, int max_iterations) {
            DegreeSequences deg{diversification, ubiquity};
            return fit(deg, FitOptions{tolerance, max_iterations, 0.5});
        },
        py::arg("diversification"), py::arg("ubiquity"), py::arg("tolerance") = 1e-8,
        py::arg("max_iterations") = 10000);

    m.def(
        "sample_bicm",
        [](const BicmModel& model, int n, std::uint64_t seed) {
            std::vector<Eigen::MatrixXi> out;
            for (int k = 0; k < n; ++k)
                out.push_back(sample_one(model, seed, k).adj);
            return out;
        },
        py::arg("model"), py::arg("n"), py::arg("seed"));

    m.def("analytic_motif_mean", &analytic_motif_mean, py::arg("model"));

    m.def(
        "motif_zscores",
        [](const Eigen::MatrixXi& adj, const std::vector<int>& cee_flags, int samples,
           std::uint64_t seed, double tolerance) {
            if (static_cast<int>(cee_flags.size()) != adj.rows())
                throw DataError("cee_flags length must match adjacency rows");
            BipartiteNetwork net = net_from_adj(adj);
            CountryGroups groups = groups_from_flags(cee_flags);
            BicmModel model = fit(degrees(net), FitOptions{tolerance, 10000, 0.5});
            model.countries = net.countries;
            model.sectors = net.sectors;
            auto results = zscores(net, model, groups, samples, seed);
            py::dict out;
            for (const auto& r : results) {
                if (r.level != "network" && r.level != "group")
                    continue;
                py::dict entry;
                entry["observed"] = r.observed;
                entry["mean"] = r.mean;
                entry["sd"] = r.sd;
                entry["z"] = r.z;
                entry["degenerate"] = r.degenerate;
                out[r.scope.c_str()] = entry;
            }
            return out;
        },
        py::arg("adjacency"), py::arg("cee_flags"), py::arg("samples") = 10000,
        py::arg("seed") = 42, py::arg("tolerance") = 1e-8,
        "Network- and group-level co-specialization z-scores against a fitted null model");
}
