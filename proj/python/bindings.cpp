// Thin Python surface over the core library. Structured results cross the
// boundary as JSON text and are decoded on the Python side.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "prf/cluster_sim.hpp"
#include "prf/dataset.hpp"
#include "prf/error.hpp"
#include "prf/forest.hpp"
#include "prf/sampling.hpp"

namespace py = pybind11;
using namespace prf;

namespace {

std::vector<std::vector<double>> rows_of(const Dataset& d) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < d.num_rows(); ++i) {
        auto r = d.features(i);
        out.emplace_back(r.begin(), r.end());
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    py::register_exception<SchemaMismatch>(m, "SchemaMismatch", PyExc_ValueError);
    py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);

    py::class_<Dataset>(m, "Dataset")
        .def_static(
            "load",
            [](const std::filesystem::path& csv, const std::filesystem::path& schema) {
                return load_csv(csv, Schema::load(schema));
            },
            py::arg("csv"), py::arg("schema"))
        .def_property_readonly("num_rows", &Dataset::num_rows)
        .def_property_readonly("num_columns", &Dataset::num_columns)
        .def("features", &rows_of)
        .def("targets", [](const Dataset& d) {
            std::vector<double> t;
            for (std::size_t i = 0; i < d.num_rows(); ++i) t.push_back(d.target(i));
            return t;
        });

    py::class_<Forest>(m, "Forest")
        .def_property_readonly("num_trees", [](const Forest& f) { return f.trees.size(); })
        .def_property_readonly("weights", &Forest::weights)
        .def("to_json", [](const Forest& f) { return f.to_json().dump(); })
        .def_static("from_json", [](const std::string& s) { return Forest::from_json(nlohmann::json::parse(s)); })
        .def(
            "predict",
            [](const Forest& f, const std::vector<std::vector<double>>& x, const std::string& mode) {
                return predict(f, x, regression_mode_from_string(mode)).outputs;
            },
            py::arg("samples"), py::arg("regression_mode") = "normalized")
        .def("oob_error", [](const Forest& f, const Dataset& d) { return oob_error(f, d, f.dsi()); });

    m.def(
        "train",
        [](const Dataset& d, std::size_t trees, std::size_t m_selected, std::size_t k_top, std::uint64_t seed,
           unsigned threads) {
            Hyperparams h;
            h.k_trees = trees;
            h.m_selected = m_selected;
            h.k_top = k_top;
            h.seed = seed;
            py::gil_scoped_release release;
            return train(d, h, TrainOptions{threads});
        },
        py::arg("data"), py::arg("trees") = 100, py::arg("m") = 0, py::arg("k_top") = 0, py::arg("seed") = 42,
        py::arg("threads") = 0);

    m.def(
        "dsi_table",
        [](std::uint64_t n, std::uint64_t k, std::uint64_t seed) {
            auto t = DsiTable::build(n, k, seed);
            std::vector<std::vector<std::uint64_t>> rows;
            for (std::uint64_t i = 0; i < k; ++i) rows.push_back(t.row(i));
            return rows;
        },
        py::arg("num_rows"), py::arg("num_trees"), py::arg("seed"));

    m.def(
        "data_volume",
        [](std::uint64_t n, std::uint64_t cols, std::uint64_t k, const std::string& strategy) {
            auto s = strategy == "horizontal" ? sim::VolumeStrategy::kHorizontalCopy : sim::VolumeStrategy::kPrfMultiplex;
            auto v = sim::data_volume(n, cols, k, s);
            return std::make_pair(v.data_cells, v.index_cells);
        },
        py::arg("num_rows"), py::arg("num_columns"), py::arg("num_trees"), py::arg("strategy") = "prf");

    m.def(
        "simulate",
        [](const Forest& f, const std::string& cluster_json) {
            auto cfg = sim::ClusterConfig::from_json(nlohmann::json::parse(cluster_json));
            return sim::simulate(f, cfg.nodes, cfg.cost).result.ledger.to_json().dump();
        },
        py::arg("forest"), py::arg("cluster_json"));
}
