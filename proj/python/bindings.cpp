#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "brann/benchmark.hpp"
#include "brann/checkpoint.hpp"
#include "brann/classify.hpp"
#include "brann/metrics.hpp"
#include "brann/mrmr.hpp"
#include "brann/pipeline.hpp"
#include "brann/trainers.hpp"

namespace py = pybind11;
using namespace brann;

namespace {

std::string trace_csv(const TrainingTrace& t) {
    std::ostringstream out;
    t.write_csv(out);
    return out.str();
}

TrainingConfig training_config(const std::string& algorithm, int max_epochs, std::uint64_t seed) {
    TrainingConfig c;
    c.algorithm = parse_algorithm(algorithm);
    c.max_epochs = max_epochs;
    c.seed = seed;
    c.validate();
    return c;
}

}  // namespace

PYBIND11_MODULE(_brann, m) {
    m.doc() = "Bayesian-regularized neural networks for tool-wear prediction";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
    py::register_exception<TrainingAborted>(m, "TrainingAborted", PyExc_RuntimeError);

    m.attr("algorithms") = [] {
        std::vector<std::string> v;
        for (auto a : kAllAlgorithms) v.emplace_back(to_string(a));
        return v;
    }();
    m.attr("transfers") = [] {
        std::vector<std::string> v;
        for (auto t : kAllTransfers) v.emplace_back(to_string(t));
        return v;
    }();

    py::class_<Network>(m, "Network")
        .def(py::init([](const std::vector<int>& sizes, const std::vector<std::string>& transfers,
                         std::uint64_t seed) {
                 NetworkLayout layout;
                 layout.layer_sizes = sizes;
                 for (const auto& t : transfers) layout.transfers.push_back(parse_transfer(t));
                 return init_weights(layout, seed);
             }),
             py::arg("layer_sizes"), py::arg("transfers"), py::arg("seed") = 0)
        .def_property_readonly("layer_sizes", [](const Network& n) { return n.layout().layer_sizes; })
        .def_property_readonly("transfers",
                               [](const Network& n) {
                                   std::vector<std::string> v;
                                   for (auto t : n.layout().transfers) v.emplace_back(to_string(t));
                                   return v;
                               })
        .def_property_readonly("parameter_count", &Network::parameter_count)
        .def("parameters", &Network::flatten)
        .def("with_parameters", &Network::with_params, py::arg("params"))
        .def("forward", [](const Network& n, const Matrix& X) { return forward(n, X); }, py::arg("X"))
        .def("jacobian", [](const Network& n, const Matrix& X) { return jacobian(n, X); }, py::arg("X"));

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("network", &TrainResult::network)
        .def_property_readonly("stop_reason", [](const TrainResult& r) { return std::string(to_string(r.trace.stop_reason)); })
        .def_property_readonly("epochs", [](const TrainResult& r) { return r.trace.rows.size(); })
        .def_property_readonly("gamma", [](const TrainResult& r) { return r.trace.rows.empty() ? 0.0 : r.trace.rows.back().gamma; })
        .def_property_readonly("alpha", [](const TrainResult& r) { return r.trace.rows.empty() ? 0.0 : r.trace.rows.back().alpha; })
        .def_property_readonly("beta", [](const TrainResult& r) { return r.trace.rows.empty() ? 0.0 : r.trace.rows.back().beta; })
        .def("trace_csv", [](const TrainResult& r) { return trace_csv(r.trace); });

    m.def(
        "train",
        [](const Network& net, const Matrix& X, const Matrix& Y, const std::string& algorithm, int max_epochs,
           std::uint64_t seed) {
            const auto cfg = training_config(algorithm, max_epochs, seed);
            py::gil_scoped_release release;
            return train(net, X, Y, cfg);
        },
        py::arg("network"), py::arg("X"), py::arg("Y"), py::arg("algorithm") = "trainbr", py::arg("max_epochs") = 1000,
        py::arg("seed") = 0, "Full-batch training; returns the trained network and its trace.");

    m.def(
        "sine_benchmark",
        [](std::uint64_t seed, int n_train, int n_test, double noise) {
            const auto b = make_sine_benchmark(seed, n_train, n_test, noise);
            return py::make_tuple(b.x_train, b.y_train, b.x_test, b.y_test);
        },
        py::arg("seed") = 0, py::arg("n_train") = 60, py::arg("n_test") = 40, py::arg("noise") = 0.05,
        "(x_train, y_train, x_test, y_test) for y = sin(3x) + noise.");

    py::class_<MetricReport>(m, "MetricReport")
        .def_readonly("mae", &MetricReport::mae)
        .def_readonly("rmse", &MetricReport::rmse)
        .def_readonly("r2", &MetricReport::r2)
        .def_readonly("n", &MetricReport::n)
        .def("__repr__", [](const MetricReport& r) {
            std::ostringstream o;
            o << "MetricReport(mae=" << r.mae << ", rmse=" << r.rmse << ", r2=" << r.r2 << ", n=" << r.n << ")";
            return o.str();
        });
    m.def("evaluate", &evaluate, py::arg("y_true"), py::arg("y_pred"));
    m.def("mae", &mae, py::arg("y_true"), py::arg("y_pred"));
    m.def("rmse", &rmse, py::arg("y_true"), py::arg("y_pred"));
    m.def("r2", &r2, py::arg("y_true"), py::arg("y_pred"));

    py::class_<MrmrRanking>(m, "MrmrRanking")
        .def_readonly("order", &MrmrRanking::order)
        .def_readonly("scores", &MrmrRanking::scores)
        .def_readonly("relevance", &MrmrRanking::relevance)
        .def_readonly("weights", &MrmrRanking::weights);
    m.def(
        "rank_features",
        [](const Matrix& X, const Vector& y, std::optional<int> bins, const std::string& criterion) {
            if (criterion != "mid" && criterion != "miq") throw InvalidInput("criterion must be mid or miq");
            return rank_features(X, y, bins, criterion == "mid" ? MrmrCriterion::difference : MrmrCriterion::quotient);
        },
        py::arg("X"), py::arg("y"), py::arg("bins") = std::nullopt, py::arg("criterion") = "mid");

    m.def(
        "classify",
        [](const std::vector<double>& vb_pred, double threshold) {
            const ConditionThreshold th(threshold);
            std::vector<std::string> out;
            for (double v : vb_pred) out.emplace_back(to_string(classify_condition(v, th).label));
            return out;
        },
        py::arg("vb_pred"), py::arg("threshold") = 0.6, "Labels 'broken' when the prediction exceeds the threshold.");
    m.def(
        "classification_accuracy",
        [](const std::vector<std::string>& predicted, const std::vector<std::string>& truth) {
            std::vector<Condition> p, t;
            for (const auto& s : predicted) p.push_back(parse_condition(s));
            for (const auto& s : truth) t.push_back(parse_condition(s));
            const auto r = classification_report(p, t);
            py::dict d;
            d["broken"] = r.broken.accuracy();
            d["unbroken"] = r.unbroken.accuracy();
            d["overall"] = r.overall.accuracy();
            return d;
        },
        py::arg("predicted"), py::arg("truth"));

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("X", &Dataset::X)
        .def_readonly("Y", &Dataset::Y)
        .def_readonly("feature_names", &Dataset::feature_names)
        .def_readonly("target_names", &Dataset::target_names)
        .def_property_readonly("provenance",
                               [](const Dataset& d) {
                                   std::vector<std::pair<std::string, int>> v;
                                   for (const auto& p : d.provenance) v.emplace_back(p.case_id, p.cut_index);
                                   return v;
                               })
        .def("__len__", [](const Dataset& d) { return d.rows(); });
    m.def(
        "load_features",
        [](const std::filesystem::path& path, const std::string& schema) {
            return load_features(path, schema_by_name(schema));
        },
        py::arg("path"), py::arg("schema"));
    m.def("load_feature_table", &load_feature_table, py::arg("path"), py::arg("targets"));
    m.def(
        "prepare_features",
        [](const std::filesystem::path& manifest) { return prepare_features(load_manifest(manifest)).dataset; },
        py::arg("manifest"), "Feature rows extracted from a dataset manifest.");

    py::class_<Predictor>(m, "Predictor")
        .def_static("load", &Predictor::load, py::arg("checkpoint"))
        .def_property_readonly("schema", &Predictor::schema)
        .def_property_readonly("feature_names", [](const Predictor& p) { return p.preprocessor().feature_names; })
        .def("predict", [](const Predictor& p, const Dataset& ds) { return p.predict(ds).values; }, py::arg("dataset"))
        .def("read_inputs", &Predictor::read_inputs, py::arg("path"));

    py::class_<RunOutcome>(m, "RunOutcome")
        .def_readonly("seed", &RunOutcome::seed)
        .def_readonly("network", &RunOutcome::network)
        .def("metrics", &RunOutcome::find, py::arg("split"))
        .def("trace_csv", [](const RunOutcome& r) { return trace_csv(r.trace); });
    m.def(
        "run",
        [](const std::vector<std::pair<std::string, std::string>>& settings, int repeat,
           const std::optional<std::filesystem::path>& checkpoint) {
            RunConfig cfg;
            for (const auto& [k, v] : settings) apply_config_setting(cfg, k, v);
            cfg.validate();
            const auto data = load_run_data(cfg);
            auto out = [&] {
                py::gil_scoped_release release;
                return run_training(cfg, data, repeat);
            }();
            if (checkpoint) save_checkpoint(*checkpoint, make_checkpoint(cfg, out));
            return out;
        },
        py::arg("settings"), py::arg("repeat") = 0, py::arg("checkpoint") = std::nullopt,
        "One configured training run; settings are (key, value) pairs as in a config file.");
}
