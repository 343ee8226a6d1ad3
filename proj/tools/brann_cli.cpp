// brann: command-line front end for feature preparation, training, sweeps,
// evaluation, input ranking and tool-condition classification.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "brann/classify.hpp"
#include "brann/mrmr.hpp"
#include "brann/pipeline.hpp"
#include "brann/text.hpp"

namespace fs = std::filesystem;
using namespace brann;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kDataError = 3, kTrainingAbort = 4 };

struct Globals {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string out = "runs";
    bool force = false;
    std::optional<int> repeats;
};

RunConfig resolve_config(const Globals& g) {
    RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
    for (const auto& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_config_setting(cfg, std::string(text::trim(kv.substr(0, eq))),
                             std::string(text::trim(kv.substr(eq + 1))), fs::current_path());
    }
    if (g.seed) cfg.seed = *g.seed;
    if (g.repeats) cfg.repeats = *g.repeats;
    cfg.validate();
    return cfg;
}

/// Writes through a temporary sibling so a failure never leaves a partial file.
void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + path.string());
        body(out);
        if (!out) throw DataError("write failed for " + path.string());
    }
    fs::rename(tmp, path);
}

void emit(const std::string& output, const std::function<void(std::ostream&)>& body) {
    if (output.empty() || output == "-") {
        body(std::cout);
    } else {
        write_file(output, body);
    }
}

fs::path claim_run_dir(const fs::path& dir, bool force) {
    if (fs::exists(dir)) {
        if (!force) {
            throw ConfigError("run directory " + dir.string() +
                              " already exists for this configuration; pass --force to overwrite");
        }
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
    return dir;
}

/// Runs tasks[i] for every i on up to `jobs` threads. The first exception (by
/// task index) is rethrown after all tasks finish.
void run_parallel(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n = static_cast<std::size_t>(std::max(1, jobs));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(n, count); ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Median over repeats of each (split, target) metric row.
std::vector<LabeledReport> median_rows(const std::vector<std::vector<LabeledReport>>& per_repeat) {
    std::vector<LabeledReport> out;
    for (std::size_t i = 0; i < per_repeat.front().size(); ++i) {
        LabeledReport row = per_repeat.front()[i];
        std::vector<double> mae, rmse, r2;
        for (const auto& rep : per_repeat) {
            mae.push_back(rep[i].metrics.mae);
            rmse.push_back(rep[i].metrics.rmse);
            r2.push_back(rep[i].metrics.r2);
        }
        row.metrics.mae = median(mae);
        row.metrics.rmse = median(rmse);
        row.metrics.r2 = median(r2);
        out.push_back(row);
    }
    return out;
}

struct RepeatResult {
    std::optional<RunOutcome> outcome;
    std::optional<std::string> abort_message;
};

/// Trains every repeat of cfg into dir. Returns per-repeat results; aborted
/// repeats leave their partial trace behind.
std::vector<RepeatResult> train_into(const RunConfig& cfg, const Dataset& data, const fs::path& dir, int jobs) {
    write_file(dir / "config.txt", [&](std::ostream& o) { o << cfg.canonical(); });
    std::vector<RepeatResult> results(static_cast<std::size_t>(cfg.repeats));
    run_parallel(results.size(), jobs, [&](std::size_t r) {
        const std::string tag = "_r" + std::to_string(r);
        TrainingConfig tc = cfg.training;
        tc.seed = cfg.repeat_seed(static_cast<int>(r));
        try {
            auto run = run_training(cfg, data, static_cast<int>(r));
            write_file(dir / ("trace" + tag + ".csv"), [&](std::ostream& o) { run.trace.write_csv(o); });
            write_file(dir / ("trace" + tag + ".meta.txt"), [&](std::ostream& o) { run.trace.write_sidecar(o, tc); });
            write_file(dir / ("metrics" + tag + ".csv"), [&](std::ostream& o) { write_metric_csv(o, run.metrics); });
            write_file(dir / ("split" + tag + ".txt"), [&](std::ostream& o) {
                SplitSpec spec = cfg.split;
                if (!cfg.split_seed_set) spec.seed = run.seed;
                write_split_report(o, spec, run.split);
            });
            save_checkpoint(dir / ("checkpoint" + tag + ".txt"), make_checkpoint(cfg, run));
            results[r].outcome = std::move(run);
        } catch (const TrainingAbortedError& e) {
            write_file(dir / ("trace" + tag + ".csv"), [&](std::ostream& o) { e.trace().write_csv(o); });
            write_file(dir / ("trace" + tag + ".meta.txt"),
                       [&](std::ostream& o) { e.trace().write_sidecar(o, tc); });
            results[r].abort_message = e.what();
        }
    });
    return results;
}

// ---------------------------------------------------------------------------

int cmd_prepare(const Globals&, const std::string& manifest_path, const std::string& output) {
    const auto manifest = load_manifest(manifest_path);
    const auto prepared = prepare_features(manifest);
    const fs::path out = output.empty() ? fs::path(manifest_path).replace_extension(".features.csv") : fs::path(output);
    write_file(out, [&](std::ostream& o) { write_features(o, prepared.dataset); });
    fs::path report = out;
    report.replace_extension(".report.txt");
    write_file(report, [&](std::ostream& o) {
        o << "schema=" << manifest.schema.name << "\nwindow=" << to_string(manifest.window)
          << "\nrows=" << prepared.kept << "\ndropped=" << prepared.dropped << '\n';
    });
    std::cout << "wrote " << out.string() << " rows=" << prepared.kept << " dropped=" << prepared.dropped << '\n';
    return kOk;
}

int cmd_train(const Globals& g) {
    const auto cfg = resolve_config(g);
    const auto data = load_run_data(cfg);
    const auto dir = claim_run_dir(fs::path(g.out) / cfg.hash(), g.force);
    const auto results = train_into(cfg, data, dir, g.jobs);

    std::vector<std::vector<LabeledReport>> ok;
    int status = kOk;
    for (std::size_t r = 0; r < results.size(); ++r) {
        if (results[r].outcome) {
            const auto& run = *results[r].outcome;
            const auto& test = run.find("test");
            std::cout << "repeat " << r << " seed " << run.seed << ": stop=" << to_string(run.trace.stop_reason)
                      << " epochs=" << run.trace.rows.size() << " test_mae=" << text::format_double(test.mae)
                      << " test_rmse=" << text::format_double(test.rmse) << '\n';
            ok.push_back(run.metrics);
        } else {
            std::cerr << "repeat " << r << " aborted: " << *results[r].abort_message << '\n';
            status = kTrainingAbort;
        }
    }
    if (!ok.empty()) {
        write_file(dir / "metrics_median.csv", [&](std::ostream& o) { write_metric_csv(o, median_rows(ok)); });
    }
    std::cout << "run directory: " << dir.string() << '\n';
    return status;
}

struct SweepPoint {
    std::string axis;
    std::string value;
    RunConfig cfg;
};

std::vector<SweepPoint> expand_grid(const RunConfig& base, const std::vector<std::string>& presets,
                                    const std::vector<std::string>& grid) {
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    auto add_axis = [&](const std::string& axis, std::vector<std::string> values) {
        if (values.empty()) throw ConfigError("sweep axis '" + axis + "' has no values");
        for (const auto& [name, _] : axes) {
            if (name == axis) throw ConfigError("sweep axis '" + axis + "' given twice");
        }
        axes.emplace_back(axis, std::move(values));
    };
    for (const auto& p : presets) {
        if (p == "hidden") {
            add_axis("hidden", {"8", "16", "32", "64"});
        } else if (p == "transfer") {
            std::vector<std::string> v;
            for (auto t : kAllTransfers) v.emplace_back(to_string(t));
            add_axis("transfer", v);
        } else if (p == "ratio") {
            add_axis("train_fraction", {"0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9"});
        } else if (p == "algorithm") {
            std::vector<std::string> v;
            for (auto a : kAllAlgorithms) v.emplace_back(to_string(a));
            add_axis("algorithm", v);
        } else {
            throw ConfigError("unknown sweep preset '" + p + "'");
        }
    }
    for (const auto& spec : grid) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw ConfigError("--grid expects axis=v1,v2,..., got '" + spec + "'");
        const std::string axis = spec.substr(0, eq);
        if (axis != "hidden" && axis != "transfer" && axis != "train_fraction" && axis != "algorithm") {
            throw ConfigError("unknown sweep axis '" + axis + "'");
        }
        std::vector<std::string> values;
        for (const auto& v : text::split(spec.substr(eq + 1), ',')) {
            if (!text::trim(v).empty()) values.emplace_back(text::trim(v));
        }
        add_axis(axis, values);
    }
    if (axes.empty()) throw ConfigError("empty sweep grid: give --preset or --grid");

    const std::map<std::string, std::string> key_of{{"hidden", "network.hidden"},
                                                    {"transfer", "network.transfer"},
                                                    {"train_fraction", "split.train_fraction"},
                                                    {"algorithm", "training.algorithm"}};
    std::vector<SweepPoint> points{{"", "", base}};
    for (const auto& [axis, values] : axes) {
        std::vector<SweepPoint> next;
        for (const auto& p : points) {
            for (const auto& v : values) {
                SweepPoint q = p;
                q.axis += (q.axis.empty() ? "" : ";") + axis;
                q.value += (q.value.empty() ? "" : ";") + v;
                apply_config_setting(q.cfg, key_of.at(axis), v);
                q.cfg.validate();
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

int cmd_sweep(const Globals& g, const std::vector<std::string>& presets, const std::vector<std::string>& grid) {
    const auto base = resolve_config(g);
    const auto points = expand_grid(base, presets, grid);
    const auto data = load_run_data(base);

    std::string key = base.canonical();
    for (const auto& p : points) key += p.axis + "=" + p.value + "\n";
    char name[32];
    std::snprintf(name, sizeof name, "sweep-%016llx", static_cast<unsigned long long>(fnv1a64(key)));
    const auto dir = claim_run_dir(fs::path(g.out) / name, g.force);

    // Grid points run concurrently; repeats within a point run serially.
    std::vector<std::vector<RepeatResult>> results(points.size());
    run_parallel(points.size(), g.jobs, [&](std::size_t i) {
        results[i] = train_into(points[i].cfg, data, dir / ("p" + std::to_string(i)), 1);
    });

    int status = kOk;
    write_file(dir / "sweep.csv", [&](std::ostream& o) {
        o << "point,axis,value,repeats,completed,train_mae,train_rmse,train_r2,test_mae,test_rmse,test_r2\n";
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::vector<std::vector<LabeledReport>> ok;
            for (const auto& r : results[i]) {
                if (r.outcome) ok.push_back(r.outcome->metrics);
            }
            if (ok.size() != results[i].size()) status = kTrainingAbort;
            o << i << ',' << points[i].axis << ',' << points[i].value << ',' << results[i].size() << ','
              << ok.size();
            if (ok.empty()) {
                o << ",,,,,,\n";
                continue;
            }
            const auto med = median_rows(ok);
            for (const char* split_name : {"train", "test"}) {
                const auto it = std::find_if(med.begin(), med.end(), [&](const auto& r) { return r.split == split_name; });
                o << ',' << text::format_double(it->metrics.mae) << ',' << text::format_double(it->metrics.rmse) << ','
                  << text::format_double(it->metrics.r2);
            }
            o << '\n';
        }
    });
    std::cout << "sweep of " << points.size() << " points written to " << (dir / "sweep.csv").string() << '\n';
    return status;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& features, const std::string& output) {
    const auto predictor = Predictor::load(checkpoint);
    const auto ds = predictor.read_inputs(features);
    if (ds.target_names != predictor.preprocessor().target_names) {
        throw SchemaError(features + ": evaluation needs target columns " +
                          text::join(predictor.preprocessor().target_names, ","));
    }
    const auto pred = predictor.predict(ds);
    if (pred.imputed_columns) std::cerr << pred.imputed_columns << " columns imputed\n";
    emit(output, [&](std::ostream& o) {
        write_metric_csv(o, metric_rows("eval", ds.Y, pred.values, ds.target_names));
    });
    return kOk;
}

int cmd_predict(const std::string& checkpoint, const std::string& features, const std::string& output) {
    const auto predictor = Predictor::load(checkpoint);
    const auto ds = predictor.read_inputs(features);
    const auto pred = predictor.predict(ds);
    if (pred.imputed_columns) std::cerr << pred.imputed_columns << " columns imputed\n";
    emit(output, [&](std::ostream& o) {
        o << "case_id,cut_index";
        for (const auto& t : predictor.preprocessor().target_names) o << ',' << t << "_pred";
        o << '\n';
        for (Eigen::Index r = 0; r < pred.values.rows(); ++r) {
            const auto& p = ds.provenance[static_cast<std::size_t>(r)];
            o << p.case_id << ',' << p.cut_index;
            for (Eigen::Index c = 0; c < pred.values.cols(); ++c) o << ',' << text::format_double(pred.values(r, c));
            o << '\n';
        }
    });
    return kOk;
}

int cmd_rank(const std::string& features, const std::string& schema_name, const std::vector<std::string>& targets,
             std::optional<int> bins, const std::string& criterion, const std::string& output) {
    Dataset ds;
    if (!schema_name.empty()) {
        ds = load_features(features, schema_by_name(schema_name));
    } else {
        ds = load_feature_table(features, targets);
    }
    if (ds.Y.cols() == 0) throw SchemaError(features + ": no target column found for ranking");
    if (ds.has_missing()) throw DataError(features + ": ranking needs complete feature columns");
    MrmrCriterion crit;
    if (criterion == "mid") crit = MrmrCriterion::difference;
    else if (criterion == "miq") crit = MrmrCriterion::quotient;
    else throw ConfigError("criterion must be mid or miq");
    const Vector y = ds.Y.rowwise().maxCoeff();
    const auto ranking = rank_features(ds.X, y, bins, crit);
    emit(output, [&](std::ostream& o) { write_ranking_csv(o, ranking, ds.feature_names); });
    return kOk;
}

int cmd_classify(const std::string& checkpoint, const std::string& features, double threshold_mm,
                 const std::string& preset, const std::string& output) {
    const auto threshold = preset.empty() ? ConditionThreshold(threshold_mm) : ConditionThreshold::preset(preset);
    const auto predictor = Predictor::load(checkpoint);
    const auto ds = predictor.read_inputs(features);
    const auto pred = predictor.predict(ds);
    if (pred.imputed_columns) std::cout << pred.imputed_columns << " columns imputed\n";

    std::vector<double> vb;
    std::vector<Condition> labels;
    std::size_t negative = 0;
    for (Eigen::Index r = 0; r < pred.values.rows(); ++r) {
        const double v = pred.values.row(r).maxCoeff();
        const auto res = classify_condition(v, threshold);
        negative += res.negative_prediction ? 1 : 0;
        vb.push_back(v);
        labels.push_back(res.label);
    }
    if (negative) std::cerr << "warning: " << negative << " negative wear predictions (extrapolation)\n";

    std::optional<std::vector<Condition>> truth;
    if (ds.Y.cols() > 0) {
        truth.emplace();
        for (Eigen::Index r = 0; r < ds.Y.rows(); ++r) {
            truth->push_back(classify_condition(ds.Y.row(r).maxCoeff(), threshold).label);
        }
    }
    emit(output, [&](std::ostream& o) { write_classification_csv(o, vb, labels, truth); });
    if (truth) {
        const auto rep = classification_report(labels, *truth);
        char line[160];
        std::snprintf(line, sizeof line, "accuracy overall=%.2f%% broken=%.2f%% unbroken=%.2f%%\n",
                      100.0 * rep.overall.accuracy(), 100.0 * rep.broken.accuracy(), 100.0 * rep.unbroken.accuracy());
        (output.empty() || output == "-" ? std::cerr : std::cout) << line;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian-regularized neural networks for tool-wear prediction"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    int repeats = 1;
    app.add_option("--config", g.config, "Run configuration file (key = value)")->check(CLI::ExistingFile);
    app.add_option("--set", g.overrides, "Override a config key (key=value), repeatable");
    auto* seed_opt = app.add_option("--seed", seed, "Base seed");
    app.add_option("--jobs", g.jobs, "Concurrent jobs")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Root directory for run artifacts");
    app.add_flag("--force", g.force, "Overwrite an existing run directory");
    auto* rep_opt = app.add_option("--repeats", repeats, "Repeats with consecutive seeds")->check(CLI::PositiveNumber);
    for (auto* o : app.get_options()) o->configurable(false);
    app.fallthrough();

    std::string manifest, output, checkpoint, features, schema, criterion = "mid", preset;
    std::vector<std::string> presets, grid, targets{"vb_mm"};
    std::optional<int> bins;
    double threshold = 0.6;

    auto* prepare = app.add_subcommand("prepare", "Extract a feature CSV from a dataset manifest");
    prepare->add_option("manifest", manifest, "Manifest file")->required()->check(CLI::ExistingFile);
    prepare->add_option("-o,--output", output, "Feature CSV path (default: next to the manifest)");

    auto* train = app.add_subcommand("train", "Train a network as described by the run configuration");

    auto* sweep = app.add_subcommand("sweep", "Train over a grid of settings and tabulate the results");
    sweep->add_option("--preset", presets, "hidden | transfer | ratio | algorithm (repeatable)");
    sweep->add_option("--grid", grid, "axis=v1,v2,... with axis in hidden, transfer, train_fraction, algorithm");

    auto* evaluate = app.add_subcommand("evaluate", "Metrics of a checkpoint on a labeled feature CSV");
    auto* predict = app.add_subcommand("predict", "Wear predictions of a checkpoint on a feature CSV");
    auto* classify = app.add_subcommand("classify", "Tool-condition labels from predicted wear");
    for (auto* sub : {evaluate, predict, classify}) {
        sub->add_option("checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
        sub->add_option("features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--output", output, "Output CSV (default: stdout)");
    }
    classify->add_option("--threshold", threshold, "Wear limit in mm; broken when the prediction exceeds it");
    classify->add_option("--threshold-preset", preset, "max (0.6 mm) or iso_average (0.3 mm)");

    auto* rank = app.add_subcommand("rank", "MRMR ranking of the input features");
    rank->add_option("features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
    rank->add_option("--schema", schema, "Validate the header against a schema");
    rank->add_option("--target", targets, "Target column names when no schema is given");
    rank->add_option("--bins", bins, "Discretization bins (default max(2, floor(sqrt(N))))");
    rank->add_option("--criterion", criterion, "mid or miq");
    rank->add_option("-o,--output", output, "Output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }
    if (seed_opt->count()) g.seed = seed;
    if (rep_opt->count()) g.repeats = repeats;

    try {
        if (*prepare) return cmd_prepare(g, manifest, output);
        if (*train) return cmd_train(g);
        if (*sweep) return cmd_sweep(g, presets, grid);
        if (*evaluate) return cmd_evaluate(checkpoint, features, output);
        if (*predict) return cmd_predict(checkpoint, features, output);
        if (*classify) return cmd_classify(checkpoint, features, threshold, preset, output);
        if (*rank) return cmd_rank(features, schema, targets, bins, criterion, output);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const TrainingAborted& e) {
        std::cerr << "training aborted: " << e.what() << '\n';
        return kTrainingAbort;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return kDataError;
    } catch (const ShapeError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
