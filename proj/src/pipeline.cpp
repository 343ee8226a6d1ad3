#include "brann/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "brann/benchmark.hpp"
#include "brann/schema.hpp"
#include "brann/text.hpp"

namespace brann {

using text::format_double;

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    std::filesystem::path p(value);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal();
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InvalidInput("expected true or false, got '" + v + "'");
}

int parse_positive_int(const std::string& v) {
    const long long x = text::parse_int(v);
    if (x < 1 || x > 1'000'000'000) throw InvalidInput("expected a positive integer, got '" + v + "'");
    return static_cast<int>(x);
}

std::vector<int> parse_hidden(const std::string& v) {
    std::vector<int> out;
    for (const auto& part : text::split(v, ',')) out.push_back(parse_positive_int(std::string(text::trim(part))));
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto real = [&t](const char* key, auto accessor) {
            t[key] = [accessor](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                accessor(c) = text::parse_double(v);
            };
        };
        auto integer = [&t](const char* key, auto accessor) {
            t[key] = [accessor](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                accessor(c) = static_cast<int>(text::parse_int(v));
            };
        };
        t["data.manifest"] = [](RunConfig& c, const std::string& v, const std::filesystem::path& b) {
            c.data.manifest = resolve(b, v);
        };
        t["data.features"] = [](RunConfig& c, const std::string& v, const std::filesystem::path& b) {
            c.data.features = resolve(b, v);
        };
        t["data.union"] = [](RunConfig& c, const std::string& v, const std::filesystem::path& b) {
            c.data.union_of.clear();
            for (const auto& item : text::split(v, ',')) {
                const std::string entry(text::trim(item));
                const auto colon = entry.find(':');
                if (colon == std::string::npos) throw InvalidInput("expected <schema>:<path>, got '" + entry + "'");
                c.data.union_of.emplace_back(entry.substr(0, colon), resolve(b, entry.substr(colon + 1)));
            }
        };
        t["data.synthetic"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            if (v != "sine") throw InvalidInput("unknown synthetic dataset '" + v + "'");
            c.data.synthetic = v;
        };
        t["schema"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            schema_by_name(v);
            c.schema = v;
        };
        t["split.train_fraction"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.split.train_fraction = text::parse_double(v);
        };
        t["split.mode"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.split.mode = parse_split_mode(v);
        };
        t["split.seed"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.split.seed = static_cast<std::uint64_t>(text::parse_int(v));
            c.split_seed_set = true;
        };
        t["network.hidden"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.hidden = parse_hidden(v);
        };
        t["network.transfer"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.transfer = parse_transfer(v);
        };
        t["scale_targets"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.scale_targets = parse_bool(v);
        };
        t["seed"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            const long long s = text::parse_int(v);
            if (s < 0) throw InvalidInput("seed must be >= 0");
            c.seed = static_cast<std::uint64_t>(s);
        };
        t["repeats"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.repeats = parse_positive_int(v);
        };
        t["training.algorithm"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.training.algorithm = parse_algorithm(v);
        };
        integer("training.max_epochs", [](RunConfig& c) -> int& { return c.training.max_epochs; });
        real("training.grad_tol", [](RunConfig& c) -> double& { return c.training.stop.grad_tol; });
        real("training.mu_max", [](RunConfig& c) -> double& { return c.training.stop.mu_max; });
        integer("training.plateau_epochs", [](RunConfig& c) -> int& { return c.training.stop.plateau_epochs; });
        real("training.plateau_rel_tol", [](RunConfig& c) -> double& { return c.training.stop.plateau_rel_tol; });
        real("training.mu_initial", [](RunConfig& c) -> double& { return c.training.lm.mu_initial; });
        real("training.mu_increase", [](RunConfig& c) -> double& { return c.training.lm.mu_increase; });
        real("training.mu_decrease", [](RunConfig& c) -> double& { return c.training.lm.mu_decrease; });
        integer("training.max_rejections", [](RunConfig& c) -> int& { return c.training.lm.max_rejections; });
        real("training.learning_rate", [](RunConfig& c) -> double& { return c.training.gd.learning_rate; });
        real("training.momentum", [](RunConfig& c) -> double& { return c.training.gd.momentum; });
        real("training.rate_increase", [](RunConfig& c) -> double& { return c.training.gd.rate_increase; });
        real("training.rate_decrease", [](RunConfig& c) -> double& { return c.training.gd.rate_decrease; });
        real("training.max_objective_increase",
             [](RunConfig& c) -> double& { return c.training.gd.max_objective_increase; });
        real("training.rprop_delta_initial", [](RunConfig& c) -> double& { return c.training.rprop.delta_initial; });
        real("training.rprop_delta_min", [](RunConfig& c) -> double& { return c.training.rprop.delta_min; });
        real("training.rprop_delta_max", [](RunConfig& c) -> double& { return c.training.rprop.delta_max; });
        real("training.rprop_eta_plus", [](RunConfig& c) -> double& { return c.training.rprop.eta_plus; });
        real("training.rprop_eta_minus", [](RunConfig& c) -> double& { return c.training.rprop.eta_minus; });
        real("training.line_search_c1",
             [](RunConfig& c) -> double& { return c.training.line_search.sufficient_decrease; });
        real("training.line_search_c2", [](RunConfig& c) -> double& { return c.training.line_search.curvature; });
        integer("training.line_search_max_evaluations",
                [](RunConfig& c) -> int& { return c.training.line_search.max_evaluations; });
        real("training.scg_sigma", [](RunConfig& c) -> double& { return c.training.scg.sigma; });
        real("training.scg_lambda", [](RunConfig& c) -> double& { return c.training.scg.lambda; });
        return t;
    }();
    return table;
}

}  // namespace

void apply_config_setting(RunConfig& cfg, const std::string& key, const std::string& value,
                          const std::filesystem::path& base) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
        it->second(cfg, value, base);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base, const std::string& source) {
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = text::trim(line);
        if (const auto hash = t.find('#'); hash != std::string_view::npos) t = text::trim(t.substr(0, hash));
        if (t.empty()) continue;
        const auto eq = t.find('=');
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
        try {
            apply_config_setting(cfg, std::string(text::trim(t.substr(0, eq))),
                                 std::string(text::trim(t.substr(eq + 1))), base);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    return parse_run_config(in, path.parent_path(), path.string());
}

void RunConfig::validate() const {
    const int sources = (data.manifest ? 1 : 0) + (data.features ? 1 : 0) + (data.union_of.empty() ? 0 : 1) +
                        (data.synthetic ? 1 : 0);
    if (sources != 1) throw ConfigError("exactly one data source (data.manifest, data.features, data.union, "
                                        "data.synthetic) must be set");
    for (const auto& p : {data.manifest, data.features}) {
        if (p && !std::filesystem::exists(*p)) throw ConfigError("data file does not exist: " + p->string());
    }
    if (!data.union_of.empty()) {
        if (schema != "union") throw ConfigError("data.union requires schema = union");
        for (const auto& [name, path] : data.union_of) {
            schema_by_name(name);
            if (!std::filesystem::exists(path)) throw ConfigError("data file does not exist: " + path.string());
        }
    }
    schema_by_name(schema);
    if (hidden.empty()) throw ConfigError("network.hidden needs at least one layer");
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    try {
        split.validate();
        training.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
}

std::string RunConfig::canonical() const {
    std::ostringstream out;
    if (data.manifest) out << "data.manifest = " << data.manifest->generic_string() << '\n';
    if (data.features) out << "data.features = " << data.features->generic_string() << '\n';
    if (!data.union_of.empty()) {
        std::vector<std::string> parts;
        for (const auto& [name, path] : data.union_of) parts.push_back(name + ":" + path.generic_string());
        out << "data.union = " << text::join(parts, ",") << '\n';
    }
    if (data.synthetic) out << "data.synthetic = " << *data.synthetic << '\n';
    out << "schema = " << schema << '\n';
    out << "split.train_fraction = " << format_double(split.train_fraction) << '\n';
    out << "split.mode = " << to_string(split.mode) << '\n';
    if (split_seed_set) out << "split.seed = " << split.seed << '\n';
    std::vector<std::string> hs;
    for (int h : hidden) hs.push_back(std::to_string(h));
    out << "network.hidden = " << text::join(hs, ",") << '\n';
    out << "network.transfer = " << to_string(transfer) << '\n';
    out << "scale_targets = " << (scale_targets ? "true" : "false") << '\n';
    out << "seed = " << seed << '\n';
    out << "repeats = " << repeats << '\n';
    std::istringstream desc(training.describe());
    std::string line;
    while (std::getline(desc, line)) {
        if (line.rfind("seed =", 0) == 0) continue;
        out << "training." << line << '\n';
    }
    return out.str();
}

std::string RunConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
}

NetworkLayout RunConfig::layout(int inputs, int outputs) const {
    NetworkLayout l;
    l.layer_sizes.push_back(inputs);
    for (int h : hidden) {
        l.layer_sizes.push_back(h);
        l.transfers.push_back(transfer);
    }
    l.layer_sizes.push_back(outputs);
    l.transfers.push_back(TransferKind::purelin);
    l.validate();
    return l;
}

// ---------------------------------------------------------------------------

PreparedFeatures prepare_features(const Manifest& manifest) {
    const auto built = build_rows(manifest.cuts, manifest.schema, manifest.window);
    if (built.rows.empty()) throw DataError("manifest yields no measured cuts");
    return {to_dataset(built, manifest.schema), built.rows.size(), built.dropped};
}

Dataset load_run_data(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.data.synthetic) {
        const auto b = make_sine_benchmark(cfg.seed);
        Dataset ds;
        ds.X.resize(b.x_train.rows() + b.x_test.rows(), 1);
        ds.X << b.x_train, b.x_test;
        ds.Y.resize(ds.X.rows(), 1);
        ds.Y << b.y_train, b.y_test;
        ds.feature_names = {"x"};
        ds.feature_units = {""};
        ds.target_names = {"y"};
        for (Eigen::Index i = 0; i < ds.X.rows(); ++i) ds.provenance.push_back({"sine", static_cast<int>(i + 1)});
        return ds;
    }
    const auto schema = schema_by_name(cfg.schema);
    if (cfg.data.manifest) {
        const auto manifest = load_manifest(*cfg.data.manifest);
        if (manifest.schema.name != cfg.schema) {
            throw SchemaError("manifest declares schema '" + manifest.schema.name + "' but the run uses '" +
                              cfg.schema + "'");
        }
        return prepare_features(manifest).dataset;
    }
    if (cfg.data.features) return load_features(*cfg.data.features, schema);

    std::vector<Dataset> parts;
    for (const auto& [name, path] : cfg.data.union_of) {
        const auto member = load_features(path, schema_by_name(name));
        const auto reduced = reduce_targets_max(member, schema.targets.front());
        parts.push_back(align_features(reduced, schema.feature_names(), schema.feature_units()));
    }
    return union_features(parts);
}

// ---------------------------------------------------------------------------

Preprocessor Preprocessor::fit(const Dataset& train, bool scale_targets) {
    Preprocessor p;
    p.feature_names = train.feature_names;
    p.feature_units = train.feature_units;
    p.target_names = train.target_names;
    p.fill = observed_column_means(train.X);
    for (Eigen::Index i = 0; i < p.fill.size(); ++i) {
        if (std::isnan(p.fill[i])) p.fill[i] = 0.0;
    }
    Matrix X = train.X;
    fill_missing(X, p.fill);
    p.x_scaler = MinMaxScaler::fit(X);
    if (scale_targets) p.y_scaler = MinMaxScaler::fit(train.Y);
    return p;
}

std::size_t Preprocessor::prepare_inputs(const Dataset& ds, Matrix& X_scaled) const {
    Matrix X = ds.feature_names == feature_names ? ds.X : align_features(ds, feature_names).X;
    const std::size_t filled = fill_missing(X, fill);
    X_scaled = x_scaler.apply(X);
    return filled;
}

Matrix Preprocessor::scale_targets(const Matrix& Y) const { return y_scaler ? y_scaler->apply(Y) : Y; }

Matrix Preprocessor::unscale_targets(const Matrix& Ys) const { return y_scaler ? y_scaler->inverse(Ys) : Ys; }

const MetricReport& RunOutcome::find(const std::string& split_name) const {
    for (const auto& r : metrics) {
        if (r.split == split_name) return r.metrics;
    }
    throw StateError("no metrics for split '" + split_name + "'");
}

RunOutcome run_training(const RunConfig& cfg, const Dataset& dataset, int repeat) {
    cfg.validate();
    if (dataset.Y.cols() == 0) throw DataError("training data has no target columns");
    const std::uint64_t seed = cfg.repeat_seed(repeat);

    SplitSpec spec = cfg.split;
    if (!cfg.split_seed_set) spec.seed = seed;
    auto parts = split(dataset, spec);
    auto pre = Preprocessor::fit(parts.train, cfg.scale_targets);

    Matrix Xtr, Xte;
    pre.prepare_inputs(parts.train, Xtr);
    pre.prepare_inputs(parts.test, Xte);
    const Matrix Ytr = pre.scale_targets(parts.train.Y);
    const Matrix Yte = pre.scale_targets(parts.test.Y);

    const auto layout = cfg.layout(static_cast<int>(Xtr.cols()), static_cast<int>(Ytr.cols()));
    TrainingConfig tc = cfg.training;
    tc.seed = seed;
    auto result = train(init_weights(layout, seed), Xtr, Ytr, tc);

    const Matrix ptr_s = forward(result.network, Xtr);
    const Matrix pte_s = forward(result.network, Xte);
    const auto& names = dataset.target_names;
    std::vector<LabeledReport> metrics;
    auto add = [&](std::vector<LabeledReport> rows) {
        for (auto& r : rows) metrics.push_back(std::move(r));
    };
    add(metric_rows("train", parts.train.Y, pre.unscale_targets(ptr_s), names));
    add(metric_rows("test", parts.test.Y, pre.unscale_targets(pte_s), names));
    if (pre.y_scaler) {
        add(metric_rows("train_scaled", Ytr, ptr_s, names));
        add(metric_rows("test_scaled", Yte, pte_s, names));
    }
    return RunOutcome{std::move(result.network), std::move(result.trace), std::move(pre), std::move(parts),
                      std::move(metrics), seed};
}

// ---------------------------------------------------------------------------

namespace {

std::string join_vector(const Vector& v) {
    std::vector<std::string> parts;
    for (Eigen::Index i = 0; i < v.size(); ++i) parts.push_back(format_double(v[i]));
    return text::join(parts, ",");
}

Vector parse_vector(const std::string& s, std::size_t expected, const char* key) {
    const auto parts = text::split(s, ',');
    if (parts.size() != expected) throw DataError(std::string("checkpoint field '") + key + "' has wrong length");
    Vector v(static_cast<Eigen::Index>(expected));
    for (std::size_t i = 0; i < expected; ++i) v[static_cast<Eigen::Index>(i)] = text::parse_double(parts[i]);
    return v;
}

}  // namespace

Checkpoint make_checkpoint(const RunConfig& cfg, const RunOutcome& run) {
    Checkpoint ck{run.network, run.seed, {}};
    const auto& p = run.pre;
    ck.metadata = {
        {"config_hash", cfg.hash()},
        {"schema", cfg.data.synthetic ? "synthetic" : cfg.schema},
        {"features", text::join(p.feature_names, ",")},
        {"units", text::join(p.feature_units, ",")},
        {"targets", text::join(p.target_names, ",")},
        {"fill", join_vector(p.fill)},
        {"x_min", join_vector(p.x_scaler.mins())},
        {"x_max", join_vector(p.x_scaler.maxs())},
    };
    if (p.y_scaler) {
        ck.metadata.emplace_back("y_min", join_vector(p.y_scaler->mins()));
        ck.metadata.emplace_back("y_max", join_vector(p.y_scaler->maxs()));
    }
    return ck;
}

Predictor::Predictor(Checkpoint ckpt) : ckpt_(std::move(ckpt)) {
    auto need = [&](const char* key) {
        auto v = ckpt_.find(key);
        if (!v) throw DataError(std::string("checkpoint lacks '") + key + "'");
        return *v;
    };
    schema_ = need("schema");
    pre_.feature_names = text::split(need("features"), ',');
    pre_.feature_units = text::split(need("units"), ',');
    pre_.target_names = text::split(need("targets"), ',');
    const auto d = pre_.feature_names.size();
    const auto m = pre_.target_names.size();
    if (static_cast<int>(d) != ckpt_.network.layout().input_size() ||
        static_cast<int>(m) != ckpt_.network.layout().output_size()) {
        throw DataError("checkpoint feature/target lists do not match the network shape");
    }
    if (pre_.feature_units.size() != d) throw DataError("checkpoint units do not match features");
    pre_.fill = parse_vector(need("fill"), d, "fill");
    pre_.x_scaler = MinMaxScaler(parse_vector(need("x_min"), d, "x_min"), parse_vector(need("x_max"), d, "x_max"));
    if (auto lo = ckpt_.find("y_min")) {
        pre_.y_scaler = MinMaxScaler(parse_vector(*lo, m, "y_min"), parse_vector(need("y_max"), m, "y_max"));
    }
}

Predictor Predictor::load(const std::filesystem::path& path) { return Predictor(load_checkpoint(path)); }

Prediction Predictor::predict(const Dataset& ds) const {
    Prediction p;
    Matrix X;
    p.imputed_columns = pre_.prepare_inputs(ds, X);
    p.values = pre_.unscale_targets(forward(ckpt_.network, X));
    return p;
}

Dataset Predictor::read_inputs(const std::filesystem::path& path) const {
    auto ds = load_feature_table(path, pre_.target_names);
    const bool known_any = std::any_of(ds.feature_names.begin(), ds.feature_names.end(), [&](const auto& n) {
        return std::find(pre_.feature_names.begin(), pre_.feature_names.end(), n) != pre_.feature_names.end();
    });
    if (!known_any) throw SchemaError(path.string() + ": no input column matches the checkpoint's features");
    for (const auto& n : ds.feature_names) {
        if (std::find(pre_.feature_names.begin(), pre_.feature_names.end(), n) == pre_.feature_names.end()) {
            throw SchemaError(path.string() + ": column '" + n + "' is not a feature of this checkpoint");
        }
    }
    return ds;
}

}  // namespace brann
