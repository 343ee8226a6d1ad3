#include "brann/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "brann/text.hpp"

namespace brann {

SignalStats extract_stats(std::span<const double> segment) {
    if (segment.empty()) throw InvalidInput("cannot summarize an empty signal segment");
    RunningStats acc;
    acc.add(segment);
    return acc.stats();
}

void RunningStats::add(std::span<const double> segment) {
    for (double v : segment) {
        if (count_ == 0) {
            min_ = max_ = v;
        } else {
            min_ = std::min(min_, v);
            max_ = std::max(max_, v);
        }
        sum_ += v;
        ++count_;
    }
}

SignalStats RunningStats::stats() const {
    if (count_ == 0) throw InvalidInput("no samples accumulated");
    return {min_, max_, sum_ / static_cast<double>(count_)};
}

std::string_view to_string(WindowMode mode) { return mode == WindowMode::cumulative ? "cumulative" : "per_cut"; }

WindowMode parse_window_mode(std::string_view name) {
    if (name == "cumulative") return WindowMode::cumulative;
    if (name == "per_cut") return WindowMode::per_cut;
    throw InvalidInput("unknown window mode '" + std::string(name) + "'");
}

namespace {

std::vector<const CutRecord*> sorted_case(std::span<const CutRecord> case_cuts) {
    std::vector<const CutRecord*> cuts;
    for (const auto& c : case_cuts) cuts.push_back(&c);
    std::stable_sort(cuts.begin(), cuts.end(),
                     [](const CutRecord* a, const CutRecord* b) { return a->cut_index < b->cut_index; });
    for (std::size_t i = 1; i < cuts.size(); ++i) {
        if (cuts[i]->cut_index == cuts[i - 1]->cut_index) {
            throw DataError("case '" + cuts[i]->case_id + "' repeats cut " + std::to_string(cuts[i]->cut_index));
        }
        if (cuts[i]->case_id != cuts[0]->case_id) throw DataError("cuts from different cases mixed in one window");
    }
    return cuts;
}

void check_contiguous(const std::vector<const CutRecord*>& cuts, int n) {
    for (int i = 1; i <= n; ++i) {
        const auto idx = static_cast<std::size_t>(i - 1);
        if (idx >= cuts.size() || cuts[idx]->cut_index != i) {
            const std::string id = cuts.empty() ? "?" : cuts[0]->case_id;
            throw DataError("case '" + id + "' is missing cut " + std::to_string(i));
        }
    }
}

const SignalSeries& channel_of(const CutRecord& cut, const std::string& channel) {
    const auto it = cut.signals.find(channel);
    if (it == cut.signals.end()) {
        throw SchemaError("case '" + cut.case_id + "' cut " + std::to_string(cut.cut_index) + " has no channel '" +
                          channel + "'");
    }
    return it->second;
}

}  // namespace

std::map<std::string, std::vector<double>> cumulative_window(std::span<const CutRecord> case_cuts, int n) {
    if (n < 1) throw InvalidInput("window end must be >= 1");
    const auto cuts = sorted_case(case_cuts);
    check_contiguous(cuts, n);
    std::map<std::string, std::vector<double>> out;
    for (int i = 0; i < n; ++i) {
        for (const auto& [name, series] : cuts[static_cast<std::size_t>(i)]->signals) {
            auto& dst = out[name];
            dst.insert(dst.end(), series.values.begin(), series.values.end());
        }
    }
    return out;
}

BuildResult build_rows(std::span<const CutRecord> cuts, const FeatureSchema& schema, WindowMode mode) {
    std::map<std::string, std::vector<CutRecord>> cases;
    for (const auto& c : cuts) cases[c.case_id].push_back(c);

    BuildResult out;
    const auto d = static_cast<Eigen::Index>(schema.feature_count());
    const auto m = static_cast<Eigen::Index>(schema.targets.size());
    for (const auto& [case_id, records] : cases) {
        const auto ordered = sorted_case(records);
        check_contiguous(ordered, ordered.back()->cut_index);

        std::vector<RunningStats> acc(schema.channels.size());
        for (const CutRecord* cut : ordered) {
            for (const auto& [name, series] : cut->signals) {
                const bool known = std::any_of(schema.channels.begin(), schema.channels.end(),
                                               [&](const Channel& ch) { return ch.name == name; });
                if (!known) {
                    throw SchemaError("case '" + case_id + "' cut " + std::to_string(cut->cut_index) +
                                      " has channel '" + name + "' not in schema '" + schema.name + "'");
                }
            }
            for (std::size_t c = 0; c < schema.channels.size(); ++c) {
                const auto& series = channel_of(*cut, schema.channels[c].name);
                if (series.values.empty()) {
                    throw DataError("case '" + case_id + "' cut " + std::to_string(cut->cut_index) + " channel '" +
                                    series.channel + "' is empty");
                }
                if (mode == WindowMode::per_cut) acc[c] = RunningStats{};
                acc[c].add(series.values);
            }
            if (!cut->vb) {
                ++out.dropped;
                continue;
            }
            if (static_cast<Eigen::Index>(cut->vb->size()) != m) {
                throw SchemaError("case '" + case_id + "' cut " + std::to_string(cut->cut_index) + " has " +
                                  std::to_string(cut->vb->size()) + " wear values, schema expects " +
                                  std::to_string(m));
            }
            FeatureRow row;
            row.features.resize(d);
            Eigen::Index f = 0;
            for (const auto& p : schema.process_params) {
                const auto it = cut->process_params.find(p.name);
                if (it == cut->process_params.end()) {
                    throw SchemaError("case '" + case_id + "' lacks process parameter '" + p.name + "'");
                }
                row.features[f++] = it->second;
            }
            for (std::size_t c = 0; c < schema.channels.size(); ++c) {
                const auto s = acc[c].stats();
                for (auto stat : schema.stats) {
                    row.features[f++] = stat == Statistic::min ? s.min : stat == Statistic::max ? s.max : s.mean;
                }
            }
            row.target = Eigen::Map<const Vector>(cut->vb->data(), m);
            row.provenance = {case_id, cut->cut_index};
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

Dataset to_dataset(const BuildResult& built, const FeatureSchema& schema) {
    Dataset ds;
    ds.feature_names = schema.feature_names();
    ds.feature_units = schema.feature_units();
    ds.target_names = schema.targets;
    const auto n = static_cast<Eigen::Index>(built.rows.size());
    ds.X.resize(n, static_cast<Eigen::Index>(ds.feature_names.size()));
    ds.Y.resize(n, static_cast<Eigen::Index>(ds.target_names.size()));
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = built.rows[static_cast<std::size_t>(r)];
        ds.X.row(r) = row.features.transpose();
        ds.Y.row(r) = row.target.transpose();
        ds.provenance.push_back(row.provenance);
    }
    return ds;
}

// ---------------------------------------------------------------------------

MinMaxScaler::MinMaxScaler(Vector mins, Vector maxs) : mins_(std::move(mins)), maxs_(std::move(maxs)), fitted_(true) {
    if (mins_.size() != maxs_.size()) throw ShapeError("scaler bounds differ in length");
    for (Eigen::Index i = 0; i < mins_.size(); ++i) {
        if (!(maxs_[i] >= mins_[i])) throw InvalidInput("scaler max must be >= min");
    }
}

MinMaxScaler MinMaxScaler::fit(const Matrix& rows) {
    if (rows.rows() == 0) throw InvalidInput("cannot fit a scaler on zero rows");
    Vector mins(rows.cols()), maxs(rows.cols());
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            const double v = rows(r, c);
            if (std::isnan(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (lo > hi) lo = hi = 0.0;  // column never observed
        mins[c] = lo;
        maxs[c] = hi;
    }
    return MinMaxScaler(std::move(mins), std::move(maxs));
}

void MinMaxScaler::require_fitted(Eigen::Index cols) const {
    if (!fitted_) throw StateError("scaler has not been fitted");
    if (cols != mins_.size()) throw ShapeError("scaler fitted on a different column count");
}

Matrix MinMaxScaler::apply(const Matrix& X) const {
    require_fitted(X.cols());
    Matrix out(X.rows(), X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        const double range = maxs_[c] - mins_[c];
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            out(r, c) = range > 0.0 ? (X(r, c) - mins_[c]) / range : (std::isnan(X(r, c)) ? X(r, c) : 0.0);
        }
    }
    return out;
}

Matrix MinMaxScaler::inverse(const Matrix& Z) const {
    require_fitted(Z.cols());
    Matrix out(Z.rows(), Z.cols());
    for (Eigen::Index c = 0; c < Z.cols(); ++c) {
        const double range = maxs_[c] - mins_[c];
        for (Eigen::Index r = 0; r < Z.rows(); ++r) out(r, c) = mins_[c] + Z(r, c) * range;
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<double> load_signal(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open signal file " + path.string());
    std::vector<double> values;
    std::string line;
    int line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = text::trim(line);
        if (t.empty()) continue;
        if (first && t == "value") {
            first = false;
            continue;
        }
        first = false;
        double v = 0.0;
        try {
            v = text::parse_double(t);
        } catch (const InvalidInput&) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric sample '" +
                            std::string(t) + "'");
        }
        if (!std::isfinite(v)) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-finite sample");
        }
        values.push_back(v);
    }
    if (values.empty()) throw DataError(path.string() + ": signal file has no samples");
    return values;
}

namespace {

struct MeasurementTable {
    std::map<std::pair<std::string, int>, std::optional<std::vector<double>>> rows;
};

MeasurementTable load_measurements(const std::filesystem::path& path, const FeatureSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open wear measurements " + path.string());
    MeasurementTable table;
    std::string line;
    int line_no = 0;
    bool header = true;
    std::vector<std::string> expected{"case_id", "cut_index"};
    expected.insert(expected.end(), schema.targets.begin(), schema.targets.end());
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = text::trim(line);
        if (t.empty()) continue;
        std::vector<std::string> cells;
        for (auto& c : text::split(t, ',')) cells.emplace_back(text::trim(c));
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (header) {
            if (cells != expected) throw SchemaError(where + ": header must be " + text::join(expected, ","));
            header = false;
            continue;
        }
        if (cells.size() != expected.size()) throw DataError(where + ": wrong number of cells");
        int cut = 0;
        try {
            cut = static_cast<int>(text::parse_int(cells[1]));
        } catch (const InvalidInput&) {
            throw DataError(where + ": bad cut_index");
        }
        std::optional<std::vector<double>> vb;
        const bool measured = std::all_of(cells.begin() + 2, cells.end(), [](const auto& c) { return !c.empty(); });
        if (measured) {
            std::vector<double> values;
            for (std::size_t i = 2; i < cells.size(); ++i) {
                double v = 0.0;
                try {
                    v = text::parse_double(cells[i]);
                } catch (const InvalidInput&) {
                    throw DataError(where + ": non-numeric wear value");
                }
                if (!std::isfinite(v) || v < 0.0) throw DataError(where + ": wear must be finite and >= 0");
                values.push_back(v);
            }
            vb = std::move(values);
        }
        if (!table.rows.emplace(std::make_pair(cells[0], cut), std::move(vb)).second) {
            throw DataError(where + ": duplicate measurement row");
        }
    }
    if (header) throw DataError(path.string() + ": empty measurement file");
    return table;
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    const auto base = path.parent_path();
    Manifest manifest;
    bool have_schema = false;
    std::optional<std::filesystem::path> vb_path;
    std::map<std::string, std::map<std::string, double>> case_params;
    std::vector<std::pair<int, CutRecord>> cuts;  // line number, record

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        auto t = text::trim(line);
        if (const auto hash = t.find('#'); hash != std::string_view::npos) t = text::trim(t.substr(0, hash));
        if (t.empty()) continue;

        std::vector<std::string> words;
        for (auto& w : text::split(t, ' ')) {
            if (!text::trim(w).empty()) words.emplace_back(text::trim(w));
        }
        const std::string& head = words[0];
        try {
            if (head == "schema:" && words.size() == 2) {
                manifest.schema = schema_by_name(words[1]);
                have_schema = true;
            } else if (head == "window:" && words.size() == 2) {
                manifest.window = parse_window_mode(words[1]);
            } else if (head == "vb:" && words.size() == 2) {
                vb_path = base / words[1];
            } else if (head == "case" && words.size() >= 2) {
                auto& params = case_params[words[1]];
                for (std::size_t i = 2; i < words.size(); ++i) {
                    const auto eq = words[i].find('=');
                    if (eq == std::string::npos) throw DataError("expected <param>=<value>");
                    params[words[i].substr(0, eq)] = text::parse_double(words[i].substr(eq + 1));
                }
            } else if (head == "cut" && words.size() >= 3) {
                CutRecord cut;
                cut.case_id = words[1];
                cut.cut_index = static_cast<int>(text::parse_int(words[2]));
                if (cut.cut_index < 1) throw DataError("cut_index must be >= 1");
                for (std::size_t i = 3; i < words.size(); ++i) {
                    const auto eq = words[i].find('=');
                    if (eq == std::string::npos) throw DataError("expected <channel>=<file>");
                    const std::string channel = words[i].substr(0, eq);
                    SignalSeries series{channel, load_signal(base / words[i].substr(eq + 1)), ""};
                    cut.signals.emplace(channel, std::move(series));
                }
                cuts.emplace_back(line_no, std::move(cut));
            } else {
                throw DataError("unrecognized manifest line");
            }
        } catch (const SchemaError& e) {
            throw SchemaError(where + ": " + e.what());
        } catch (const Error& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    if (!have_schema) throw SchemaError(path.string() + ": manifest has no 'schema:' line");
    if (!vb_path) throw DataError(path.string() + ": manifest has no 'vb:' line");
    const auto measurements = load_measurements(*vb_path, manifest.schema);

    for (auto& [ln, cut] : cuts) {
        const std::string where = path.string() + ":" + std::to_string(ln);
        for (const auto& ch : manifest.schema.channels) {
            if (!cut.signals.count(ch.name)) throw SchemaError(where + ": cut lacks channel '" + ch.name + "'");
            cut.signals[ch.name].units = ch.units;
        }
        const auto params = case_params.find(cut.case_id);
        for (const auto& p : manifest.schema.process_params) {
            if (params == case_params.end() || !params->second.count(p.name)) {
                throw SchemaError(where + ": case '" + cut.case_id + "' lacks process parameter '" + p.name + "'");
            }
        }
        if (params != case_params.end()) cut.process_params = params->second;
        const auto m = measurements.rows.find({cut.case_id, cut.cut_index});
        if (m != measurements.rows.end()) cut.vb = m->second;
        manifest.cuts.push_back(std::move(cut));
    }
    return manifest;
}

}  // namespace brann
