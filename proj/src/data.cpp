#include "brann/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "brann/random.hpp"
#include "brann/text.hpp"

namespace brann {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;
};

RawTable read_table(std::istream& in, const std::string& source) {
    RawTable table;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = text::trim(line);
        if (t.empty()) continue;
        std::vector<std::string> cells;
        for (auto& c : text::split(t, ',')) cells.emplace_back(text::trim(c));
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw DataError(source + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " cells, found " + std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(line_no);
    }
    if (table.header.empty()) throw DataError(source + ": missing header");
    if (table.rows.empty()) throw DataError(source + ": no rows");
    return table;
}

double parse_cell(const std::string& cell, bool allow_missing, const std::string& source, int line,
                  const std::string& column) {
    auto where = [&] { return source + ":" + std::to_string(line) + " column '" + column + "'"; };
    if (cell.empty()) {
        if (allow_missing) return kMissing;
        throw DataError(where() + ": empty cell");
    }
    double v = 0.0;
    try {
        v = text::parse_double(cell);
    } catch (const InvalidInput&) {
        throw DataError(where() + ": non-numeric cell '" + cell + "'");
    }
    if (!std::isfinite(v)) throw DataError(where() + ": non-finite value '" + cell + "'");
    return v;
}

Dataset build_dataset(const RawTable& table, const std::vector<std::string>& features,
                      const std::vector<std::string>& targets, const std::string& source) {
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    Dataset ds;
    ds.feature_names = features;
    ds.target_names = targets;
    ds.feature_units.assign(features.size(), "");
    ds.X.resize(n, static_cast<Eigen::Index>(features.size()));
    ds.Y.resize(n, static_cast<Eigen::Index>(targets.size()));
    std::map<std::string, std::size_t> column;
    for (std::size_t c = 0; c < table.header.size(); ++c) column[table.header[c]] = c;

    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& cells = table.rows[static_cast<std::size_t>(r)];
        const int line = table.line_numbers[static_cast<std::size_t>(r)];
        Provenance p;
        p.case_id = cells[column.at("case_id")];
        if (p.case_id.empty()) throw DataError(source + ":" + std::to_string(line) + ": empty case_id");
        try {
            p.cut_index = static_cast<int>(text::parse_int(cells[column.at("cut_index")]));
        } catch (const InvalidInput&) {
            throw DataError(source + ":" + std::to_string(line) + ": bad cut_index");
        }
        ds.provenance.push_back(std::move(p));
        for (std::size_t f = 0; f < features.size(); ++f) {
            ds.X(r, static_cast<Eigen::Index>(f)) =
                parse_cell(cells[column.at(features[f])], true, source, line, features[f]);
        }
        for (std::size_t t = 0; t < targets.size(); ++t) {
            ds.Y(r, static_cast<Eigen::Index>(t)) =
                parse_cell(cells[column.at(targets[t])], false, source, line, targets[t]);
        }
    }
    return ds;
}

}  // namespace

bool Dataset::has_missing() const { return X.hasNaN(); }

std::size_t Dataset::missing_count() const {
    return static_cast<std::size_t>(X.array().isNaN().count());
}

void Dataset::validate() const {
    if (X.rows() != Y.rows() || static_cast<std::size_t>(X.rows()) != provenance.size()) {
        throw ShapeError("dataset row counts disagree");
    }
    if (static_cast<std::size_t>(X.cols()) != feature_names.size() ||
        static_cast<std::size_t>(Y.cols()) != target_names.size()) {
        throw ShapeError("dataset column names do not match matrix widths");
    }
    if (!feature_units.empty() && feature_units.size() != feature_names.size()) {
        throw ShapeError("dataset units do not match feature names");
    }
    if (!Y.allFinite()) throw DataError("dataset targets must be finite");
    if ((X.array().isInf()).any()) throw DataError("dataset features must be finite or missing");
}

Dataset Dataset::select(std::span<const Eigen::Index> rows) const {
    Dataset out;
    out.feature_names = feature_names;
    out.target_names = target_names;
    out.feature_units = feature_units;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    out.Y.resize(static_cast<Eigen::Index>(rows.size()), Y.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = rows[i];
        out.X.row(static_cast<Eigen::Index>(i)) = X.row(r);
        out.Y.row(static_cast<Eigen::Index>(i)) = Y.row(r);
        out.provenance.push_back(provenance[static_cast<std::size_t>(r)]);
    }
    return out;
}

void SplitSpec::validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidInput("train_fraction must lie strictly between 0 and 1");
    }
}

std::string_view to_string(SplitMode mode) { return mode == SplitMode::random ? "random" : "by_case"; }

SplitMode parse_split_mode(std::string_view name) {
    if (name == "random") return SplitMode::random;
    if (name == "by_case") return SplitMode::by_case;
    throw InvalidInput("unknown split mode '" + std::string(name) + "'");
}

SplitResult split(const Dataset& dataset, const SplitSpec& spec) {
    spec.validate();
    const Eigen::Index n = dataset.rows();
    std::vector<bool> in_train(static_cast<std::size_t>(n), false);

    if (spec.mode == SplitMode::random) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        Rng rng(spec.seed);
        rng.shuffle(order.begin(), order.end());
        const auto n_train = static_cast<Eigen::Index>(std::llround(spec.train_fraction * static_cast<double>(n)));
        for (Eigen::Index i = 0; i < n_train && i < n; ++i) in_train[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
    } else {
        struct Case {
            std::string id;
            std::size_t first = 0;
            std::vector<Eigen::Index> rows;
        };
        std::vector<Case> cases;
        std::map<std::string, std::size_t> index;
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto& id = dataset.provenance[static_cast<std::size_t>(r)].case_id;
            auto [it, fresh] = index.emplace(id, cases.size());
            if (fresh) cases.push_back({id, cases.size(), {}});
            cases[it->second].rows.push_back(r);
        }
        std::stable_sort(cases.begin(), cases.end(),
                         [](const Case& a, const Case& b) { return a.rows.size() > b.rows.size(); });
        const double target = spec.train_fraction * static_cast<double>(n);
        double count = 0.0;
        for (const auto& c : cases) {
            const double with = count + static_cast<double>(c.rows.size());
            if (std::abs(with - target) < std::abs(count - target)) {
                count = with;
                for (auto r : c.rows) in_train[static_cast<std::size_t>(r)] = true;
            }
        }
    }

    SplitResult out;
    for (Eigen::Index r = 0; r < n; ++r) {
        (in_train[static_cast<std::size_t>(r)] ? out.train_rows : out.test_rows).push_back(r);
    }
    if (out.train_rows.empty() || out.test_rows.empty()) {
        throw InvalidInput("split with train_fraction " + text::format_double(spec.train_fraction) +
                           " leaves an empty side (" + std::to_string(out.train_rows.size()) + "/" +
                           std::to_string(out.test_rows.size()) + " rows)");
    }
    out.train = dataset.select(out.train_rows);
    out.test = dataset.select(out.test_rows);
    return out;
}

void write_split_report(std::ostream& out, const SplitSpec& spec, const SplitResult& result) {
    auto rows = [](const std::vector<Eigen::Index>& v) {
        std::vector<std::string> parts;
        for (auto r : v) parts.push_back(std::to_string(r));
        return text::join(parts, " ");
    };
    out << "seed = " << spec.seed << '\n';
    out << "mode = " << to_string(spec.mode) << '\n';
    out << "train_fraction = " << text::format_double(spec.train_fraction) << '\n';
    out << "train_rows = " << rows(result.train_rows) << '\n';
    out << "test_rows = " << rows(result.test_rows) << '\n';
}

Dataset read_features(std::istream& in, const FeatureSchema& schema, bool require_targets,
                      const std::string& source) {
    const RawTable table = read_table(in, source);
    const auto full = schema.csv_header(true);
    const auto inputs_only = schema.csv_header(false);
    const bool has_targets = table.header.size() == full.size();
    const auto& expected = (has_targets || require_targets) ? full : inputs_only;

    const std::size_t common = std::min(expected.size(), table.header.size());
    for (std::size_t i = 0; i < common; ++i) {
        if (table.header[i] != expected[i]) {
            throw SchemaError(source + ": header column " + std::to_string(i + 1) + " is '" + table.header[i] +
                              "', schema '" + schema.name + "' expects '" + expected[i] + "'");
        }
    }
    if (table.header.size() != expected.size()) {
        throw SchemaError(source + ": header has " + std::to_string(table.header.size()) +
                          " columns, schema '" + schema.name + "' expects " + std::to_string(expected.size()));
    }
    Dataset ds = build_dataset(table, schema.feature_names(),
                               has_targets ? schema.targets : std::vector<std::string>{}, source);
    ds.feature_units = schema.feature_units();
    return ds;
}

Dataset load_features(const std::filesystem::path& path, const FeatureSchema& schema, bool require_targets) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_features(in, schema, require_targets, path.string());
}

Dataset read_feature_table(std::istream& in, const std::vector<std::string>& target_names,
                           const std::string& source) {
    const RawTable table = read_table(in, source);
    if (table.header.size() < 2 || table.header[0] != "case_id" || table.header[1] != "cut_index") {
        throw SchemaError(source + ": header must start with case_id,cut_index");
    }
    std::set<std::string> seen;
    for (const auto& h : table.header) {
        if (!seen.insert(h).second) throw SchemaError(source + ": duplicate column '" + h + "'");
    }
    std::vector<std::string> features, targets;
    for (std::size_t c = 2; c < table.header.size(); ++c) {
        const auto& h = table.header[c];
        if (std::find(target_names.begin(), target_names.end(), h) == target_names.end()) features.push_back(h);
    }
    for (const auto& t : target_names) {
        if (seen.count(t)) targets.push_back(t);
    }
    return build_dataset(table, features, targets, source);
}

Dataset load_feature_table(const std::filesystem::path& path, const std::vector<std::string>& target_names) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_feature_table(in, target_names, path.string());
}

void write_features(std::ostream& out, const Dataset& dataset) {
    std::vector<std::string> header{"case_id", "cut_index"};
    header.insert(header.end(), dataset.feature_names.begin(), dataset.feature_names.end());
    header.insert(header.end(), dataset.target_names.begin(), dataset.target_names.end());
    out << text::join(header, ",") << '\n';
    for (Eigen::Index r = 0; r < dataset.rows(); ++r) {
        const auto& p = dataset.provenance[static_cast<std::size_t>(r)];
        out << p.case_id << ',' << p.cut_index;
        for (Eigen::Index c = 0; c < dataset.X.cols(); ++c) {
            out << ',';
            if (!std::isnan(dataset.X(r, c))) out << text::format_double(dataset.X(r, c));
        }
        for (Eigen::Index c = 0; c < dataset.Y.cols(); ++c) out << ',' << text::format_double(dataset.Y(r, c));
        out << '\n';
    }
}

void save_features(const std::filesystem::path& path, const Dataset& dataset) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_features(out, dataset);
}

Dataset union_features(std::span<const Dataset> datasets) {
    if (datasets.empty()) throw InvalidInput("union of zero datasets");
    std::map<std::string, std::string> units;
    for (const auto& ds : datasets) {
        if (ds.target_names != datasets.front().target_names) {
            throw SchemaError("datasets in a union must share target names");
        }
        for (std::size_t f = 0; f < ds.feature_names.size(); ++f) {
            const std::string u = f < ds.feature_units.size() ? ds.feature_units[f] : "";
            auto [it, fresh] = units.emplace(ds.feature_names[f], u);
            if (!fresh && it->second != u) {
                if (it->second.empty()) {
                    it->second = u;
                } else if (!u.empty()) {
                    throw SchemaError("feature '" + ds.feature_names[f] + "' has conflicting units '" +
                                      it->second + "' and '" + u + "'");
                }
            }
        }
    }
    std::vector<std::string> names;
    std::vector<std::string> unit_list;
    for (const auto& [name, u] : units) {
        names.push_back(name);
        unit_list.push_back(u);
    }
    Dataset out;
    out.feature_names = names;
    out.feature_units = unit_list;
    out.target_names = datasets.front().target_names;
    Eigen::Index total = 0;
    for (const auto& ds : datasets) total += ds.rows();
    out.X = Matrix::Constant(total, static_cast<Eigen::Index>(names.size()), kMissing);
    out.Y.resize(total, static_cast<Eigen::Index>(out.target_names.size()));

    Eigen::Index row = 0;
    for (const auto& ds : datasets) {
        std::vector<Eigen::Index> col(ds.feature_names.size());
        for (std::size_t f = 0; f < ds.feature_names.size(); ++f) {
            col[f] = std::lower_bound(names.begin(), names.end(), ds.feature_names[f]) - names.begin();
        }
        for (Eigen::Index r = 0; r < ds.rows(); ++r, ++row) {
            for (std::size_t f = 0; f < col.size(); ++f) out.X(row, col[f]) = ds.X(r, static_cast<Eigen::Index>(f));
            out.Y.row(row) = ds.Y.row(r);
            out.provenance.push_back(ds.provenance[static_cast<std::size_t>(r)]);
        }
    }
    return out;
}

Dataset reduce_targets_max(const Dataset& dataset, const std::string& target_name) {
    if (dataset.Y.cols() == 0) throw InvalidInput("dataset has no targets to reduce");
    Dataset out = dataset;
    out.Y = dataset.Y.rowwise().maxCoeff();
    out.target_names = {target_name};
    return out;
}

Dataset align_features(const Dataset& dataset, const std::vector<std::string>& names,
                       const std::vector<std::string>& units) {
    Dataset out;
    out.feature_names = names;
    out.feature_units = units.empty() ? std::vector<std::string>(names.size(), "") : units;
    out.target_names = dataset.target_names;
    out.Y = dataset.Y;
    out.provenance = dataset.provenance;
    out.X = Matrix::Constant(dataset.rows(), static_cast<Eigen::Index>(names.size()), kMissing);
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto it = std::find(dataset.feature_names.begin(), dataset.feature_names.end(), names[i]);
        if (it == dataset.feature_names.end()) continue;
        out.X.col(static_cast<Eigen::Index>(i)) = dataset.X.col(it - dataset.feature_names.begin());
    }
    return out;
}

Vector observed_column_means(const Matrix& X) {
    Vector means(X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            if (!std::isnan(X(r, c))) {
                sum += X(r, c);
                ++count;
            }
        }
        means[c] = count ? sum / static_cast<double>(count) : kMissing;
    }
    return means;
}

std::size_t fill_missing(Matrix& X, const Vector& fill) {
    if (fill.size() != X.cols()) throw ShapeError("fill vector does not match column count");
    std::size_t columns = 0;
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        bool touched = false;
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            if (std::isnan(X(r, c))) {
                X(r, c) = fill[c];
                touched = true;
            }
        }
        if (touched) ++columns;
    }
    return columns;
}

}  // namespace brann
