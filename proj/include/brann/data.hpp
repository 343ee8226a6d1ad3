#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "brann/network.hpp"
#include "brann/schema.hpp"

namespace brann {

struct Provenance {
    std::string case_id;
    int cut_index = 0;

    auto operator<=>(const Provenance&) const = default;
};

/// Feature matrix X (N x d), targets Y (N x m) and per-row provenance.
/// Missing feature cells are NaN; targets are always finite. Y may have
/// zero columns for prediction-only inputs.
struct Dataset {
    Matrix X;
    Matrix Y;
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;
    std::vector<std::string> feature_units;  // same length as feature_names, "" when unknown
    std::vector<Provenance> provenance;

    Eigen::Index rows() const { return X.rows(); }
    bool has_missing() const;
    std::size_t missing_count() const;
    void validate() const;
    Dataset select(std::span<const Eigen::Index> rows) const;
};

enum class SplitMode { random, by_case };

struct SplitSpec {
    double train_fraction = 0.7;
    SplitMode mode = SplitMode::random;
    std::uint64_t seed = 0;

    void validate() const;
};

std::string_view to_string(SplitMode mode);
SplitMode parse_split_mode(std::string_view name);

struct SplitResult {
    Dataset train;
    Dataset test;
    std::vector<Eigen::Index> train_rows;
    std::vector<Eigen::Index> test_rows;
};

/// random: seeded shuffle, then the first round(f * N) rows train.
/// by_case: whole cases, largest first, each added to train when that moves
/// the row count closer to f * N.
SplitResult split(const Dataset& dataset, const SplitSpec& spec);
void write_split_report(std::ostream& out, const SplitSpec& spec, const SplitResult& result);

/// Reads a feature CSV with header "case_id,cut_index,<features>,<targets>".
/// The header must match the schema exactly; when the file has no target
/// columns and require_targets is false, Y has zero columns. Empty feature
/// cells load as missing (NaN); NaN/Inf text is rejected.
Dataset load_features(const std::filesystem::path& path, const FeatureSchema& schema, bool require_targets = true);
Dataset read_features(std::istream& in, const FeatureSchema& schema, bool require_targets = true,
                      const std::string& source = "<stream>");

/// Header-driven variant: every column other than case_id, cut_index and the
/// named targets is a feature.
Dataset load_feature_table(const std::filesystem::path& path, const std::vector<std::string>& target_names);
Dataset read_feature_table(std::istream& in, const std::vector<std::string>& target_names,
                           const std::string& source = "<stream>");

void write_features(std::ostream& out, const Dataset& dataset);
void save_features(const std::filesystem::path& path, const Dataset& dataset);

/// Column union over datasets (lexicographic column order, rows concatenated
/// in argument order). Cells a dataset lacks are missing. All datasets must
/// share target names; a shared feature name with different units is a
/// SchemaError.
Dataset union_features(std::span<const Dataset> datasets);

/// Collapses all targets into one column holding the row maximum.
Dataset reduce_targets_max(const Dataset& dataset, const std::string& target_name);

/// Keeps the named feature columns (in the given order); names absent from
/// the dataset become fully missing columns.
Dataset align_features(const Dataset& dataset, const std::vector<std::string>& names,
                       const std::vector<std::string>& units = {});

/// Per-column mean over observed (non-NaN) cells; NaN for fully missing columns.
Vector observed_column_means(const Matrix& X);

/// Replaces NaN cells with the matching fill value. Returns the number of
/// columns that had at least one filled cell.
std::size_t fill_missing(Matrix& X, const Vector& fill);

}  // namespace brann
