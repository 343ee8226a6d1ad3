#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brann/data.hpp"
#include "brann/schema.hpp"

namespace brann {

struct SignalSeries {
    std::string channel;
    std::vector<double> values;
    std::string units;
};

/// One machining pass: process settings, the signal segment recorded
/// during this cut for every channel, and the wear measured afterwards
/// (absent when the cut was not measured).
struct CutRecord {
    std::string case_id;
    int cut_index = 1;
    std::map<std::string, double> process_params;
    std::map<std::string, SignalSeries> signals;
    std::optional<std::vector<double>> vb;
};

struct SignalStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

SignalStats extract_stats(std::span<const double> segment);

/// Running min/max/sum/count; extending by a segment is equivalent to
/// recomputing extract_stats over the concatenation.
class RunningStats {
public:
    void add(std::span<const double> segment);
    std::size_t count() const { return count_; }
    SignalStats stats() const;

private:
    double min_ = 0.0;
    double max_ = 0.0;
    double sum_ = 0.0;
    std::size_t count_ = 0;
};

enum class WindowMode { cumulative, per_cut };

std::string_view to_string(WindowMode mode);
WindowMode parse_window_mode(std::string_view name);

/// For each channel, samples from the start of cut 1 through the end of cut n.
/// case_cuts must all belong to one case; cuts 1..n must be present.
std::map<std::string, std::vector<double>> cumulative_window(std::span<const CutRecord> case_cuts, int n);

struct FeatureRow {
    Vector features;
    Vector target;
    Provenance provenance;
};

struct BuildResult {
    std::vector<FeatureRow> rows;
    std::size_t dropped = 0;  // cuts without a wear measurement
};

/// One row per measured cut, ordered by (case_id, cut_index). Features are the
/// schema's process parameters followed by per-channel statistics over the
/// window ending at that cut.
BuildResult build_rows(std::span<const CutRecord> cuts, const FeatureSchema& schema,
                       WindowMode mode = WindowMode::cumulative);

Dataset to_dataset(const BuildResult& built, const FeatureSchema& schema);

/// Per-column MinMax scaling fitted on training rows. Constant columns map
/// to 0; missing (NaN) cells are ignored by fit and pass through apply.
class MinMaxScaler {
public:
    MinMaxScaler() = default;
    MinMaxScaler(Vector mins, Vector maxs);

    static MinMaxScaler fit(const Matrix& rows);

    bool fitted() const { return fitted_; }
    const Vector& mins() const { return mins_; }
    const Vector& maxs() const { return maxs_; }

    Matrix apply(const Matrix& X) const;
    Matrix inverse(const Matrix& Z) const;

private:
    void require_fitted(Eigen::Index cols) const;

    Vector mins_;
    Vector maxs_;
    bool fitted_ = false;
};

/// Dataset manifest. Line-oriented text, '#' starts a comment, paths are
/// relative to the manifest's directory:
///
///   schema: nasa
///   window: cumulative            (optional; or per_cut)
///   vb: measurements.csv          (case_id,cut_index,<target columns>)
///   case <case_id> <param>=<value> ...
///   cut <case_id> <cut_index> <channel>=<signal.csv> ...
///
/// Signal files hold one value per line under an optional "value" header.
struct Manifest {
    FeatureSchema schema;
    WindowMode window = WindowMode::cumulative;
    std::vector<CutRecord> cuts;
};

Manifest load_manifest(const std::filesystem::path& path);
std::vector<double> load_signal(const std::filesystem::path& path);

}  // namespace brann
