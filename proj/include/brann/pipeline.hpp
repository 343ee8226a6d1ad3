#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "brann/checkpoint.hpp"
#include "brann/data.hpp"
#include "brann/features.hpp"
#include "brann/metrics.hpp"
#include "brann/trainers.hpp"

namespace brann {

class ConfigError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Where training rows come from. Exactly one of the sources is set.
struct DataSource {
    std::optional<std::filesystem::path> manifest;
    std::optional<std::filesystem::path> features;
    /// For the union schema: (member schema, feature CSV) pairs.
    std::vector<std::pair<std::string, std::filesystem::path>> union_of;
    /// Built-in noisy sine benchmark ("sine"); the benchmark's own test set
    /// is ignored and the split is applied to train + test draws.
    std::optional<std::string> synthetic;
};

struct RunConfig {
    DataSource data;
    std::string schema = "nasa";
    SplitSpec split;
    bool split_seed_set = false;  // otherwise follows seed
    std::vector<int> hidden{32};
    TransferKind transfer = TransferKind::tansig;
    TrainingConfig training;
    bool scale_targets = true;
    std::uint64_t seed = 0;
    int repeats = 1;

    void validate() const;
    /// Canonical "key = value" text; the run hash is taken over this.
    std::string canonical() const;
    std::string hash() const;
    NetworkLayout layout(int inputs, int outputs) const;
    std::uint64_t repeat_seed(int repeat) const { return seed + static_cast<std::uint64_t>(repeat); }
};

/// Reads "key = value" lines ('#' comments). Relative data paths are taken
/// against `base`. Unknown keys and bad values raise ConfigError with the line.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base = {},
                           const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies one "key=value" override (same keys as the config file).
void apply_config_setting(RunConfig& cfg, const std::string& key, const std::string& value,
                          const std::filesystem::path& base = {});

std::uint64_t fnv1a64(std::string_view bytes);

/// Feature extraction over a manifest's cuts.
struct PreparedFeatures {
    Dataset dataset;
    std::size_t kept = 0;
    std::size_t dropped = 0;
};
PreparedFeatures prepare_features(const Manifest& manifest);

/// Loads the dataset a run trains on.
Dataset load_run_data(const RunConfig& cfg);

/// Everything needed to map raw feature rows to predictions in target units.
struct Preprocessor {
    std::vector<std::string> feature_names;
    std::vector<std::string> feature_units;
    std::vector<std::string> target_names;
    Vector fill;  // per feature, used for missing cells
    MinMaxScaler x_scaler;
    std::optional<MinMaxScaler> y_scaler;

    static Preprocessor fit(const Dataset& train, bool scale_targets);

    /// Reorders to feature_names, fills gaps. Returns the count of columns
    /// that needed filling.
    std::size_t prepare_inputs(const Dataset& ds, Matrix& X_scaled) const;
    Matrix scale_targets(const Matrix& Y) const;
    Matrix unscale_targets(const Matrix& Ys) const;
};

struct RunOutcome {
    Network network;
    TrainingTrace trace;
    Preprocessor pre;
    SplitResult split;
    std::vector<LabeledReport> metrics;  // train, test, then scaled variants
    std::uint64_t seed = 0;

    const MetricReport& find(const std::string& split_name) const;
};

/// One training run on an already loaded dataset.
RunOutcome run_training(const RunConfig& cfg, const Dataset& dataset, int repeat = 0);

Checkpoint make_checkpoint(const RunConfig& cfg, const RunOutcome& run);

struct Prediction {
    Matrix values;  // target units
    std::size_t imputed_columns = 0;
};

class Predictor {
public:
    explicit Predictor(Checkpoint ckpt);
    static Predictor load(const std::filesystem::path& path);

    const Checkpoint& checkpoint() const { return ckpt_; }
    const Preprocessor& preprocessor() const { return pre_; }
    const std::string& schema() const { return schema_; }

    Prediction predict(const Dataset& ds) const;
    /// Reads a feature CSV; target columns named in the checkpoint are kept.
    Dataset read_inputs(const std::filesystem::path& path) const;

private:
    Checkpoint ckpt_;
    Preprocessor pre_;
    std::string schema_;
};

}  // namespace brann
