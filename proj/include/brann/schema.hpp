#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace brann {

enum class Statistic { min, max, mean };

std::string_view to_string(Statistic stat);

struct Channel {
    std::string name;
    std::string units;
    std::string description;
};

struct ProcessParam {
    std::string name;
    std::string units;
    std::string description;
};

/// Input/output layout of one monitoring dataset. Feature order is fixed:
/// process parameters first, then for each channel one column per statistic
/// named "<channel>_<stat>".
struct FeatureSchema {
    std::string name;
    std::vector<ProcessParam> process_params;
    std::vector<Channel> channels;
    std::vector<Statistic> stats{Statistic::min, Statistic::max, Statistic::mean};
    std::vector<std::string> targets{"vb_mm"};

    std::vector<std::string> feature_names() const;
    std::vector<std::string> feature_units() const;
    std::size_t feature_count() const;
    /// Process parameter names followed by channel names.
    std::vector<std::string> input_parameters() const;
    /// "case_id,cut_index,<features...>,<targets...>"
    std::vector<std::string> csv_header(bool with_targets = true) const;
};

std::string feature_name(const Channel& channel, Statistic stat);

/// Built-in schemas: nasa, phm2010, nuaa, inhouse, union.
FeatureSchema schema_by_name(std::string_view name);
std::vector<std::string> schema_names();

}  // namespace brann
