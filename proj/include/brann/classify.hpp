#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace brann {

enum class Condition { unbroken, broken };

std::string_view to_string(Condition c);
Condition parse_condition(std::string_view name);

struct ConditionThreshold {
    double vb_max_mm = 0.6;

    explicit ConditionThreshold(double vb = 0.6);
    static ConditionThreshold maximum() { return ConditionThreshold(0.6); }
    static ConditionThreshold iso_average() { return ConditionThreshold(0.3); }
    static ConditionThreshold preset(std::string_view name);  // "max" or "iso_average"
};

struct ConditionResult {
    Condition label = Condition::unbroken;
    bool negative_prediction = false;  // extrapolated below zero wear
};

/// Broken iff vb_pred > threshold.
ConditionResult classify_condition(double vb_pred, const ConditionThreshold& threshold);

struct ClassAccuracy {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy() const;
};

struct ClassificationReport {
    ClassAccuracy broken;
    ClassAccuracy unbroken;
    ClassAccuracy overall;
};

ClassificationReport classification_report(const std::vector<Condition>& predicted,
                                           const std::vector<Condition>& truth);

/// Rows "sample,vb_pred_mm,label_pred,label_true,correct"; label_true and
/// correct are blank when truth is absent.
void write_classification_csv(std::ostream& out, const std::vector<double>& vb_pred,
                              const std::vector<Condition>& predicted,
                              const std::optional<std::vector<Condition>>& truth);

}  // namespace brann
