#include "brann/classify.hpp"

#include <cmath>
#include <ostream>

#include "brann/errors.hpp"
#include "brann/text.hpp"

namespace brann {

std::string_view to_string(Condition c) { return c == Condition::broken ? "broken" : "unbroken"; }

Condition parse_condition(std::string_view name) {
    if (name == "broken") return Condition::broken;
    if (name == "unbroken") return Condition::unbroken;
    throw InvalidInput("unknown condition '" + std::string(name) + "'");
}

ConditionThreshold::ConditionThreshold(double vb) : vb_max_mm(vb) {
    if (!std::isfinite(vb) || vb <= 0.0) throw InvalidInput("wear threshold must be positive and finite");
}

ConditionThreshold ConditionThreshold::preset(std::string_view name) {
    if (name == "max") return maximum();
    if (name == "iso_average") return iso_average();
    throw InvalidInput("unknown threshold preset '" + std::string(name) + "'");
}

ConditionResult classify_condition(double vb_pred, const ConditionThreshold& threshold) {
    if (!std::isfinite(vb_pred)) throw InvalidInput("wear prediction must be finite");
    return {vb_pred > threshold.vb_max_mm ? Condition::broken : Condition::unbroken, vb_pred < 0.0};
}

double ClassAccuracy::accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

ClassificationReport classification_report(const std::vector<Condition>& predicted,
                                           const std::vector<Condition>& truth) {
    if (predicted.size() != truth.size()) throw ShapeError("predicted and true labels differ in length");
    ClassificationReport r;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        auto& cls = truth[i] == Condition::broken ? r.broken : r.unbroken;
        const bool ok = predicted[i] == truth[i];
        ++cls.total;
        ++r.overall.total;
        if (ok) {
            ++cls.correct;
            ++r.overall.correct;
        }
    }
    return r;
}

void write_classification_csv(std::ostream& out, const std::vector<double>& vb_pred,
                              const std::vector<Condition>& predicted,
                              const std::optional<std::vector<Condition>>& truth) {
    if (vb_pred.size() != predicted.size() || (truth && truth->size() != predicted.size())) {
        throw ShapeError("classification columns differ in length");
    }
    out << "sample,vb_pred_mm,label_pred,label_true,correct\n";
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        out << i + 1 << ',' << text::format_double(vb_pred[i]) << ',' << to_string(predicted[i]) << ',';
        if (truth) out << to_string((*truth)[i]) << ',' << ((*truth)[i] == predicted[i] ? 1 : 0);
        else out << ',';
        out << '\n';
    }
}

}  // namespace brann
