#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "brann/network.hpp"

namespace brann {

struct MetricReport {
    double mae = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
};

// Multi-column inputs are pooled over every entry.
double mae(const Matrix& y_true, const Matrix& y_pred);
double rmse(const Matrix& y_true, const Matrix& y_pred);
double mse(const Matrix& y_true, const Matrix& y_pred);
/// Throws InvalidInput("degenerate targets") when y_true has zero variance.
double r2(const Matrix& y_true, const Matrix& y_pred);

/// r2 is NaN in the report when the targets are degenerate.
MetricReport evaluate(const Matrix& y_true, const Matrix& y_pred);

struct LabeledReport {
    std::string split;
    std::string target;  // "all" for the pooled row
    MetricReport metrics;
};

/// Pooled row followed by one row per target column (when there are several).
std::vector<LabeledReport> metric_rows(const std::string& split, const Matrix& y_true, const Matrix& y_pred,
                                       const std::vector<std::string>& target_names);

inline constexpr const char* kMetricCsvHeader = "split,target,mae,rmse,r2,n";
void write_metric_csv(std::ostream& out, const std::vector<LabeledReport>& rows);

}  // namespace brann
