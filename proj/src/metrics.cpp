#include "brann/metrics.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "brann/text.hpp"

namespace brann {

namespace {

void check(const Matrix& t, const Matrix& p) {
    if (t.rows() != p.rows() || t.cols() != p.cols()) throw ShapeError("metric inputs differ in shape");
    if (t.size() == 0) throw InvalidInput("metric inputs are empty");
}

}  // namespace

double mae(const Matrix& y_true, const Matrix& y_pred) {
    check(y_true, y_pred);
    return (y_true - y_pred).cwiseAbs().sum() / static_cast<double>(y_true.size());
}

double mse(const Matrix& y_true, const Matrix& y_pred) {
    check(y_true, y_pred);
    return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
}

double rmse(const Matrix& y_true, const Matrix& y_pred) { return std::sqrt(mse(y_true, y_pred)); }

double r2(const Matrix& y_true, const Matrix& y_pred) {
    check(y_true, y_pred);
    const double mean = y_true.mean();
    const double ss_tot = (y_true.array() - mean).square().sum();
    if (!(ss_tot > 0.0)) throw InvalidInput("degenerate targets");
    return 1.0 - (y_true - y_pred).squaredNorm() / ss_tot;
}

MetricReport evaluate(const Matrix& y_true, const Matrix& y_pred) {
    MetricReport r;
    r.mae = mae(y_true, y_pred);
    r.rmse = rmse(y_true, y_pred);
    try {
        r.r2 = r2(y_true, y_pred);
    } catch (const InvalidInput&) {
        r.r2 = std::numeric_limits<double>::quiet_NaN();
    }
    r.n = static_cast<std::size_t>(y_true.size());
    return r;
}

std::vector<LabeledReport> metric_rows(const std::string& split, const Matrix& y_true, const Matrix& y_pred,
                                       const std::vector<std::string>& target_names) {
    check(y_true, y_pred);
    if (static_cast<Eigen::Index>(target_names.size()) != y_true.cols()) {
        throw ShapeError("target name count does not match target columns");
    }
    std::vector<LabeledReport> rows;
    rows.push_back({split, y_true.cols() == 1 ? target_names[0] : "all", evaluate(y_true, y_pred)});
    if (y_true.cols() > 1) {
        for (Eigen::Index c = 0; c < y_true.cols(); ++c) {
            rows.push_back({split, target_names[static_cast<std::size_t>(c)],
                            evaluate(y_true.col(c), y_pred.col(c))});
        }
    }
    return rows;
}

void write_metric_csv(std::ostream& out, const std::vector<LabeledReport>& rows) {
    out << kMetricCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.split << ',' << r.target << ',' << text::format_double(r.metrics.mae) << ','
            << text::format_double(r.metrics.rmse) << ',' << text::format_double(r.metrics.r2) << ',' << r.metrics.n
            << '\n';
    }
}

}  // namespace brann
