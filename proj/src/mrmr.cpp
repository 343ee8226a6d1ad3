#include "brann/mrmr.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "brann/text.hpp"

namespace brann {

std::vector<int> discretize(const Vector& column, int bins) {
    const auto n = static_cast<std::size_t>(column.size());
    if (bins < 2) throw InvalidInput("bins must be >= 2");
    if (static_cast<std::size_t>(bins) > n) throw InvalidInput("bins exceeds sample count");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return column[a] < column[b]; });
    std::vector<int> labels(n);
    std::size_t tie_rank = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (r > 0 && column[idx[r]] != column[idx[r - 1]]) tie_rank = r;
        labels[idx[r]] = static_cast<int>(tie_rank * static_cast<std::size_t>(bins) / n);
    }
    return labels;
}

int default_bins(std::size_t n) {
    return std::max(2, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))));
}

double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ShapeError("label vectors differ in length");
    if (a.empty()) throw InvalidInput("mutual information of empty labels");
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> pa, pb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        pa[a[i]] += 1.0;
        pb[b[i]] += 1.0;
    }
    const double n = static_cast<double>(a.size());
    double mi = 0.0;
    for (const auto& [key, c] : joint) {
        mi += c / n * std::log(c * n / (pa[key.first] * pb[key.second]));
    }
    return std::max(0.0, mi);
}

double entropy(const std::vector<int>& a) { return mutual_information(a, a); }

MrmrRanking rank_features(const Matrix& X, const Vector& y, std::optional<int> bins, MrmrCriterion criterion) {
    if (X.rows() != y.size()) throw ShapeError("feature rows and target length differ");
    const auto d = static_cast<std::size_t>(X.cols());
    if (d == 0) throw InvalidInput("no features to rank");
    const int b = bins.value_or(default_bins(static_cast<std::size_t>(X.rows())));

    const auto ly = discretize(y, b);
    if (std::all_of(ly.begin(), ly.end(), [&](int v) { return v == ly[0]; })) {
        throw InvalidInput("degenerate target: single label");
    }
    std::vector<std::vector<int>> lx(d);
    for (std::size_t f = 0; f < d; ++f) lx[f] = discretize(X.col(static_cast<Eigen::Index>(f)), b);

    MrmrRanking out;
    out.relevance.resize(d);
    for (std::size_t f = 0; f < d; ++f) out.relevance[f] = mutual_information(lx[f], ly);
    const double total = std::accumulate(out.relevance.begin(), out.relevance.end(), 0.0);
    out.weights.resize(d);
    for (std::size_t f = 0; f < d; ++f) out.weights[f] = total > 0.0 ? out.relevance[f] / total : 1.0 / d;
    out.scores.assign(d, 0.0);

    std::vector<double> redundancy(d, 0.0);  // running sum over selected
    std::vector<bool> taken(d, false);
    for (std::size_t step = 0; step < d; ++step) {
        std::size_t best = d;
        double best_score = 0.0;
        for (std::size_t f = 0; f < d; ++f) {
            if (taken[f]) continue;
            double score = out.relevance[f];
            if (step > 0) {
                const double mean_red = redundancy[f] / static_cast<double>(step);
                score = criterion == MrmrCriterion::difference
                            ? out.relevance[f] - mean_red
                            : out.relevance[f] / std::max(mean_red, 1e-12);
            }
            if (best == d || score > best_score) {
                best = f;
                best_score = score;
            }
        }
        taken[best] = true;
        out.order.push_back(best);
        out.scores[best] = best_score;
        for (std::size_t f = 0; f < d; ++f) {
            if (!taken[f]) redundancy[f] += mutual_information(lx[f], lx[best]);
        }
    }
    return out;
}

void write_ranking_csv(std::ostream& out, const MrmrRanking& ranking, const std::vector<std::string>& names) {
    if (names.size() != ranking.order.size()) throw ShapeError("feature name count does not match ranking");
    out << "rank,feature,score,weight\n";
    for (std::size_t r = 0; r < ranking.order.size(); ++r) {
        const auto f = ranking.order[r];
        out << r + 1 << ',' << names[f] << ',' << text::format_double(ranking.scores[f]) << ','
            << text::format_double(ranking.weights[f]) << '\n';
    }
}

}  // namespace brann
