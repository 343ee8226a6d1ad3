#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "brann/network.hpp"

namespace brann {

/// Equal-frequency labels: a value's bin is floor(rank * bins / N) where rank
/// is the position of its first occurrence in sorted order, so ties share the
/// lower bin. Throws when bins < 2 or bins > N.
std::vector<int> discretize(const Vector& column, int bins);

int default_bins(std::size_t n);

/// Plug-in estimate from the joint histogram, in nats.
double mutual_information(const std::vector<int>& a, const std::vector<int>& b);
double entropy(const std::vector<int>& a);

enum class MrmrCriterion { difference, quotient };

struct MrmrRanking {
    std::vector<std::size_t> order;
    std::vector<double> scores;     // per feature, score when it was selected
    std::vector<double> relevance;  // MI(feature, target)
    std::vector<double> weights;    // relevance / sum(relevance)
};

/// Greedy forward selection. The first pick maximizes relevance; later picks
/// maximize relevance minus (or divided by) mean redundancy with the already
/// selected features. Ties go to the lower index. Throws when y takes a single
/// label after discretization.
MrmrRanking rank_features(const Matrix& X, const Vector& y, std::optional<int> bins = std::nullopt,
                          MrmrCriterion criterion = MrmrCriterion::difference);

void write_ranking_csv(std::ostream& out, const MrmrRanking& ranking, const std::vector<std::string>& names);

}  // namespace brann
