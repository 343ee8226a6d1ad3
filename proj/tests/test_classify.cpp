#include <doctest.h>

#include <sstream>

#include "brann/classify.hpp"
#include "brann/errors.hpp"
#include "brann/random.hpp"

using namespace brann;

namespace {

/// predicted/truth vectors with the given confusion counts.
void append(std::vector<Condition>& pred, std::vector<Condition>& truth, Condition t, std::size_t right,
            std::size_t wrong) {
    const Condition other = t == Condition::broken ? Condition::unbroken : Condition::broken;
    for (std::size_t i = 0; i < right; ++i) {
        pred.push_back(t);
        truth.push_back(t);
    }
    for (std::size_t i = 0; i < wrong; ++i) {
        pred.push_back(other);
        truth.push_back(t);
    }
}

}  // namespace

TEST_CASE("threshold rule") {
    const auto th = ConditionThreshold::maximum();
    CHECK(classify_condition(0.7, th).label == Condition::broken);
    CHECK(classify_condition(0.6, th).label == Condition::unbroken);
    CHECK(classify_condition(0.59, th).label == Condition::unbroken);
    const auto neg = classify_condition(-0.05, th);
    CHECK(neg.label == Condition::unbroken);
    CHECK(neg.negative_prediction);
    CHECK_FALSE(classify_condition(0.1, th).negative_prediction);

    CHECK(ConditionThreshold::preset("max").vb_max_mm == 0.6);
    CHECK(ConditionThreshold::preset("iso_average").vb_max_mm == 0.3);
    CHECK(classify_condition(0.35, ConditionThreshold::iso_average()).label == Condition::broken);
    CHECK_THROWS_AS(ConditionThreshold::preset("median"), InvalidInput);
    CHECK_THROWS_AS(ConditionThreshold(0.0), InvalidInput);
    CHECK_THROWS_AS(ConditionThreshold(std::nan("")), InvalidInput);
    CHECK(parse_condition(to_string(Condition::broken)) == Condition::broken);
}

TEST_CASE("classification is monotone in the prediction") {
    Rng rng(3);
    const ConditionThreshold th(0.42);
    for (int t = 0; t < 1000; ++t) {
        const double a = rng.uniform(-0.2, 1.2);
        const double b = a + rng.uniform(0.0, 0.5);
        if (classify_condition(a, th).label == Condition::broken) CHECK(classify_condition(b, th).label == Condition::broken);
    }
}

TEST_CASE("confusion-count accuracies") {
    std::vector<Condition> pred, truth;
    append(pred, truth, Condition::broken, 3, 1);
    append(pred, truth, Condition::unbroken, 8, 3);
    const auto r = classification_report(pred, truth);
    CHECK(r.broken.accuracy() == doctest::Approx(0.75));
    CHECK(r.unbroken.accuracy() * 100.0 == doctest::Approx(72.73).epsilon(1e-4));
    CHECK(r.overall.accuracy() * 100.0 == doctest::Approx(73.33).epsilon(1e-4));
    CHECK(r.overall.total == 15);
    CHECK(r.overall.correct == 11);
}

TEST_CASE("overall accuracy is the count-weighted class mean") {
    Rng rng(17);
    for (int t = 0; t < 200; ++t) {
        std::vector<Condition> pred, truth;
        append(pred, truth, Condition::broken, rng.below(6), rng.below(6));
        append(pred, truth, Condition::unbroken, rng.below(6), rng.below(6));
        if (truth.empty()) continue;
        const auto r = classification_report(pred, truth);
        double weighted = 0.0;
        for (const auto* c : {&r.broken, &r.unbroken}) {
            if (c->total) weighted += c->accuracy() * static_cast<double>(c->total);
            CHECK(c->accuracy() >= 0.0);
            CHECK(c->accuracy() <= 1.0);
        }
        CHECK(std::abs(weighted / static_cast<double>(truth.size()) - r.overall.accuracy()) < 1e-12);
    }
    CHECK_THROWS(classification_report({Condition::broken}, {}));
}

TEST_CASE("classification CSV") {
    std::ostringstream out;
    write_classification_csv(out, {0.7, 0.2}, {Condition::broken, Condition::unbroken},
                             std::vector<Condition>{Condition::broken, Condition::broken});
    CHECK(out.str() == "sample,vb_pred_mm,label_pred,label_true,correct\n1,0.7,broken,broken,1\n2,0.2,unbroken,broken,0\n");
    std::ostringstream bare;
    write_classification_csv(bare, {0.7}, {Condition::broken}, std::nullopt);
    CHECK(bare.str() == "sample,vb_pred_mm,label_pred,label_true,correct\n1,0.7,broken,,\n");
}
