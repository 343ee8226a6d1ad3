#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "brann/data.hpp"
#include "brann/metrics.hpp"
#include "brann/random.hpp"
#include "support.hpp"

using namespace brann;
using brann::testing::fixture;
using brann::testing::random_matrix;

namespace {

Matrix col(std::initializer_list<double> v) {
    Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    Eigen::Index i = 0;
    for (double x : v) m(i++, 0) = x;
    return m;
}

}  // namespace

TEST_CASE("metric examples") {
    const Matrix y = col({0.3, 0.1, 0.9});
    CHECK(mae(y, y) == 0.0);
    CHECK(rmse(y, y) == 0.0);
    CHECK(r2(y, y) == 1.0);

    CHECK(mae(col({0, 0, 0, 0}), col({1, 1, 1, 1})) == 1.0);
    CHECK(rmse(col({0, 0, 0, 0}), col({1, 1, 1, 1})) == 1.0);

    const Matrix t = col({1, 2, 3}), p = col({2, 2, 2});
    CHECK(mae(t, p) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(rmse(t, p) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    CHECK(std::abs(r2(t, p)) < 1e-15);
}

TEST_CASE("metric errors") {
    CHECK_THROWS_AS(mae(col({1, 2}), col({1})), ShapeError);
    CHECK_THROWS_AS(rmse(Matrix(0, 1), Matrix(0, 1)), InvalidInput);
    try {
        r2(col({2, 2, 2}), col({1, 2, 3}));
        FAIL("expected an error");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("degenerate targets") != std::string::npos);
    }
    CHECK(std::isnan(evaluate(col({2, 2}), col({1, 2})).r2));
}

TEST_CASE("golden fixture") {
    std::ifstream in(fixture("golden_predictions.csv"));
    std::string line;
    std::getline(in, line);
    std::vector<double> t, p;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        t.push_back(std::stod(line.substr(0, comma)));
        p.push_back(std::stod(line.substr(comma + 1)));
    }
    REQUIRE(t.size() == 5);
    const Matrix yt = Eigen::Map<const Matrix>(t.data(), 5, 1);
    const Matrix yp = Eigen::Map<const Matrix>(p.data(), 5, 1);

    std::ifstream ref(fixture("golden_metrics.txt"));
    std::map<std::string, double> expect;
    std::string key;
    double value = 0.0;
    while (ref >> key >> value) expect[key] = value;
    const auto rep = evaluate(yt, yp);
    CHECK(std::abs(rep.mae - expect.at("mae")) < 1e-12);
    CHECK(std::abs(rep.rmse - expect.at("rmse")) < 1e-12);
    CHECK(std::abs(rep.r2 - expect.at("r2")) < 1e-12);
    CHECK(rep.n == 5);
}

TEST_CASE("power-mean ordering and invariances") {
    Rng rng(14);
    for (int t = 0; t < 200; ++t) {
        const auto n = static_cast<Eigen::Index>(2 + rng.below(40));
        const auto m = static_cast<Eigen::Index>(1 + rng.below(3));
        const Matrix yt = random_matrix(rng, n, m, -3.0, 3.0);
        const Matrix yp = random_matrix(rng, n, m, -3.0, 3.0);
        const double a = mae(yt, yp), r = rmse(yt, yp);
        CHECK(a >= 0.0);
        CHECK(a <= r * (1 + 1e-15));

        const double c = rng.uniform(-100.0, 100.0);
        const Matrix st = yt.array() + c, sp = yp.array() + c;
        CHECK(std::abs(mae(st, sp) - a) < 1e-12);
        CHECK(std::abs(rmse(st, sp) - r) < 1e-12);

        double s = rng.uniform(0.1, 10.0);
        if (rng.below(2)) s = -s;
        const Matrix at = (yt * s).array() + c, ap = (yp * s).array() + c;
        const double base = r2(yt, yp);
        // relative: tiny target variance gives r2 of order -1e4
        CHECK(std::abs(r2(at, ap) - base) < 1e-10 * std::max(1.0, std::abs(base)));
    }
}

TEST_CASE("multi-target pooling and rows") {
    Matrix yt(2, 2), yp(2, 2);
    yt << 0.1, 0.2, 0.3, 0.5;
    yp << 0.1, 0.4, 0.2, 0.5;
    const auto rows = metric_rows("test", yt, yp, {"vb_flute1", "vb_flute2"});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].target == "all");
    CHECK(rows[0].metrics.n == 4);
    CHECK(rows[0].metrics.mae == doctest::Approx(0.3 / 4.0));
    CHECK(rows[1].target == "vb_flute1");
    CHECK(rows[1].metrics.mae == doctest::Approx(0.05));
    CHECK(rows[2].metrics.mae == doctest::Approx(0.1));

    const auto single = metric_rows("train", yt.col(0), yp.col(0), {"vb_mm"});
    REQUIRE(single.size() == 1);
    CHECK(single[0].target == "vb_mm");

    std::ostringstream out;
    write_metric_csv(out, rows);
    CHECK(out.str().rfind(std::string(kMetricCsvHeader) + "\n", 0) == 0);
    CHECK(out.str().find("test,vb_flute2,") != std::string::npos);
}
