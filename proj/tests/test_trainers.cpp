#include <doctest.h>

#include <cmath>
#include <sstream>

#include "brann/benchmark.hpp"
#include "brann/data.hpp"
#include "brann/metrics.hpp"
#include "brann/random.hpp"
#include "brann/trainers.hpp"
#include "support.hpp"

using namespace brann;
using brann::testing::random_matrix;

namespace {

struct Affine {
    Matrix X, Y;
};

Affine affine_data() {
    Affine d;
    d.X.resize(12, 1);
    d.Y.resize(12, 1);
    for (int i = 0; i < 12; ++i) {
        d.X(i, 0) = -1.0 + 2.0 * i / 11.0;
        d.Y(i, 0) = 0.8 * d.X(i, 0) - 0.3;
    }
    return d;
}

NetworkLayout linear_layout() { return NetworkLayout{{1, 1}, {TransferKind::purelin}}; }

TrainingConfig config(AlgorithmKind kind, int epochs) {
    TrainingConfig c;
    c.algorithm = kind;
    c.max_epochs = epochs;
    return c;
}

/// f(w) = 1/2 w'Aw - b'w
struct Quadratic {
    Matrix A;
    Vector b;
    ObjectiveFn fn() const {
        return [this](const Vector& w, Vector* g) {
            if (g) *g = A * w - b;
            return 0.5 * w.dot(A * w) - b.dot(w);
        };
    }
};

Quadratic spd_quadratic() {
    Quadratic q;
    q.A.resize(3, 3);
    q.A << 4, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 2;
    q.b.resize(3);
    q.b << 1, -2, 0.5;
    return q;
}

}  // namespace

TEST_CASE("algorithm names") {
    CHECK(std::size(kAllAlgorithms) == 11);
    for (auto a : kAllAlgorithms) CHECK(parse_algorithm(to_string(a)) == a);
    CHECK(parse_algorithm("trainml") == AlgorithmKind::trainlm);
    CHECK_THROWS_AS(parse_algorithm("adam"), InvalidInput);
}

TEST_CASE("config validation") {
    TrainingConfig c;
    CHECK_NOTHROW(c.validate());
    c.max_epochs = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = TrainingConfig{};
    c.gd.learning_rate = -1.0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = TrainingConfig{};
    c.stop.plateau_epochs = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("one epoch gives one trace row for every algorithm") {
    const auto d = affine_data();
    const auto net = init_weights(NetworkLayout::single_hidden(1, 3, 1, TransferKind::tansig), 1);
    for (auto a : kAllAlgorithms) {
        const auto r = train(net, d.X, d.Y, config(a, 1));
        CHECK(r.trace.rows.size() == 1);
        CHECK(r.trace.rows[0].epoch == 1);
    }
}

TEST_CASE("trainlm fits exact affine data") {
    const auto d = affine_data();
    const auto r = train(init_weights(linear_layout(), 3), d.X, d.Y, config(AlgorithmKind::trainlm, 50));
    CHECK(rmse(d.Y, forward(r.network, d.X)) < 1e-8);
    CHECK(r.trace.rows.size() <= 50);
}

TEST_CASE("lm_step examples") {
    const Matrix J = Matrix::Ones(1, 1);
    const Vector r = Vector::Constant(1, 2.0);
    // mu = 0 is singular-free here since J'J = 1.
    const auto d = lm_step(J, r, ParamVector::Zero(1), 0.0, 0.0, 1.0);
    REQUIRE(d);
    CHECK((*d)[0] == doctest::Approx(-2.0));

    Rng rng(2);
    const Matrix Jr = random_matrix(rng, 8, 5);
    const Vector rr = random_matrix(rng, 8, 1).col(0);
    const ParamVector w = random_matrix(rng, 5, 1).col(0);
    const Vector grad = 2.0 * Jr.transpose() * rr;
    const auto big = lm_step(Jr, rr, w, 1e12, 0.0, 1.0);
    REQUIRE(big);
    CHECK(big->norm() < 1e-9 * grad.norm());
    double prev = std::numeric_limits<double>::infinity();
    for (double mu : {1e-2, 1e0, 1e2, 1e4, 1e6}) {
        const double n = lm_step(Jr, rr, w, mu, 0.0, 1.0)->norm();
        CHECK(n < prev);
        prev = n;
    }
}

TEST_CASE("lm_step matches a dense inverse") {
    Rng rng(77);
    for (int t = 0; t < 30; ++t) {
        const auto k = static_cast<Eigen::Index>(1 + rng.below(50));
        const auto n = static_cast<Eigen::Index>(1 + rng.below(60));
        const Matrix J = random_matrix(rng, n, k);
        const Vector r = random_matrix(rng, n, 1).col(0);
        const ParamVector w = random_matrix(rng, k, 1).col(0);
        const double mu = rng.uniform(1e-3, 2.0), alpha = rng.uniform(0.0, 1.0), beta = rng.uniform(0.1, 2.0);
        const Matrix A = 2 * beta * J.transpose() * J + (2 * alpha + mu) * Matrix::Identity(k, k);
        const Vector expect = -A.inverse() * (2 * beta * J.transpose() * r + 2 * alpha * w);
        const auto got = lm_step(J, r, w, mu, alpha, beta);
        REQUIRE(got);
        CHECK((*got - expect).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("trainbr epoch takes the LM step on F") {
    Rng rng(5);
    const auto net = init_weights(NetworkLayout::single_hidden(2, 4, 1, TransferKind::tansig), 9);
    const Matrix X = random_matrix(rng, 15, 2);
    const Matrix Y = random_matrix(rng, 15, 1);
    BayesState s;
    s.alpha = 0.3;
    s.beta = 2.0;
    const double mu = 1.0;
    const auto r = trainbr_epoch(net, X, Y, s, mu, LmSchedule{}, 1e10);
    REQUIRE(r.accepted);
    REQUIRE(r.mu == doctest::Approx(mu / 10.0));  // accepted on the first try
    const auto expect = lm_step(jacobian(net, X), stacked_residuals(forward(net, X), Y), net.flatten(), mu, 0.3, 2.0);
    REQUIRE(expect);
    CHECK((r.step - *expect).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(r.objective_after < r.objective_before);
}

TEST_CASE("trainbr invariants on a noiseless linear fit") {
    const auto d = affine_data();
    const auto r = train(init_weights(linear_layout(), 4), d.X, d.Y, config(AlgorithmKind::trainbr, 200));
    for (const auto& row : r.trace.rows) {
        CHECK(row.gamma >= 0.0);
        CHECK(row.gamma <= 2.0);
        if (row.accepted) CHECK(row.objective <= row.objective_before);
    }
    CHECK(std::abs(r.trace.rows.back().gamma - 2.0) <= 0.5);
}

TEST_CASE("log evidence rises over a trainbr run on noiseless linear data") {
    const auto d = affine_data();
    Affine noisy = d;
    Rng rng(3);
    for (Eigen::Index i = 0; i < noisy.Y.rows(); ++i) noisy.Y(i, 0) += 1e-3 * rng.normal();
    const auto r = train(init_weights(linear_layout(), 4), noisy.X, noisy.Y, config(AlgorithmKind::trainbr, 100));
    std::vector<double> ev;
    for (const auto& row : r.trace.rows) {
        if (row.log_evidence) ev.push_back(*row.log_evidence);
    }
    REQUIRE(ev.size() >= 3);
    CHECK(ev.back() > ev.front());
}

TEST_CASE("trainbr suppresses parameters on pure noise") {
    Rng rng(21);
    Matrix X(40, 1), Y(40, 1);
    for (int i = 0; i < 40; ++i) {
        X(i, 0) = rng.uniform(-1.0, 1.0);
        Y(i, 0) = rng.normal();
    }
    const auto layout = NetworkLayout::single_hidden(1, 20, 1, TransferKind::tansig);
    const auto r = train(init_weights(layout, 2), X, Y, config(AlgorithmKind::trainbr, 500));
    CHECK(r.trace.rows.back().gamma < 0.2 * static_cast<double>(layout.parameter_count()));
}

TEST_CASE("every stop reason is reachable") {
    const auto d = affine_data();
    SUBCASE("max_epochs") {
        const auto r = train(init_weights(linear_layout(), 1), d.X, d.Y, config(AlgorithmKind::trainbr, 2));
        CHECK(r.trace.stop_reason == StopReason::max_epochs);
    }
    SUBCASE("grad_tol") {
        auto c = config(AlgorithmKind::trainlm, 200);
        c.stop.plateau_epochs = 1000;
        const auto r = train(init_weights(linear_layout(), 1), d.X, d.Y, c);
        CHECK(r.trace.stop_reason == StopReason::grad_tol);
    }
    SUBCASE("mu_max") {
        Vector w(2);
        w << 0.8, -0.3;
        const auto exact = Network::from_params(linear_layout(), w);
        const auto r = train(exact, d.X, d.Y, config(AlgorithmKind::trainlm, 50));
        CHECK(r.trace.stop_reason == StopReason::mu_max);
    }
    SUBCASE("plateau") {
        auto c = config(AlgorithmKind::traingdm, 500);
        c.stop.plateau_rel_tol = 0.5;
        const auto r = train(init_weights(linear_layout(), 1), d.X, d.Y, c);
        CHECK(r.trace.stop_reason == StopReason::plateau);
        CHECK(r.trace.rows.size() == 5);
    }
}

TEST_CASE("non-finite objective aborts with the partial trace") {
    const auto d = affine_data();
    auto c = config(AlgorithmKind::traingdm, 50);
    c.gd.learning_rate = 1e300;
    c.gd.momentum = 0.0;
    try {
        train(init_weights(NetworkLayout::single_hidden(1, 3, 1, TransferKind::purelin), 1), d.X, d.Y, c);
        FAIL("expected TrainingAbortedError");
    } catch (const TrainingAbortedError& e) {
        CHECK_FALSE(e.trace().rows.empty());
    }
}

TEST_CASE("training is bitwise deterministic for every algorithm") {
    const auto b = make_sine_benchmark(3, 30, 5);
    const auto net = init_weights(NetworkLayout::single_hidden(1, 6, 1, TransferKind::tansig), 3);
    for (auto a : kAllAlgorithms) {
        const auto r1 = train(net, b.x_train, b.y_train, config(a, 40));
        const auto r2 = train(net, b.x_train, b.y_train, config(a, 40));
        CHECK(r1.network.flatten() == r2.network.flatten());
        std::ostringstream t1, t2;
        r1.trace.write_csv(t1);
        r2.trace.write_csv(t2);
        CHECK(t1.str() == t2.str());
    }
}

TEST_CASE("trace CSV format") {
    const auto d = affine_data();
    const auto r = train(init_weights(linear_layout(), 1), d.X, d.Y, config(AlgorithmKind::trainbr, 3));
    std::ostringstream out;
    r.trace.write_csv(out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,objective,sse,ssw,alpha,beta,gamma,mu,grad_norm");
    std::ostringstream side;
    r.trace.write_sidecar(side, config(AlgorithmKind::trainbr, 3));
    CHECK(side.str().find("stop_reason = max_epochs") != std::string::npos);
    CHECK(side.str().find("algorithm = trainbr") != std::string::npos);
}

TEST_CASE("non-Bayesian algorithms never return worse than the best SSE seen") {
    const auto b = make_sine_benchmark(5, 30, 5);
    const auto net = init_weights(NetworkLayout::single_hidden(1, 8, 1, TransferKind::tansig), 5);
    for (auto a : kAllAlgorithms) {
        if (a == AlgorithmKind::trainbr) continue;
        const auto r = train(net, b.x_train, b.y_train, config(a, 60));
        double best = std::numeric_limits<double>::infinity();
        for (const auto& row : r.trace.rows) {
            if (row.accepted) best = std::min(best, row.sse);
        }
        CHECK(sum_squared_errors(r.network, b.x_train, b.y_train) <= best * (1 + 1e-12) + 1e-15);
    }
}

TEST_CASE("traingdm with zero momentum is plain gradient descent") {
    const auto q = spd_quadratic();
    TrainingConfig c;
    c.gd.momentum = 0.0;
    c.gd.learning_rate = 0.1;
    auto opt = make_first_order(AlgorithmKind::traingdm, c);
    Vector w = Vector::Ones(3);
    for (int i = 0; i < 4; ++i) {
        Vector g;
        const double f = q.fn()(w, &g);
        const auto s = opt->step(q.fn(), w, f, g);
        CHECK((s.w - (w - 0.1 * g)).cwiseAbs().maxCoeff() < 1e-15);
        w = s.w;
    }
}

TEST_CASE("Rprop steps depend only on gradient signs") {
    const auto q = spd_quadratic();
    Quadratic big = q;
    big.A *= 1000.0;
    big.b *= 1000.0;
    TrainingConfig c;
    auto a = make_first_order(AlgorithmKind::trainrp, c);
    auto b = make_first_order(AlgorithmKind::trainrp, c);
    Vector wa = Vector::Constant(3, 0.7), wb = wa;
    for (int i = 0; i < 10; ++i) {
        Vector ga, gb;
        const double fa = q.fn()(wa, &ga);
        const double fb = big.fn()(wb, &gb);
        wa = a->step(q.fn(), wa, fa, ga).w;
        wb = b->step(big.fn(), wb, fb, gb).w;
        CHECK((wa - wb).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("conjugate gradient terminates on a 3-d quadratic in 3 iterations") {
    const auto q = spd_quadratic();
    const Vector target = q.A.ldlt().solve(q.b);
    for (auto kind : {AlgorithmKind::traincgf, AlgorithmKind::traincgp, AlgorithmKind::traincgb}) {
        auto opt = make_first_order(kind, TrainingConfig{});
        Vector w = Vector::Zero(3);
        for (int i = 0; i < 3; ++i) {
            Vector g;
            const double f = q.fn()(w, &g);
            w = opt->step(q.fn(), w, f, g).w;
        }
        CHECK((w - target).norm() < 1e-8);
    }
}

TEST_CASE("BFGS and SCG make progress on a quadratic") {
    const auto q = spd_quadratic();
    const Vector target = q.A.ldlt().solve(q.b);
    for (auto kind : {AlgorithmKind::trainbfg, AlgorithmKind::trainscg}) {
        auto opt = make_first_order(kind, TrainingConfig{});
        Vector w = Vector::Zero(3);
        for (int i = 0; i < 20; ++i) {
            Vector g;
            const double f = q.fn()(w, &g);
            w = opt->step(q.fn(), w, f, g).w;
        }
        CHECK((w - target).norm() < 1e-6);
    }
}

TEST_CASE("Wolfe line search satisfies both conditions") {
    const auto q = spd_quadratic();
    const Vector w = Vector::Constant(3, 1.5);
    Vector g;
    const double f0 = q.fn()(w, &g);
    const Vector d = -g;
    const LineSearchParams p;
    const auto r = wolfe_line_search(q.fn(), w, f0, g, d, 1.0, p);
    REQUIRE(r.ok);
    CHECK(r.f <= f0 + p.sufficient_decrease * r.step * g.dot(d));
    CHECK(std::abs(r.g.dot(d)) <= p.curvature * std::abs(g.dot(d)));
}

TEST_CASE("datasets with missing cells are rejected") {
    Dataset ds;
    ds.X = Matrix::Constant(3, 1, std::numeric_limits<double>::quiet_NaN());
    ds.Y = Matrix::Zero(3, 1);
    ds.feature_names = {"a"};
    ds.feature_units = {""};
    ds.target_names = {"vb_mm"};
    ds.provenance = {{"c", 1}, {"c", 2}, {"c", 3}};
    CHECK_THROWS(train(init_weights(linear_layout(), 1), ds, TrainingConfig{}));
}
