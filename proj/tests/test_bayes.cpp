#include <doctest.h>

#include "brann/bayes.hpp"
#include "brann/metrics.hpp"
#include "brann/random.hpp"
#include "support.hpp"

using namespace brann;
using brann::testing::random_matrix;

TEST_CASE("regularized_loss examples") {
    NetworkLayout lin{{1, 1}, {TransferKind::purelin}};
    const auto zero = Network::from_params(lin, ParamVector::Zero(2));
    CHECK(regularized_loss(zero, Matrix::Ones(3, 1), Matrix::Zero(3, 1), BayesState{0.7, 1.3}) == 0.0);

    Vector w(2);
    w << 1.0, 2.0;
    const auto net = Network::from_params(lin, w);
    const Matrix X = Matrix::Zero(1, 1);  // output = bias = 2
    const Matrix Y = Matrix::Constant(1, 1, 1.0);
    BayesState s;
    s.alpha = 0.5;
    s.beta = 2.0;
    CHECK(regularized_loss(net, X, Y, s) == doctest::Approx(4.5));
    s.alpha = 0.0;
    CHECK(regularized_loss(net, X, Y, s) == 2.0 * sum_squared_errors(net, X, Y));
}

TEST_CASE("SSE over N equals the metrics MSE") {
    Rng rng(1);
    const auto net = init_weights(NetworkLayout::single_hidden(2, 4, 1, TransferKind::tansig), 3);
    const Matrix X = random_matrix(rng, 17, 2);
    const Matrix Y = random_matrix(rng, 17, 1);
    CHECK(std::abs(sum_squared_errors(net, X, Y) / 17.0 - mse(Y, forward(net, X))) < 1e-12);
}

TEST_CASE("update_hyperparameters hand example") {
    BayesState s;
    s.alpha = 1.0;
    s.beta = 1.0;
    s.ssw = 1.0;
    s.sse = 1.0;
    const auto u = update_hyperparameters(s, 0.25, 2, 10);
    CHECK(u.gamma == doctest::Approx(1.5));
    CHECK(u.alpha == doctest::Approx(0.75));
    CHECK(u.beta == doctest::Approx(4.25));
    CHECK_FALSE(u.clamped);
}

TEST_CASE("alpha = 0 gives gamma = k") {
    BayesState s;
    s.ssw = 3.0;
    s.sse = 2.0;
    CHECK(update_hyperparameters(s, 123.0, 7, 50).gamma == 7.0);
}

TEST_CASE("clamp paths") {
    BayesState s;
    s.alpha = 0.4;
    s.beta = 2.0;
    s.ssw = 0.0;
    s.sse = 0.0;
    auto u = update_hyperparameters(s, 0.1, 5, 10);
    CHECK(u.clamped);
    CHECK(u.alpha == 0.4);
    CHECK(u.beta == 2.0);

    // gamma would be negative
    s.ssw = 1.0;
    s.sse = 1.0;
    u = update_hyperparameters(s, 100.0, 5, 10);
    CHECK(u.gamma == 0.0);
    CHECK(u.alpha >= kAlphaMin);
    CHECK(u.clamped);

    // beta would be negative (more effective parameters than targets)
    s.alpha = 0.0;
    u = update_hyperparameters(s, 0.0, 50, 10);
    CHECK(u.beta == kBetaMin);
    CHECK(u.clamped);
}

TEST_CASE("gamma stays in [0, k] on random states") {
    Rng rng(4);
    for (int t = 0; t < 500; ++t) {
        BayesState s;
        s.alpha = rng.uniform(0.0, 5.0);
        s.beta = rng.uniform(1e-3, 5.0);
        s.ssw = rng.uniform(0.0, 3.0);
        s.sse = rng.uniform(0.0, 3.0);
        const auto k = static_cast<Eigen::Index>(1 + rng.below(30));
        const auto u = update_hyperparameters(s, rng.uniform(0.0, 10.0), k, 40);
        CHECK(u.gamma >= 0.0);
        CHECK(u.gamma <= static_cast<double>(k));
        CHECK(u.alpha >= kAlphaMin);
        CHECK(u.beta >= kBetaMin);
    }
}

TEST_CASE("Hessian summaries: dense and spectral agree with explicit inverse") {
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
        const auto n = static_cast<Eigen::Index>(1 + rng.below(12));
        const auto k = static_cast<Eigen::Index>(1 + rng.below(12));
        const Matrix J = random_matrix(rng, n, k);
        const double alpha = rng.uniform(0.05, 2.0), beta = rng.uniform(0.05, 3.0);
        const Matrix H = 2 * beta * J.transpose() * J + 2 * alpha * Matrix::Identity(k, k);
        const double tr = H.inverse().trace();
        const double ld = std::log(H.determinant());
        const auto d = hessian_summary_dense(J, alpha, beta);
        const auto s = GaussNewtonSpectrum(J).hessian_summary(alpha, beta);
        CHECK(d.trace_inverse == doctest::Approx(tr).epsilon(1e-9));
        CHECK(s.trace_inverse == doctest::Approx(tr).epsilon(1e-9));
        REQUIRE(d.log_det);
        REQUIRE(s.log_det);
        CHECK(*d.log_det == doctest::Approx(ld).epsilon(1e-9));
        CHECK(*s.log_det == doctest::Approx(ld).epsilon(1e-9));

        const Vector rhs = random_matrix(rng, k, 1).col(0);
        const double c = rng.uniform(0.01, 3.0);
        const Matrix A = 2 * beta * J.transpose() * J + c * Matrix::Identity(k, k);
        CHECK((GaussNewtonSpectrum(J).solve(rhs, beta, c) - A.inverse() * rhs).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("singular Hessian takes the jitter path") {
    const Matrix J = Matrix::Zero(3, 2);
    const auto d = hessian_summary_dense(J, 0.0, 1.0);
    CHECK(d.jittered);
    CHECK(d.log_det.has_value());
}

TEST_CASE("log_evidence") {
    BayesState s;
    s.alpha = 0.5;
    s.beta = 2.0;
    s.ssw = 1.5;
    s.sse = 0.25;
    const auto a = log_evidence(s, 3, 10, 1.2);
    const auto b = log_evidence(s, 3, 10, 1.2);
    REQUIRE(a);
    CHECK(*a == *b);
    const double expect = -(2.0 * 0.25 + 0.5 * 1.5) - 0.6 + 1.5 * std::log(1.0) + 5.0 * std::log(2.0 / M_PI);
    CHECK(*a == doctest::Approx(expect));
    CHECK_FALSE(log_evidence(s, 3, 10, std::nullopt).has_value());
    s.alpha = 0.0;
    CHECK_FALSE(log_evidence(s, 3, 10, 1.0).has_value());
    CHECK_THROWS_AS(log_evidence(s, 0, 10, 1.0), InvalidInput);
}
