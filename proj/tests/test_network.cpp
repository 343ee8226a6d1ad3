#include <doctest.h>

#include <limits>

#include "brann/network.hpp"
#include "brann/random.hpp"
#include "support.hpp"

using namespace brann;
using brann::testing::numeric_gradient;
using brann::testing::random_matrix;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Network random_network(Rng& rng, const std::vector<int>& sizes, TransferKind hidden) {
    NetworkLayout layout;
    layout.layer_sizes = sizes;
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        layout.transfers.push_back(i + 1 == sizes.size() ? TransferKind::purelin : hidden);
    }
    ParamVector w(layout.parameter_count());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
    return Network::from_params(layout, w);
}

}  // namespace

TEST_CASE("transfer_apply examples") {
    CHECK(transfer_apply(TransferKind::tansig, vec({0.0}))[0] == 0.0);
    const auto p = transfer_apply(TransferKind::purelin, vec({-3.5, 2.0}));
    CHECK(p[0] == -3.5);
    CHECK(p[1] == 2.0);
    const auto e = transfer_apply(TransferKind::elliotsig, vec({1.0, -1.0}));
    CHECK(e[0] == 0.5);
    CHECK(e[1] == -0.5);
    const auto c = transfer_apply(TransferKind::compet, vec({0.2, 0.9, 0.1}));
    CHECK(c == vec({0.0, 1.0, 0.0}));
}

TEST_CASE("transfer definitions follow the standard catalog") {
    const Vector z = vec({-2.0, -0.5, 0.0, 0.5, 2.0});
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double x = z[i];
        CHECK(transfer_apply(TransferKind::tansig, z)[i] == doctest::Approx(2.0 / (1.0 + std::exp(-2.0 * x)) - 1.0));
        CHECK(transfer_apply(TransferKind::logsig, z)[i] == doctest::Approx(1.0 / (1.0 + std::exp(-x))));
        CHECK(transfer_apply(TransferKind::poslin, z)[i] == std::max(0.0, x));
        CHECK(transfer_apply(TransferKind::satlin, z)[i] == std::clamp(x, 0.0, 1.0));
        CHECK(transfer_apply(TransferKind::hardlim, z)[i] == (x >= 0.0 ? 1.0 : 0.0));
        CHECK(transfer_apply(TransferKind::tribas, z)[i] == std::max(0.0, 1.0 - std::abs(x)));
        CHECK(transfer_apply(TransferKind::radbas, z)[i] == doctest::Approx(std::exp(-x * x)));
    }
}

TEST_CASE("compet ties go to the lowest index and output sums to one") {
    CHECK(transfer_apply(TransferKind::compet, vec({0.5, 0.5, 0.1})) == vec({1.0, 0.0, 0.0}));
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        Vector z = random_matrix(rng, 6, 1, -3, 3).col(0);
        const auto c = transfer_apply(TransferKind::compet, z);
        CHECK(c.sum() == 1.0);
        CHECK((c.array() != 0.0).count() == 1);
    }
}

TEST_CASE("transfer functions reject non-finite input") {
    for (auto kind : kAllTransfers) {
        CHECK_THROWS_AS(transfer_apply(kind, vec({std::numeric_limits<double>::quiet_NaN()})), InvalidInput);
        CHECK_THROWS_AS(transfer_derivative(kind, vec({std::numeric_limits<double>::infinity()})), InvalidInput);
    }
}

TEST_CASE("transfer_derivative examples and kinks") {
    CHECK(transfer_derivative(TransferKind::tansig, vec({0.0}))[0] == 1.0);
    CHECK(transfer_derivative(TransferKind::purelin, vec({7.0}))[0] == 1.0);
    CHECK(transfer_derivative(TransferKind::logsig, vec({0.0}))[0] == 0.25);
    CHECK(transfer_derivative(TransferKind::poslin, vec({0.0}))[0] == 1.0);
    CHECK(transfer_derivative(TransferKind::satlin, vec({0.0}))[0] == 1.0);
    CHECK(transfer_derivative(TransferKind::satlin, vec({1.0}))[0] == 0.0);
    CHECK(transfer_derivative(TransferKind::tribas, vec({0.0}))[0] == -1.0);
    CHECK(transfer_derivative(TransferKind::tribas, vec({-1.0}))[0] == 1.0);
    CHECK(transfer_derivative(TransferKind::hardlim, vec({0.3}))[0] == 0.0);
    CHECK(transfer_derivative(TransferKind::compet, vec({0.3, 0.1}))[1] == 0.0);
}

TEST_CASE("analytic derivatives match central differences at 1000 random points") {
    Rng rng(11);
    for (auto kind : kAllTransfers) {
        if (!is_differentiable(kind) || kind == TransferKind::compet) continue;
        for (int t = 0; t < 1000; ++t) {
            double x = rng.uniform(-3.0, 3.0);
            // Stay clear of the kinks of the piecewise-linear functions.
            if (std::abs(x) < 1e-3 || std::abs(x - 1.0) < 1e-3 || std::abs(x + 1.0) < 1e-3) x += 0.01;
            const double h = 1e-6;
            const double fd = (transfer_apply(kind, vec({x + h}))[0] - transfer_apply(kind, vec({x - h}))[0]) / (2 * h);
            const double an = transfer_derivative(kind, vec({x}))[0];
            CHECK(std::abs(an - fd) / (1.0 + std::abs(an)) < 1e-7);
        }
    }
}

TEST_CASE("layout validation and parameter count") {
    CHECK(NetworkLayout::single_hidden(20, 32, 1, TransferKind::tansig).parameter_count() == 21 * 32 + 33);
    NetworkLayout bad{{1, 0, 1}, {TransferKind::tansig, TransferKind::purelin}};
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    NetworkLayout short_transfers{{1, 2, 1}, {TransferKind::tansig}};
    CHECK_THROWS(short_transfers.validate());
    NetworkLayout single{{3}, {}};
    CHECK_THROWS(single.validate());
    CHECK_THROWS(init_weights(bad, 1));
    CHECK(NetworkLayout::single_hidden(1, 50, 1, TransferKind::tansig).shape_string() == "1-50-1");
}

TEST_CASE("init_weights is seeded") {
    const auto layout = NetworkLayout::single_hidden(1, 2, 1, TransferKind::tansig);
    CHECK(init_weights(layout, 42).flatten() == init_weights(layout, 42).flatten());
    CHECK(init_weights(layout, 42).flatten() != init_weights(layout, 43).flatten());
}

TEST_CASE("Nguyen-Widrow scaling of hidden rows") {
    const auto layout = NetworkLayout::single_hidden(3, 10, 2, TransferKind::tansig);
    const auto net = init_weights(layout, 7);
    const double scale = 0.7 * std::pow(10.0, 1.0 / 3.0);
    for (Eigen::Index r = 0; r < 10; ++r) CHECK(net.weights()[0].row(r).norm() == doctest::Approx(scale));
    CHECK(net.weights()[1].cwiseAbs().maxCoeff() <= 0.5);
}

TEST_CASE("flatten round-trips exactly in canonical order") {
    const auto layout = NetworkLayout::single_hidden(2, 3, 1, TransferKind::tansig);
    ParamVector w(layout.parameter_count());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = 0.1 * static_cast<double>(i) - 0.77;
    const auto net = Network::from_params(layout, w);
    CHECK(net.flatten() == w);
    // Layer 0: W row-major (3x2) then b (3).
    CHECK(net.weights()[0](0, 1) == w[1]);
    CHECK(net.weights()[0](1, 0) == w[2]);
    CHECK(net.biases()[0][0] == w[6]);
    CHECK(net.weights()[1](0, 2) == w[11]);
    CHECK(net.biases()[1][0] == w[12]);
    CHECK_THROWS_AS(Network::from_params(layout, ParamVector::Zero(5)), ShapeError);
    ParamVector nan = w;
    nan[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(Network::from_params(layout, nan));
}

TEST_CASE("forward examples") {
    NetworkLayout lin{{1, 1}, {TransferKind::purelin}};
    const auto net = Network::from_params(lin, vec({2.0, 1.0}));
    CHECK(forward(net, Matrix::Constant(1, 1, 3.0))(0, 0) == 7.0);
    CHECK(forward(net, Matrix(0, 1)).rows() == 0);
    const auto tn = Network::from_params(NetworkLayout::single_hidden(1, 1, 1, TransferKind::tansig),
                                         vec({1.0, 0.0, 1.0, 0.0}));
    CHECK(forward(tn, Matrix::Zero(1, 1))(0, 0) == 0.0);
    CHECK_THROWS_AS(forward(net, Matrix::Zero(2, 3)), ShapeError);
}

TEST_CASE("forward is batch consistent") {
    Rng rng(3);
    const auto net = random_network(rng, {3, 5, 2}, TransferKind::tansig);
    const Matrix X = random_matrix(rng, 9, 3);
    const Matrix batch = forward(net, X);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Matrix one = forward(net, X.row(i));
        CHECK((one.row(0) - batch.row(i)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("gradient examples") {
    NetworkLayout lin{{1, 1}, {TransferKind::purelin}};
    const auto net = Network::from_params(lin, vec({2.0, 1.0}));
    const Matrix X = Matrix::Constant(1, 1, 3.0);
    const Matrix Y = forward(net, X);
    CHECK(gradient(net, X, Y, 1.0, 0.0).norm() == 0.0);
    const auto g = gradient(net, X, Matrix::Constant(1, 1, -4.0), 0.0, 0.3);
    CHECK(g[0] == doctest::Approx(2 * 0.3 * 2.0));
    CHECK(g[1] == doctest::Approx(2 * 0.3 * 1.0));
}

TEST_CASE("gradient and jacobian match finite differences on random nets") {
    Rng rng(2024);
    const std::vector<std::vector<int>> shapes{{2, 3, 1}, {2, 2, 1}, {4, 8, 8, 2}, {3, 4, 2}};
    const TransferKind kinds[] = {TransferKind::tansig, TransferKind::logsig, TransferKind::elliotsig,
                                  TransferKind::purelin, TransferKind::radbas};
    const std::pair<double, double> ab[] = {{0.0, 1.0}, {1.0, 0.0}, {0.3, 0.7}};
    for (const auto& shape : shapes) {
        for (auto kind : kinds) {
            const auto net = random_network(rng, shape, kind);
            const Matrix X = random_matrix(rng, 5, shape.front());
            const Matrix Y = random_matrix(rng, 5, shape.back());
            const ParamVector w = net.flatten();
            for (const auto& [alpha, beta] : ab) {
                auto f = [&](const Vector& p) {
                    const auto n = net.with_params(p);
                    return beta * (forward(n, X) - Y).squaredNorm() + alpha * p.squaredNorm();
                };
                const Vector fd = numeric_gradient(f, w);
                const Vector an = gradient(net, X, Y, beta, alpha);
                CHECK((an - fd).norm() / std::max(1.0, fd.norm()) < 1e-6);
            }
            const Matrix J = jacobian(net, X);
            const auto m = static_cast<Eigen::Index>(shape.back());
            REQUIRE(J.rows() == X.rows() * m);
            REQUIRE(J.cols() == w.size());
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                for (Eigen::Index j = 0; j < m; ++j) {
                    auto out = [&](const Vector& p) { return forward(net.with_params(p), X.row(i))(0, j); };
                    const Vector fd = numeric_gradient(out, w);
                    CHECK((J.row(i * m + j).transpose() - fd).norm() / std::max(1.0, fd.norm()) < 1e-6);
                }
            }
        }
    }
}

TEST_CASE("jacobian examples and chain-rule identity") {
    NetworkLayout lin{{1, 1}, {TransferKind::purelin}};
    const auto net = Network::from_params(lin, vec({0.4, -0.2}));
    const Matrix J = jacobian(net, Matrix::Constant(1, 1, 2.5));
    CHECK(J(0, 0) == 2.5);
    CHECK(J(0, 1) == 1.0);

    Rng rng(8);
    const auto big = random_network(rng, {3, 4, 2}, TransferKind::tansig);
    const Matrix X = random_matrix(rng, 6, 3);
    const Matrix Y = random_matrix(rng, 6, 2);
    // J' (Y - forward) = -1/2 dSSE/dw
    const Vector lhs = jacobian(big, X).transpose() * (-stacked_residuals(forward(big, X), Y));
    const Vector rhs = -0.5 * gradient(big, X, Y, 1.0, 0.0);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("non-differentiable transfers give zero jacobian columns upstream") {
    Rng rng(9);
    const auto net = random_network(rng, {2, 3, 1}, TransferKind::hardlim);
    const Matrix J = jacobian(net, random_matrix(rng, 4, 2));
    CHECK(J.leftCols(9).cwiseAbs().maxCoeff() == 0.0);  // first-layer W and b
}

TEST_CASE("transfer names round-trip") {
    for (auto kind : kAllTransfers) CHECK(parse_transfer(to_string(kind)) == kind);
    CHECK_THROWS_AS(parse_transfer("softmax"), InvalidInput);
    CHECK(std::size(kAllTransfers) == 10);
}
