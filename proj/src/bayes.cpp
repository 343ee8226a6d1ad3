#include "brann/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace brann {

double sum_squared_errors(const Network& net, const Matrix& X, const Matrix& Y) {
    const Matrix pred = forward(net, X);
    if (pred.rows() != Y.rows() || pred.cols() != Y.cols()) {
        throw ShapeError("targets do not match network output shape");
    }
    return (pred - Y).squaredNorm();
}

double sum_squared_weights(const ParamVector& w) { return w.squaredNorm(); }

double regularized_loss(const Network& net, const Matrix& X, const Matrix& Y, const BayesState& state) {
    const double sse = sum_squared_errors(net, X, Y);
    const double ssw = sum_squared_weights(net.flatten());
    return state.beta * sse + state.alpha * ssw;
}

BayesState update_hyperparameters(const BayesState& state, double hessian_trace_inverse,
                                  Eigen::Index k, Eigen::Index n_targets) {
    if (k <= 0) throw InvalidInput("parameter count must be positive");
    BayesState next = state;
    next.clamped = false;

    const double kd = static_cast<double>(k);
    double gamma = kd - 2.0 * state.alpha * hessian_trace_inverse;
    if (!(gamma >= 0.0)) {
        gamma = 0.0;
        next.clamped = true;
    } else if (gamma > kd) {
        gamma = kd;
        next.clamped = true;
    }
    next.gamma = gamma;

    if (state.ssw > 0.0) {
        next.alpha = gamma / (2.0 * state.ssw);
    } else {
        next.clamped = true;
    }
    if (state.sse > 0.0) {
        next.beta = (static_cast<double>(n_targets) - gamma) / (2.0 * state.sse);
    } else {
        next.clamped = true;
    }
    if (!(next.alpha >= kAlphaMin) || !std::isfinite(next.alpha)) {
        next.alpha = std::isfinite(next.alpha) ? kAlphaMin : state.alpha;
        next.clamped = true;
    }
    if (!(next.beta >= kBetaMin) || !std::isfinite(next.beta)) {
        next.beta = std::isfinite(next.beta) ? kBetaMin : state.beta;
        next.clamped = true;
    }
    return next;
}

HessianSummary hessian_summary_dense(const Matrix& J, double alpha, double beta) {
    const Eigen::Index k = J.cols();
    Matrix H = 2.0 * beta * (J.transpose() * J);
    H.diagonal().array() += 2.0 * alpha;

    HessianSummary out;
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) {
        H.diagonal().array() += kHessianJitter;
        llt.compute(H);
        out.jittered = true;
        if (llt.info() != Eigen::Success) {
            out.trace_inverse = std::numeric_limits<double>::infinity();
            return out;
        }
    }
    const Matrix L = llt.matrixL();
    const Matrix Linv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(k, k));
    out.trace_inverse = Linv.squaredNorm();
    out.log_det = 2.0 * L.diagonal().array().log().sum();
    return out;
}

GaussNewtonSpectrum::GaussNewtonSpectrum(const Matrix& J) : k_(J.cols()) {
    const double eps = std::numeric_limits<double>::epsilon();
    if (J.rows() < J.cols()) {
        const Matrix gram = J * J.transpose();
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
        const Vector& s = eig.eigenvalues();
        const double tol = std::max(s.maxCoeff(), 0.0) * static_cast<double>(k_) * eps;
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (s[i] > tol && s[i] > 0.0) keep.push_back(i);
        }
        eigenvalues_.resize(static_cast<Eigen::Index>(keep.size()));
        basis_.resize(k_, static_cast<Eigen::Index>(keep.size()));
        for (std::size_t c = 0; c < keep.size(); ++c) {
            const auto i = keep[c];
            const auto ci = static_cast<Eigen::Index>(c);
            eigenvalues_[ci] = s[i];
            basis_.col(ci) = J.transpose() * eig.eigenvectors().col(i) / std::sqrt(s[i]);
        }
    } else {
        const Matrix gram = J.transpose() * J;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
        eigenvalues_ = eig.eigenvalues().cwiseMax(0.0);
        basis_ = eig.eigenvectors();
    }
}

Vector GaussNewtonSpectrum::solve(const Vector& rhs, double beta, double c) const {
    const Vector proj = basis_.transpose() * rhs;
    const Vector scaled = proj.array() * (2.0 * beta * eigenvalues_.array()) /
                          (2.0 * beta * eigenvalues_.array() + c);
    return (rhs - basis_ * scaled) / c;
}

HessianSummary GaussNewtonSpectrum::hessian_summary(double alpha, double beta) const {
    HessianSummary out;
    double c = 2.0 * alpha;
    const auto d = eigenvalues_.size();
    const auto null_dim = static_cast<double>(k_ - d);
    const Vector diag = 2.0 * beta * eigenvalues_.array() + c;
    const bool singular = (diag.size() > 0 && diag.minCoeff() <= 0.0) || (null_dim > 0 && c <= 0.0);
    if (singular) {
        c += kHessianJitter;
        out.jittered = true;
    }
    const Vector shifted = 2.0 * beta * eigenvalues_.array() + c;
    if ((shifted.size() > 0 && shifted.minCoeff() <= 0.0) || (null_dim > 0 && c <= 0.0)) {
        out.trace_inverse = std::numeric_limits<double>::infinity();
        return out;
    }
    out.trace_inverse = shifted.cwiseInverse().sum() + (null_dim > 0 ? null_dim / c : 0.0);
    out.log_det = shifted.array().log().sum() + (null_dim > 0 ? null_dim * std::log(c) : 0.0);
    return out;
}

std::optional<double> log_evidence(const BayesState& state, Eigen::Index k, Eigen::Index n_targets,
                                   std::optional<double> hessian_log_det) {
    if (k <= 0) throw InvalidInput("log evidence needs at least one parameter");
    if (n_targets <= 0) throw InvalidInput("log evidence needs at least one target");
    if (!hessian_log_det || !(state.alpha > 0.0) || !(state.beta > 0.0)) return std::nullopt;
    const double F = state.beta * state.sse + state.alpha * state.ssw;
    const double kd = static_cast<double>(k);
    const double nd = static_cast<double>(n_targets);
    return -F - 0.5 * *hessian_log_det + 0.5 * kd * std::log(2.0 * state.alpha) +
           0.5 * nd * std::log(state.beta / std::numbers::pi);
}

}  // namespace brann
