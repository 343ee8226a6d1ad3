#pragma once

#include <optional>

#include "brann/network.hpp"

namespace brann {

/// Hyperparameters of F = beta * SSE + alpha * SSW and the diagnostics the
/// evidence update works from. sse/ssw describe the current weight point.
struct BayesState {
    double alpha = 0.0;
    double beta = 1.0;
    double gamma = 0.0;
    double ssw = 0.0;
    double sse = 0.0;
    /// Set when an update had to take a clamp path (zero SSE/SSW, gamma out
    /// of range, or a hyperparameter at its floor).
    bool clamped = false;
};

inline constexpr double kAlphaMin = 1e-20;
inline constexpr double kBetaMin = 1e-20;
inline constexpr double kHessianJitter = 1e-10;

double sum_squared_errors(const Network& net, const Matrix& X, const Matrix& Y);
double sum_squared_weights(const ParamVector& w);

/// beta * SSE + alpha * SSW, both recomputed from the network and data.
double regularized_loss(const Network& net, const Matrix& X, const Matrix& Y, const BayesState& state);

/// Evidence re-estimation from the Gauss-Newton Hessian H = 2 beta J'J + 2 alpha I:
///   gamma' = k - 2 alpha tr(H^-1), alpha' = gamma' / (2 SSW),
///   beta' = (n_targets - gamma') / (2 SSE),
/// with gamma' clamped to [0, k] and alpha', beta' floored at kAlphaMin / kBetaMin.
/// A zero SSW (SSE) keeps the previous alpha (beta) and flags the state.
BayesState update_hyperparameters(const BayesState& state, double hessian_trace_inverse,
                                  Eigen::Index k, Eigen::Index n_targets);

struct HessianSummary {
    double trace_inverse = 0.0;
    /// Empty when H is not positive definite even after jitter.
    std::optional<double> log_det;
    bool jittered = false;
};

/// tr(H^-1) and log det H for H = 2 beta J'J + 2 alpha I, via a dense
/// Cholesky factorization (one jitter retry on failure).
HessianSummary hessian_summary_dense(const Matrix& J, double alpha, double beta);

/// Eigen-decomposition of the smaller Gram matrix of J (JJ' when J has fewer
/// rows than columns, J'J otherwise). Lets an epoch evaluate tr(H^-1) and
/// any number of damped Gauss-Newton solves without refactoring.
class GaussNewtonSpectrum {
public:
    explicit GaussNewtonSpectrum(const Matrix& J);

    Eigen::Index parameter_count() const { return k_; }

    /// Solves (2 beta J'J + c I) x = rhs for c > 0.
    Vector solve(const Vector& rhs, double beta, double c) const;

    /// Same quantities as hessian_summary_dense, from the spectrum.
    HessianSummary hessian_summary(double alpha, double beta) const;

private:
    Eigen::Index k_ = 0;
    Vector eigenvalues_;   // of J'J restricted to its (at most min(n, k)) dimensional range
    Matrix basis_;         // k x d orthonormal eigenvectors of J'J
};

/// Gaussian-approximation log evidence log P(D | alpha, beta, M) for
/// F = beta * SSE + alpha * SSW:
///   -F - 0.5 log det H + (k/2) log(2 alpha) + (n/2) log(beta / pi).
/// Returns empty when alpha or beta is not positive or log det H is missing.
/// Throws InvalidInput for k == 0 or n_targets == 0.
std::optional<double> log_evidence(const BayesState& state, Eigen::Index k, Eigen::Index n_targets,
                                   std::optional<double> hessian_log_det);

}  // namespace brann
