#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "brann/bayes.hpp"
#include "brann/network.hpp"

namespace brann {

struct Dataset;

enum class AlgorithmKind {
    trainbr,
    traingdm,
    traingda,
    traingdx,
    trainlm,
    trainrp,
    traincgf,
    traincgb,
    trainscg,
    traincgp,
    trainbfg,
};

inline constexpr AlgorithmKind kAllAlgorithms[] = {
    AlgorithmKind::trainbr,  AlgorithmKind::traingdm, AlgorithmKind::traingda, AlgorithmKind::traingdx,
    AlgorithmKind::trainlm,  AlgorithmKind::trainrp,  AlgorithmKind::traincgf, AlgorithmKind::traincgb,
    AlgorithmKind::trainscg, AlgorithmKind::traincgp, AlgorithmKind::trainbfg,
};

std::string_view to_string(AlgorithmKind kind);
/// Accepts the eleven tags; "trainml" is read as trainlm.
AlgorithmKind parse_algorithm(std::string_view name);
bool is_levenberg_marquardt(AlgorithmKind kind);

enum class StopReason { max_epochs, grad_tol, mu_max, plateau };
std::string_view to_string(StopReason reason);

struct StoppingRule {
    double grad_tol = 1e-7;
    double mu_max = 1e10;
    int plateau_epochs = 5;
    double plateau_rel_tol = 1e-6;
};

struct LmSchedule {
    double mu_initial = 0.005;
    double mu_increase = 10.0;
    double mu_decrease = 10.0;
    int max_rejections = 10;
};

struct GradientDescentParams {
    double learning_rate = 0.01;
    double momentum = 0.9;
    double rate_increase = 1.05;
    double rate_decrease = 0.7;
    double max_objective_increase = 1.04;
};

struct RpropParams {
    double delta_initial = 0.07;
    double delta_min = 1e-6;
    double delta_max = 50.0;
    double eta_plus = 1.2;
    double eta_minus = 0.5;
};

struct LineSearchParams {
    double sufficient_decrease = 1e-4;
    double curvature = 0.9;
    int max_evaluations = 20;
};

struct ScgParams {
    double sigma = 5e-5;
    double lambda = 5e-7;
};

struct TrainingConfig {
    AlgorithmKind algorithm = AlgorithmKind::trainbr;
    int max_epochs = 1000;
    std::uint64_t seed = 0;
    StoppingRule stop;
    LmSchedule lm;
    GradientDescentParams gd;
    RpropParams rprop;
    LineSearchParams line_search;
    ScgParams scg;

    void validate() const;
    /// "key = value" lines, one per setting, in a fixed order.
    std::string describe() const;
};

struct TraceRow {
    int epoch = 0;
    double objective = 0.0;  // objective after the step, under the step's hyperparameters
    double sse = 0.0;
    double ssw = 0.0;
    double alpha = 0.0;      // hyperparameters in force for the next epoch
    double beta = 1.0;
    double gamma = 0.0;
    double mu = 0.0;
    double grad_norm = 0.0;

    // Not exported to CSV.
    double objective_before = 0.0;
    bool accepted = true;
    bool fallback = false;
    bool clamped = false;
    std::optional<double> log_evidence;
};

struct TrainingTrace {
    std::vector<TraceRow> rows;
    StopReason stop_reason = StopReason::max_epochs;

    static constexpr std::string_view kCsvHeader = "epoch,objective,sse,ssw,alpha,beta,gamma,mu,grad_norm";
    void write_csv(std::ostream& out) const;
    void write_sidecar(std::ostream& out, const TrainingConfig& config) const;
};

struct TrainResult {
    Network network;
    TrainingTrace trace;
};

/// Thrown when the objective turns non-finite; carries the rows recorded so far.
class TrainingAbortedError : public TrainingAborted {
public:
    TrainingAbortedError(const std::string& what, TrainingTrace trace)
        : TrainingAborted(what), trace_(std::move(trace)) {}
    const TrainingTrace& trace() const { return trace_; }

private:
    TrainingTrace trace_;
};

/// Full-batch training. trainbr returns the final network (its objective
/// is redefined every epoch); every other algorithm returns the lowest-SSE
/// network seen.
TrainResult train(const Network& net, const Matrix& X, const Matrix& Y, const TrainingConfig& config);
TrainResult train(const Network& net, const Dataset& train_set, const TrainingConfig& config);

// ---------------------------------------------------------------------------
// Levenberg-Marquardt machinery

/// Solves (2 beta J'J + (2 alpha + mu) I) delta = -(2 beta J' r + 2 alpha w)
/// with a dense Cholesky factorization; r = predictions - targets, stacked.
/// Empty when the factorization fails.
std::optional<ParamVector> lm_step(const Matrix& J, const Vector& residuals, const ParamVector& w,
                                   double mu, double alpha, double beta);

struct BrEpochResult {
    Network network;
    BayesState state;  // updated hyperparameters, sse/ssw at the returned network
    double mu = 0.0;
    bool accepted = false;
    bool mu_exhausted = false;  // max_rejections reached or mu above mu_max
    double objective_before = 0.0;
    double objective_after = 0.0;
    double grad_norm = 0.0;
    ParamVector step{};          // accepted step (empty when rejected)
    HessianSummary hessian{};
};

/// One LM inner loop on F followed by the evidence update at the accepted point.
BrEpochResult trainbr_epoch(const Network& net, const Matrix& X, const Matrix& Y, const BayesState& state,
                            double mu, const LmSchedule& schedule, double mu_max);

// ---------------------------------------------------------------------------
// First-order methods

/// Objective callback: returns f(w) and writes the gradient when asked.
using ObjectiveFn = std::function<double(const Vector& w, Vector* grad)>;

struct StepResult {
    Vector w;
    double f = 0.0;
    Vector g;
    bool accepted = true;
    bool fallback = false;  // line search failed, steepest descent used
};

class FirstOrderOptimizer {
public:
    virtual ~FirstOrderOptimizer() = default;
    /// One epoch from w, where f0 and g0 are the objective and gradient at w.
    virtual StepResult step(const ObjectiveFn& objective, const Vector& w, double f0, const Vector& g0) = 0;
};

/// kind must not be trainbr or trainlm.
std::unique_ptr<FirstOrderOptimizer> make_first_order(AlgorithmKind kind, const TrainingConfig& config);

struct LineSearchResult {
    bool ok = false;
    double step = 0.0;
    Vector w;
    double f = 0.0;
    Vector g;
    int evaluations = 0;
};

/// Bracketing line search with cubic interpolation, accepting only points
/// that satisfy the strong Wolfe conditions and that were produced by at
/// least one interpolation (exact on quadratics).
LineSearchResult wolfe_line_search(const ObjectiveFn& objective, const Vector& w, double f0, const Vector& g0,
                                   const Vector& direction, double initial_step, const LineSearchParams& params);

}  // namespace brann
