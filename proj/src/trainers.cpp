#include "brann/trainers.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "brann/data.hpp"
#include "brann/text.hpp"

namespace brann {

namespace {

using text::format_double;

bool relative_plateau(double before, double after, double tol) {
    const double scale = std::max(std::abs(before), std::numeric_limits<double>::min());
    return (before - after) / scale < tol;
}

// Tracks consecutive low-improvement epochs. Rejected epochs are neutral.
class PlateauCounter {
public:
    explicit PlateauCounter(const StoppingRule& rule) : rule_(rule) {}

    bool update(double before, double after, bool accepted) {
        if (!accepted) return false;
        if (relative_plateau(before, after, rule_.plateau_rel_tol)) {
            ++count_;
        } else {
            count_ = 0;
        }
        return count_ >= rule_.plateau_epochs;
    }

private:
    const StoppingRule& rule_;
    int count_ = 0;
};

[[noreturn]] void abort_training(const std::string& what, TrainingTrace trace) {
    throw TrainingAbortedError(what, std::move(trace));
}

// ---------------------------------------------------------------------------
// Line search helpers

struct Probe {
    double a = 0.0;
    double f = 0.0;
    double d = 0.0;  // directional derivative
    Vector w;
    Vector g;
};

// Minimizer of the cubic interpolating (a0, f0, d0) and (a1, f1, d1).
// Returns NaN when the cubic has no real minimizer.
double cubic_minimizer(const Probe& p0, const Probe& p1) {
    const double d1 = p0.d + p1.d - 3.0 * (p0.f - p1.f) / (p0.a - p1.a);
    const double disc = d1 * d1 - p0.d * p1.d;
    if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double d2 = std::copysign(std::sqrt(disc), p1.a - p0.a);
    const double denom = p1.d - p0.d + 2.0 * d2;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return p1.a - (p1.a - p0.a) * (p1.d + d2 - d1) / denom;
}

Probe probe_at(const ObjectiveFn& objective, const Vector& w, const Vector& direction, double a) {
    Probe p;
    p.a = a;
    p.w = w + a * direction;
    p.g.resize(w.size());
    p.f = objective(p.w, &p.g);
    p.d = p.g.dot(direction);
    return p;
}

// Armijo backtracking along -g; used when a line search fails.
StepResult steepest_descent_fallback(const ObjectiveFn& objective, const Vector& w, double f0, const Vector& g0) {
    StepResult out{w, f0, g0, false, true};
    const double gnorm = g0.norm();
    if (!(gnorm > 0.0)) return out;
    double a = 1.0 / gnorm;
    for (int i = 0; i < 50; ++i, a *= 0.5) {
        Vector g(w.size());
        Vector trial = w - a * g0;
        const double f = objective(trial, &g);
        if (std::isfinite(f) && f < f0 - 1e-4 * a * gnorm * gnorm) {
            out.w = std::move(trial);
            out.f = f;
            out.g = std::move(g);
            out.accepted = true;
            return out;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Optimizers

class GradientDescentMomentum final : public FirstOrderOptimizer {
public:
    explicit GradientDescentMomentum(const GradientDescentParams& p) : p_(p) {}

    StepResult step(const ObjectiveFn& objective, const Vector& w, double, const Vector& g0) override {
        if (velocity_.size() != w.size()) velocity_ = Vector::Zero(w.size());
        velocity_ = p_.momentum * velocity_ - (1.0 - p_.momentum) * p_.learning_rate * g0;
        StepResult out;
        out.w = w + velocity_;
        out.g.resize(w.size());
        out.f = objective(out.w, &out.g);
        return out;
    }

private:
    GradientDescentParams p_;
    Vector velocity_;
};

// traingda (momentum = 0) and traingdx (momentum from params).
class AdaptiveGradientDescent final : public FirstOrderOptimizer {
public:
    AdaptiveGradientDescent(const GradientDescentParams& p, bool use_momentum)
        : p_(p), rate_(p.learning_rate), momentum_(use_momentum ? p.momentum : 0.0) {}

    StepResult step(const ObjectiveFn& objective, const Vector& w, double f0, const Vector& g0) override {
        if (velocity_.size() != w.size()) velocity_ = Vector::Zero(w.size());
        const Vector v = momentum_ * velocity_ - (1.0 - momentum_) * rate_ * g0;
        StepResult out;
        out.w = w + v;
        out.g.resize(w.size());
        out.f = objective(out.w, &out.g);
        if (!std::isfinite(out.f) || out.f > f0 * p_.max_objective_increase) {
            rate_ *= p_.rate_decrease;
            velocity_.setZero();
            return StepResult{w, f0, g0, false, false};
        }
        if (out.f < f0) rate_ *= p_.rate_increase;
        velocity_ = v;
        return out;
    }

private:
    GradientDescentParams p_;
    double rate_;
    double momentum_;
    Vector velocity_;
};

// iRprop-: on a gradient sign change the step shrinks and that weight skips
// the update for one epoch.
class ResilientBackprop final : public FirstOrderOptimizer {
public:
    explicit ResilientBackprop(const RpropParams& p) : p_(p) {}

    StepResult step(const ObjectiveFn& objective, const Vector& w, double, const Vector& g0) override {
        if (delta_.size() != w.size()) {
            delta_ = Vector::Constant(w.size(), p_.delta_initial);
            previous_ = Vector::Zero(w.size());
        }
        Vector g = g0;
        Vector dw = Vector::Zero(w.size());
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double s = g[i] * previous_[i];
            if (s > 0.0) {
                delta_[i] = std::min(delta_[i] * p_.eta_plus, p_.delta_max);
            } else if (s < 0.0) {
                delta_[i] = std::max(delta_[i] * p_.eta_minus, p_.delta_min);
                g[i] = 0.0;
            }
            if (g[i] > 0.0) {
                dw[i] = -delta_[i];
            } else if (g[i] < 0.0) {
                dw[i] = delta_[i];
            }
        }
        previous_ = g;
        StepResult out;
        out.w = w + dw;
        out.g.resize(w.size());
        out.f = objective(out.w, &out.g);
        return out;
    }

private:
    RpropParams p_;
    Vector delta_;
    Vector previous_;
};

enum class CgUpdate { fletcher_reeves, polak_ribiere, powell_beale };

class ConjugateGradient final : public FirstOrderOptimizer {
public:
    ConjugateGradient(CgUpdate update, const LineSearchParams& ls) : update_(update), ls_(ls) {}

    StepResult step(const ObjectiveFn& objective, const Vector& w, double f0, const Vector& g0) override {
        const auto n = w.size();
        if (direction_.size() != n || restart_) {
            direction_ = -g0;
            since_restart_ = 0;
            restart_dir_.resize(0);
            restart_ = false;
        }
        if (direction_.dot(g0) >= 0.0) {
            direction_ = -g0;
            since_restart_ = 0;
            restart_dir_.resize(0);
        }
        const double slope = direction_.dot(g0);
        double a0 = previous_slope_ < 0.0 ? previous_step_ * previous_slope_ / slope : 1.0 / g0.norm();
        if (!(a0 > 0.0) || !std::isfinite(a0)) a0 = 1.0 / std::max(g0.norm(), 1e-300);
        a0 = std::min(a0, 1e6);

        auto ls = wolfe_line_search(objective, w, f0, g0, direction_, a0, ls_);
        if (!ls.ok) {
            restart_ = true;
            previous_slope_ = 0.0;
            return steepest_descent_fallback(objective, w, f0, g0);
        }
        previous_step_ = ls.step;
        previous_slope_ = slope;

        const Vector& g1 = ls.g;
        const Vector y = g1 - g0;
        ++since_restart_;
        bool restart = since_restart_ >= n;
        Vector next;
        switch (update_) {
            case CgUpdate::fletcher_reeves: {
                const double b = g1.squaredNorm() / g0.squaredNorm();
                next = -g1 + b * direction_;
                break;
            }
            case CgUpdate::polak_ribiere: {
                const double b = y.dot(g1) / g0.squaredNorm();
                next = -g1 + b * direction_;
                break;
            }
            case CgUpdate::powell_beale: {
                // Restart when consecutive gradients lose orthogonality.
                if (std::abs(g0.dot(g1)) >= 0.2 * g1.squaredNorm()) restart = true;
                if (!restart) {
                    const double denom = y.dot(direction_);
                    const double b = denom != 0.0 ? y.dot(g1) / denom : 0.0;
                    next = -g1 + b * direction_;
                    if (restart_dir_.size() == n && since_restart_ > 1) {
                        const double dt = restart_y_.dot(restart_dir_);
                        if (dt != 0.0) next += (restart_y_.dot(g1) / dt) * restart_dir_;
                    }
                    const double gg = g1.squaredNorm();
                    const double dg = next.dot(g1);
                    if (dg > -0.8 * gg || dg < -1.2 * gg) restart = true;
                }
                if (restart) {
                    // The direction just searched becomes the Beale restart direction.
                    restart_dir_ = direction_;
                    restart_y_ = y;
                    next = -g1;
                    since_restart_ = 0;
                    restart = false;
                }
                break;
            }
        }
        if (restart) {
            next = -g1;
            since_restart_ = 0;
        }
        direction_ = std::move(next);
        return StepResult{std::move(ls.w), ls.f, g1, true, false};
    }

private:
    CgUpdate update_;
    LineSearchParams ls_;
    Vector direction_;
    Vector restart_dir_;
    Vector restart_y_;
    Eigen::Index since_restart_ = 0;
    bool restart_ = false;
    double previous_step_ = 0.0;
    double previous_slope_ = 0.0;
};

// Moller's scaled conjugate gradient: no line search, a Levenberg-style
// scale lambda regulates a finite-difference curvature estimate.
class ScaledConjugateGradient final : public FirstOrderOptimizer {
public:
    explicit ScaledConjugateGradient(const ScgParams& p) : p_(p), lambda_(p.lambda) {}

    StepResult step(const ObjectiveFn& objective, const Vector& w, double f0, const Vector& g0) override {
        const auto n = w.size();
        if (p_dir_.size() != n) {
            p_dir_ = -g0;
            r_ = -g0;
            success_ = true;
            iteration_ = 0;
        }
        ++iteration_;
        const double p2 = p_dir_.squaredNorm();
        if (!(p2 > 0.0)) return StepResult{w, f0, g0, false, false};

        if (success_) {
            const double sigma_k = p_.sigma / std::sqrt(p2);
            Vector g_probe(n);
            objective(w + sigma_k * p_dir_, &g_probe);
            delta_ = p_dir_.dot(g_probe - g0) / sigma_k;
        }
        double delta = delta_ + (lambda_ - lambda_bar_) * p2;
        if (delta <= 0.0) {
            lambda_bar_ = 2.0 * (lambda_ - delta / p2);
            delta = -delta + lambda_ * p2;
            lambda_ = lambda_bar_;
        }
        const double mu = p_dir_.dot(r_);
        const double alpha = mu / delta;

        StepResult out;
        out.w = w + alpha * p_dir_;
        out.g.resize(n);
        out.f = objective(out.w, &out.g);
        const double comparison = std::isfinite(out.f) ? 2.0 * delta * (f0 - out.f) / (mu * mu) : -1.0;

        if (comparison >= 0.0) {
            const Vector r_new = -out.g;
            lambda_bar_ = 0.0;
            success_ = true;
            if (iteration_ % n == 0) {
                p_dir_ = r_new;
            } else {
                const double b = (r_new.squaredNorm() - r_new.dot(r_)) / mu;
                p_dir_ = r_new + b * p_dir_;
            }
            r_ = r_new;
            if (comparison >= 0.75) lambda_ *= 0.25;
        } else {
            lambda_bar_ = lambda_;
            success_ = false;
            out = StepResult{w, f0, g0, false, false};
        }
        if (comparison < 0.25) lambda_ += delta * (1.0 - comparison) / p2;
        // A failed step retries the same direction with the scaled curvature.
        delta_ = delta;
        return out;
    }

private:
    ScgParams p_;
    double lambda_;
    double lambda_bar_ = 0.0;
    double delta_ = 0.0;
    bool success_ = true;
    long long iteration_ = 0;
    Vector p_dir_;
    Vector r_;
};

class Bfgs final : public FirstOrderOptimizer {
public:
    explicit Bfgs(const LineSearchParams& ls) : ls_(ls) {}

    StepResult step(const ObjectiveFn& objective, const Vector& w, double f0, const Vector& g0) override {
        const auto n = w.size();
        if (inverse_.rows() != n) reset(n);
        Vector d = -inverse_ * g0;
        if (d.dot(g0) >= 0.0) {
            reset(n);
            d = -g0;
        }
        const double a0 = first_ ? std::min(1.0, 1.0 / g0.norm()) : 1.0;
        auto ls = wolfe_line_search(objective, w, f0, g0, d, a0, ls_);
        if (!ls.ok) {
            reset(n);
            return steepest_descent_fallback(objective, w, f0, g0);
        }
        const Vector s = ls.w - w;
        const Vector y = ls.g - g0;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            if (first_) {
                inverse_ *= sy / y.squaredNorm();
                first_ = false;
            }
            const double rho = 1.0 / sy;
            const Vector Hy = inverse_ * y;
            // H+ = (I - rho s y') H (I - rho y s') + rho s s'
            inverse_ += rho * ((1.0 + rho * y.dot(Hy)) * (s * s.transpose()) - Hy * s.transpose() -
                               s * Hy.transpose());
        }
        return StepResult{std::move(ls.w), ls.f, std::move(ls.g), true, false};
    }

private:
    void reset(Eigen::Index n) {
        inverse_ = Matrix::Identity(n, n);
        first_ = true;
    }

    LineSearchParams ls_;
    Matrix inverse_;
    bool first_ = true;
};

// ---------------------------------------------------------------------------

void check_training_shapes(const Network& net, const Matrix& X, const Matrix& Y) {
    if (X.rows() == 0) throw InvalidInput("training set is empty");
    if (X.cols() != net.layout().input_size() || Y.cols() != net.layout().output_size() ||
        Y.rows() != X.rows()) {
        std::ostringstream msg;
        msg << "training data " << X.rows() << "x" << X.cols() << " -> " << Y.rows() << "x" << Y.cols()
            << " does not fit layout " << net.layout().shape_string();
        throw ShapeError(msg.str());
    }
    if (!X.allFinite() || !Y.allFinite()) throw InvalidInput("training data contains non-finite values");
}

BrEpochResult lm_epoch(const Network& net, const Matrix& X, const Matrix& Y, const BayesState& state, double mu,
                       const LmSchedule& schedule, double mu_max, bool evidence_update);

TrainResult train_levenberg_marquardt(const Network& net, const Matrix& X, const Matrix& Y,
                                      const TrainingConfig& config) {
    const bool bayesian = config.algorithm == AlgorithmKind::trainbr;
    const Eigen::Index k = net.parameter_count();
    const Eigen::Index n_targets = Y.size();

    Network current = net;
    BayesState state;
    state.alpha = 0.0;
    state.beta = 1.0;
    state.gamma = static_cast<double>(k);
    double mu = config.lm.mu_initial;

    TrainingTrace trace;
    PlateauCounter plateau(config.stop);
    Network best = current;
    double best_sse = sum_squared_errors(current, X, Y);

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        BrEpochResult r = lm_epoch(current, X, Y, state, mu, config.lm, config.stop.mu_max, bayesian);
        if (!bayesian) {
            // Plain LM keeps alpha = 0, beta = 1.
            r.state.alpha = 0.0;
            r.state.beta = 1.0;
            r.state.gamma = static_cast<double>(k);
        }

        TraceRow row;
        row.epoch = epoch;
        row.objective = r.objective_after;
        row.objective_before = r.objective_before;
        row.sse = r.state.sse;
        row.ssw = r.state.ssw;
        row.alpha = r.state.alpha;
        row.beta = r.state.beta;
        row.gamma = r.state.gamma;
        row.mu = r.mu;
        row.grad_norm = r.grad_norm;
        row.accepted = r.accepted;
        row.clamped = r.state.clamped;
        if (bayesian) row.log_evidence = log_evidence(r.state, k, n_targets, r.hessian.log_det);
        trace.rows.push_back(row);

        if (!std::isfinite(row.objective) || !std::isfinite(row.sse)) {
            abort_training("objective became non-finite at epoch " + std::to_string(epoch), std::move(trace));
        }

        current = std::move(r.network);
        state = r.state;
        mu = r.mu;
        if (!bayesian && r.accepted && state.sse < best_sse) {
            best_sse = state.sse;
            best = current;
        }

        if (r.mu_exhausted) {
            trace.stop_reason = StopReason::mu_max;
            break;
        }
        if (r.grad_norm < config.stop.grad_tol) {
            trace.stop_reason = StopReason::grad_tol;
            break;
        }
        if (plateau.update(r.objective_before, r.objective_after, r.accepted)) {
            trace.stop_reason = StopReason::plateau;
            break;
        }
        trace.stop_reason = StopReason::max_epochs;
    }
    return TrainResult{bayesian ? current : best, std::move(trace)};
}

TrainResult train_first_order(const Network& net, const Matrix& X, const Matrix& Y,
                              const TrainingConfig& config) {
    const NetworkLayout layout = net.layout();
    const double scale = 1.0 / static_cast<double>(Y.size());
    const Eigen::Index k = net.parameter_count();

    // Mean squared error over all target entries.
    const ObjectiveFn mse = [&](const Vector& w, Vector* grad) {
        if (!w.allFinite()) {
            if (grad) *grad = Vector::Constant(w.size(), std::numeric_limits<double>::quiet_NaN());
            return std::numeric_limits<double>::infinity();
        }
        const Network candidate = Network::from_params(layout, w);
        if (grad) *grad = gradient(candidate, X, Y, scale, 0.0);
        return scale * sum_squared_errors(candidate, X, Y);
    };

    auto optimizer = make_first_order(config.algorithm, config);
    Vector w = net.flatten();
    Vector g(w.size());
    double f = mse(w, &g);
    Vector best_w = w;
    double best_f = f;

    TrainingTrace trace;
    PlateauCounter plateau(config.stop);
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        StepResult s = optimizer->step(mse, w, f, g);

        TraceRow row;
        row.epoch = epoch;
        row.objective_before = f;
        row.objective = s.f;
        row.sse = s.f / scale;
        row.ssw = s.w.squaredNorm();
        row.alpha = 0.0;
        row.beta = scale;
        row.gamma = static_cast<double>(k);
        row.mu = 0.0;
        row.grad_norm = s.g.norm();
        row.accepted = s.accepted;
        row.fallback = s.fallback;
        trace.rows.push_back(row);

        if (!std::isfinite(s.f) || !s.w.allFinite()) {
            abort_training("objective became non-finite at epoch " + std::to_string(epoch), std::move(trace));
        }
        const bool improved_plateau = plateau.update(f, s.f, s.accepted);
        w = std::move(s.w);
        f = s.f;
        g = std::move(s.g);
        if (f < best_f) {
            best_f = f;
            best_w = w;
        }

        if (row.grad_norm < config.stop.grad_tol) {
            trace.stop_reason = StopReason::grad_tol;
            break;
        }
        if (improved_plateau) {
            trace.stop_reason = StopReason::plateau;
            break;
        }
        trace.stop_reason = StopReason::max_epochs;
    }
    return TrainResult{Network::from_params(layout, best_w), std::move(trace)};
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(AlgorithmKind kind) {
    switch (kind) {
        case AlgorithmKind::trainbr: return "trainbr";
        case AlgorithmKind::traingdm: return "traingdm";
        case AlgorithmKind::traingda: return "traingda";
        case AlgorithmKind::traingdx: return "traingdx";
        case AlgorithmKind::trainlm: return "trainlm";
        case AlgorithmKind::trainrp: return "trainrp";
        case AlgorithmKind::traincgf: return "traincgf";
        case AlgorithmKind::traincgb: return "traincgb";
        case AlgorithmKind::trainscg: return "trainscg";
        case AlgorithmKind::traincgp: return "traincgp";
        case AlgorithmKind::trainbfg: return "trainbfg";
    }
    return "?";
}

AlgorithmKind parse_algorithm(std::string_view name) {
    if (name == "trainml") return AlgorithmKind::trainlm;
    for (auto kind : kAllAlgorithms) {
        if (to_string(kind) == name) return kind;
    }
    throw InvalidInput("unknown training algorithm '" + std::string(name) + "'");
}

bool is_levenberg_marquardt(AlgorithmKind kind) {
    return kind == AlgorithmKind::trainbr || kind == AlgorithmKind::trainlm;
}

std::string_view to_string(StopReason reason) {
    switch (reason) {
        case StopReason::max_epochs: return "max_epochs";
        case StopReason::grad_tol: return "grad_tol";
        case StopReason::mu_max: return "mu_max";
        case StopReason::plateau: return "plateau";
    }
    return "?";
}

void TrainingConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(std::string(name) + " must be positive");
    };
    if (max_epochs < 1) throw InvalidInput("max_epochs must be >= 1");
    positive(stop.grad_tol, "grad_tol");
    positive(stop.mu_max, "mu_max");
    positive(stop.plateau_rel_tol, "plateau_rel_tol");
    if (stop.plateau_epochs < 1) throw InvalidInput("plateau_epochs must be >= 1");
    positive(lm.mu_initial, "mu_initial");
    positive(lm.mu_increase, "mu_increase");
    positive(lm.mu_decrease, "mu_decrease");
    if (lm.max_rejections < 1) throw InvalidInput("max_rejections must be >= 1");
    positive(gd.learning_rate, "learning_rate");
    if (gd.momentum < 0.0 || gd.momentum >= 1.0) throw InvalidInput("momentum must be in [0, 1)");
    positive(gd.rate_increase, "rate_increase");
    positive(gd.rate_decrease, "rate_decrease");
    positive(gd.max_objective_increase, "max_objective_increase");
    positive(rprop.delta_initial, "delta_initial");
    positive(rprop.delta_min, "delta_min");
    positive(rprop.delta_max, "delta_max");
    positive(rprop.eta_plus, "eta_plus");
    positive(rprop.eta_minus, "eta_minus");
    positive(line_search.sufficient_decrease, "sufficient_decrease");
    positive(line_search.curvature, "curvature");
    if (line_search.max_evaluations < 2) throw InvalidInput("line search needs at least 2 evaluations");
    positive(scg.sigma, "scg sigma");
    positive(scg.lambda, "scg lambda");
}

std::string TrainingConfig::describe() const {
    std::ostringstream out;
    auto put = [&](const char* key, double v) { out << key << " = " << format_double(v) << '\n'; };
    out << "algorithm = " << to_string(algorithm) << '\n';
    out << "max_epochs = " << max_epochs << '\n';
    out << "seed = " << seed << '\n';
    put("grad_tol", stop.grad_tol);
    put("mu_max", stop.mu_max);
    out << "plateau_epochs = " << stop.plateau_epochs << '\n';
    put("plateau_rel_tol", stop.plateau_rel_tol);
    put("mu_initial", lm.mu_initial);
    put("mu_increase", lm.mu_increase);
    put("mu_decrease", lm.mu_decrease);
    out << "max_rejections = " << lm.max_rejections << '\n';
    put("learning_rate", gd.learning_rate);
    put("momentum", gd.momentum);
    put("rate_increase", gd.rate_increase);
    put("rate_decrease", gd.rate_decrease);
    put("max_objective_increase", gd.max_objective_increase);
    put("rprop_delta_initial", rprop.delta_initial);
    put("rprop_delta_min", rprop.delta_min);
    put("rprop_delta_max", rprop.delta_max);
    put("rprop_eta_plus", rprop.eta_plus);
    put("rprop_eta_minus", rprop.eta_minus);
    put("line_search_c1", line_search.sufficient_decrease);
    put("line_search_c2", line_search.curvature);
    out << "line_search_max_evaluations = " << line_search.max_evaluations << '\n';
    put("scg_sigma", scg.sigma);
    put("scg_lambda", scg.lambda);
    return out.str();
}

void TrainingTrace::write_csv(std::ostream& out) const {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.epoch << ',' << format_double(r.objective) << ',' << format_double(r.sse) << ','
            << format_double(r.ssw) << ',' << format_double(r.alpha) << ',' << format_double(r.beta) << ','
            << format_double(r.gamma) << ',' << format_double(r.mu) << ',' << format_double(r.grad_norm)
            << '\n';
    }
}

void TrainingTrace::write_sidecar(std::ostream& out, const TrainingConfig& config) const {
    out << "# brann training trace\n";
    out << "stop_reason = " << to_string(stop_reason) << '\n';
    out << "epochs = " << rows.size() << '\n';
    out << config.describe();
}

std::optional<ParamVector> lm_step(const Matrix& J, const Vector& residuals, const ParamVector& w, double mu,
                                   double alpha, double beta) {
    if (J.rows() != residuals.size() || J.cols() != w.size()) {
        throw ShapeError("lm_step: Jacobian, residual and parameter sizes disagree");
    }
    Matrix A = 2.0 * beta * (J.transpose() * J);
    A.diagonal().array() += 2.0 * alpha + mu;
    const Vector rhs = -(2.0 * beta * (J.transpose() * residuals) + 2.0 * alpha * w);
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) return std::nullopt;
    ParamVector delta = llt.solve(rhs);
    if (!delta.allFinite()) return std::nullopt;
    return delta;
}

namespace {

BrEpochResult lm_epoch(const Network& net, const Matrix& X, const Matrix& Y, const BayesState& state, double mu,
                       const LmSchedule& schedule, double mu_max, bool evidence_update) {
    const ParamVector w = net.flatten();
    const Eigen::Index k = w.size();
    const Matrix J = jacobian(net, X);
    const Vector r = stacked_residuals(forward(net, X), Y);
    const double sse = r.squaredNorm();
    const double ssw = w.squaredNorm();

    BrEpochResult out{.network = net, .state = state};
    out.state.sse = sse;
    out.state.ssw = ssw;
    out.objective_before = state.beta * sse + state.alpha * ssw;
    out.objective_after = out.objective_before;

    const Vector grad = 2.0 * state.beta * (J.transpose() * r) + 2.0 * state.alpha * w;
    out.grad_norm = grad.norm();
    const GaussNewtonSpectrum spectrum(J);

    for (int attempt = 0; attempt < schedule.max_rejections; ++attempt) {
        const ParamVector delta = -spectrum.solve(grad, state.beta, 2.0 * state.alpha + mu);
        const ParamVector trial_w = w + delta;
        if (trial_w.allFinite()) {
            Network trial = Network::from_params(net.layout(), trial_w);
            const double trial_sse = sum_squared_errors(trial, X, Y);
            const double trial_ssw = trial_w.squaredNorm();
            const double trial_f = state.beta * trial_sse + state.alpha * trial_ssw;
            if (std::isfinite(trial_f) && trial_f < out.objective_before) {
                out.network = std::move(trial);
                out.accepted = true;
                out.step = delta;
                out.objective_after = trial_f;
                out.state.sse = trial_sse;
                out.state.ssw = trial_ssw;
                mu /= schedule.mu_decrease;
                break;
            }
        }
        mu *= schedule.mu_increase;
        if (mu > mu_max) break;
    }
    out.mu = mu;
    if (!out.accepted) {
        out.mu_exhausted = true;
        if (evidence_update) out.hessian = spectrum.hessian_summary(state.alpha, state.beta);
        return out;
    }
    if (mu > mu_max) out.mu_exhausted = true;
    if (!evidence_update) return out;

    // Evidence update at the accepted point.
    const GaussNewtonSpectrum accepted(jacobian(out.network, X));
    out.hessian = accepted.hessian_summary(state.alpha, state.beta);
    out.state = update_hyperparameters(out.state, out.hessian.trace_inverse, k, Y.size());
    // evidence is reported under the new hyperparameters
    out.hessian = accepted.hessian_summary(out.state.alpha, out.state.beta);
    return out;
}

}  // namespace

BrEpochResult trainbr_epoch(const Network& net, const Matrix& X, const Matrix& Y, const BayesState& state,
                            double mu, const LmSchedule& schedule, double mu_max) {
    return lm_epoch(net, X, Y, state, mu, schedule, mu_max, true);
}

std::unique_ptr<FirstOrderOptimizer> make_first_order(AlgorithmKind kind, const TrainingConfig& config) {
    switch (kind) {
        case AlgorithmKind::traingdm: return std::make_unique<GradientDescentMomentum>(config.gd);
        case AlgorithmKind::traingda: return std::make_unique<AdaptiveGradientDescent>(config.gd, false);
        case AlgorithmKind::traingdx: return std::make_unique<AdaptiveGradientDescent>(config.gd, true);
        case AlgorithmKind::trainrp: return std::make_unique<ResilientBackprop>(config.rprop);
        case AlgorithmKind::traincgf:
            return std::make_unique<ConjugateGradient>(CgUpdate::fletcher_reeves, config.line_search);
        case AlgorithmKind::traincgp:
            return std::make_unique<ConjugateGradient>(CgUpdate::polak_ribiere, config.line_search);
        case AlgorithmKind::traincgb:
            return std::make_unique<ConjugateGradient>(CgUpdate::powell_beale, config.line_search);
        case AlgorithmKind::trainscg: return std::make_unique<ScaledConjugateGradient>(config.scg);
        case AlgorithmKind::trainbfg: return std::make_unique<Bfgs>(config.line_search);
        case AlgorithmKind::trainbr:
        case AlgorithmKind::trainlm: break;
    }
    throw InvalidInput(std::string(to_string(kind)) + " is not a first-order method");
}

LineSearchResult wolfe_line_search(const ObjectiveFn& objective, const Vector& w, double f0, const Vector& g0,
                                   const Vector& direction, double initial_step, const LineSearchParams& params) {
    LineSearchResult out;
    const double c1 = params.sufficient_decrease;
    const double c2 = params.curvature;
    const Probe origin{0.0, f0, g0.dot(direction), w, g0};
    if (!(origin.d < 0.0) || !(initial_step > 0.0)) return out;

    auto armijo_fails = [&](const Probe& p) { return !std::isfinite(p.f) || p.f > f0 + c1 * p.a * origin.d; };
    auto curvature_ok = [&](const Probe& p) { return std::abs(p.d) <= -c2 * origin.d; };
    auto finish = [&](Probe& p) {
        out.ok = true;
        out.step = p.a;
        out.w = std::move(p.w);
        out.f = p.f;
        out.g = std::move(p.g);
        return out;
    };

    Probe lo = origin;
    Probe hi;
    bool bracketed = false;
    Probe cur = probe_at(objective, w, direction, initial_step);
    out.evaluations = 1;

    // Expansion phase.
    while (out.evaluations < params.max_evaluations) {
        if (armijo_fails(cur) || cur.f >= lo.f) {
            hi = std::move(cur);
            bracketed = true;
            break;
        }
        if (cur.d >= 0.0) {
            hi = std::move(lo);
            lo = std::move(cur);
            bracketed = true;
            break;
        }
        if (out.evaluations >= 2 && curvature_ok(cur)) return finish(cur);
        double next = cubic_minimizer(lo, cur);
        const double width = cur.a - lo.a;
        if (!std::isfinite(next) || next < cur.a + 0.1 * width) next = cur.a + 0.1 * width;
        next = std::min(next, cur.a + 10.0 * width);
        lo = std::move(cur);
        cur = probe_at(objective, w, direction, next);
        ++out.evaluations;
    }
    if (!bracketed) return out;

    // Zoom phase: lo has the lower objective, the minimizer lies between lo and hi.
    while (out.evaluations < params.max_evaluations) {
        const double left = std::min(lo.a, hi.a);
        const double right = std::max(lo.a, hi.a);
        const double margin = 0.01 * (right - left);
        double a = std::isfinite(hi.f) ? cubic_minimizer(lo, hi) : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(a) || a < left + margin || a > right - margin) a = 0.5 * (left + right);
        Probe p = probe_at(objective, w, direction, a);
        ++out.evaluations;
        if (armijo_fails(p) || p.f >= lo.f) {
            hi = std::move(p);
        } else {
            if (curvature_ok(p)) return finish(p);
            if (p.d * (hi.a - lo.a) >= 0.0) hi = lo;
            lo = std::move(p);
        }
        if (right - left < 1e-16 * std::max(1.0, right)) break;
    }
    return out;
}

TrainResult train(const Network& net, const Matrix& X, const Matrix& Y, const TrainingConfig& config) {
    config.validate();
    check_training_shapes(net, X, Y);
    if (is_levenberg_marquardt(config.algorithm)) return train_levenberg_marquardt(net, X, Y, config);
    return train_first_order(net, X, Y, config);
}

TrainResult train(const Network& net, const Dataset& train_set, const TrainingConfig& config) {
    if (train_set.has_missing()) throw InvalidInput("training set has missing feature cells; fill them first");
    return train(net, train_set.X, train_set.Y, config);
}

}  // namespace brann
