#include "brann/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "brann/random.hpp"

namespace brann {

namespace {

void require_finite(const Vector& z) {
    if (!z.allFinite()) throw InvalidInput("transfer input contains non-finite values");
}

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double apply_scalar(TransferKind kind, double z) {
    switch (kind) {
        case TransferKind::tansig: return std::tanh(z);
        case TransferKind::logsig: return logistic(z);
        case TransferKind::purelin: return z;
        case TransferKind::poslin: return z > 0.0 ? z : 0.0;
        case TransferKind::satlin: return std::clamp(z, 0.0, 1.0);
        case TransferKind::hardlim: return z >= 0.0 ? 1.0 : 0.0;
        case TransferKind::tribas: return std::max(0.0, 1.0 - std::abs(z));
        case TransferKind::radbas: return std::exp(-z * z);
        case TransferKind::elliotsig: return z / (1.0 + std::abs(z));
        case TransferKind::compet: break;
    }
    return 0.0;
}

double derivative_scalar(TransferKind kind, double z) {
    switch (kind) {
        case TransferKind::tansig: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case TransferKind::logsig: {
            const double s = logistic(z);
            return s * (1.0 - s);
        }
        case TransferKind::purelin: return 1.0;
        case TransferKind::poslin: return z >= 0.0 ? 1.0 : 0.0;
        case TransferKind::satlin: return (z >= 0.0 && z < 1.0) ? 1.0 : 0.0;
        case TransferKind::tribas:
            if (z >= -1.0 && z < 0.0) return 1.0;
            if (z >= 0.0 && z < 1.0) return -1.0;
            return 0.0;
        case TransferKind::radbas: return -2.0 * z * std::exp(-z * z);
        case TransferKind::elliotsig: {
            const double d = 1.0 + std::abs(z);
            return 1.0 / (d * d);
        }
        case TransferKind::hardlim:
        case TransferKind::compet: return 0.0;
    }
    return 0.0;
}

Vector compet(const Vector& z) {
    Vector out = Vector::Zero(z.size());
    if (z.size() == 0) return out;
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < z.size(); ++i) {
        if (z[i] > z[best]) best = i;
    }
    out[best] = 1.0;
    return out;
}

// Column-wise application over a layer's pre-activations (rows = units).
Matrix apply_matrix(TransferKind kind, const Matrix& z) {
    if (kind == TransferKind::compet) {
        Matrix out(z.rows(), z.cols());
        for (Eigen::Index c = 0; c < z.cols(); ++c) out.col(c) = compet(z.col(c));
        return out;
    }
    return z.unaryExpr([kind](double v) { return apply_scalar(kind, v); });
}

Matrix derivative_matrix(TransferKind kind, const Matrix& z) {
    return z.unaryExpr([kind](double v) { return derivative_scalar(kind, v); });
}

struct ForwardCache {
    std::vector<Matrix> pre;   // z_l, units x N
    std::vector<Matrix> post;  // a_l, post[0] = inputs^T
};

ForwardCache run_forward(const Network& net, const Matrix& X) {
    const auto& layout = net.layout();
    if (X.cols() != layout.input_size()) {
        std::ostringstream msg;
        msg << "input has " << X.cols() << " columns, network expects " << layout.input_size();
        throw ShapeError(msg.str());
    }
    ForwardCache cache;
    cache.post.reserve(layout.layer_count() + 1);
    cache.pre.reserve(layout.layer_count());
    cache.post.emplace_back(X.transpose());
    for (std::size_t l = 0; l < layout.layer_count(); ++l) {
        Matrix z = net.weights()[l] * cache.post.back();
        z.colwise() += net.biases()[l];
        cache.post.push_back(apply_matrix(layout.transfers[l], z));
        cache.pre.push_back(std::move(z));
    }
    return cache;
}

void check_targets(const Network& net, const Matrix& X, const Matrix& Y) {
    if (Y.rows() != X.rows() || Y.cols() != net.layout().output_size()) {
        std::ostringstream msg;
        msg << "targets are " << Y.rows() << "x" << Y.cols() << ", expected " << X.rows() << "x"
            << net.layout().output_size();
        throw ShapeError(msg.str());
    }
}

}  // namespace

std::string_view to_string(TransferKind kind) {
    switch (kind) {
        case TransferKind::tansig: return "tansig";
        case TransferKind::logsig: return "logsig";
        case TransferKind::purelin: return "purelin";
        case TransferKind::poslin: return "poslin";
        case TransferKind::satlin: return "satlin";
        case TransferKind::hardlim: return "hardlim";
        case TransferKind::tribas: return "tribas";
        case TransferKind::radbas: return "radbas";
        case TransferKind::elliotsig: return "elliotsig";
        case TransferKind::compet: return "compet";
    }
    return "?";
}

TransferKind parse_transfer(std::string_view name) {
    for (auto kind : kAllTransfers) {
        if (to_string(kind) == name) return kind;
    }
    throw InvalidInput("unknown transfer function '" + std::string(name) + "'");
}

bool is_differentiable(TransferKind kind) {
    return kind != TransferKind::hardlim && kind != TransferKind::compet;
}

Vector transfer_apply(TransferKind kind, const Vector& z) {
    require_finite(z);
    if (kind == TransferKind::compet) return compet(z);
    return z.unaryExpr([kind](double v) { return apply_scalar(kind, v); });
}

Vector transfer_derivative(TransferKind kind, const Vector& z) {
    require_finite(z);
    return z.unaryExpr([kind](double v) { return derivative_scalar(kind, v); });
}

// ---------------------------------------------------------------------------

void NetworkLayout::validate() const {
    if (layer_sizes.size() < 2) throw InvalidInput("layout needs at least an input and an output layer");
    for (int s : layer_sizes) {
        if (s < 1) throw InvalidInput("layout layer sizes must be >= 1");
    }
    if (transfers.size() != layer_sizes.size() - 1) {
        throw InvalidInput("layout needs exactly one transfer per non-input layer");
    }
}

Eigen::Index NetworkLayout::parameter_count() const {
    Eigen::Index k = 0;
    for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
        k += static_cast<Eigen::Index>(layer_sizes[l - 1] + 1) * layer_sizes[l];
    }
    return k;
}

std::string NetworkLayout::shape_string() const {
    std::string out;
    for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
        if (i) out += '-';
        out += std::to_string(layer_sizes[i]);
    }
    return out;
}

NetworkLayout NetworkLayout::single_hidden(int inputs, int hidden, int outputs,
                                           TransferKind hidden_transfer) {
    NetworkLayout layout{{inputs, hidden, outputs}, {hidden_transfer, TransferKind::purelin}};
    layout.validate();
    return layout;
}

namespace {

// Row-major weights of each layer followed by its biases.
ParamVector flatten_parts(const std::vector<Matrix>& weights, const std::vector<Vector>& biases, Eigen::Index k) {
    ParamVector out(k);
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const auto& w = weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) out[offset++] = w(r, c);
        }
        out.segment(offset, biases[l].size()) = biases[l];
        offset += biases[l].size();
    }
    return out;
}

}  // namespace

Network::Network(NetworkLayout layout, std::vector<Matrix> weights, std::vector<Vector> biases)
    : layout_(std::move(layout)), weights_(std::move(weights)), biases_(std::move(biases)) {
    layout_.validate();
    if (weights_.size() != layout_.layer_count() || biases_.size() != layout_.layer_count()) {
        throw ShapeError("network needs one weight matrix and bias vector per layer");
    }
    for (std::size_t l = 0; l < layout_.layer_count(); ++l) {
        const int n_in = layout_.layer_sizes[l];
        const int n_out = layout_.layer_sizes[l + 1];
        if (weights_[l].rows() != n_out || weights_[l].cols() != n_in || biases_[l].size() != n_out) {
            throw ShapeError("layer " + std::to_string(l) + " parameters do not match the layout");
        }
        if (!weights_[l].allFinite() || !biases_[l].allFinite()) {
            throw InvalidInput("network parameters must be finite");
        }
    }
}

Network Network::from_params(NetworkLayout layout, const ParamVector& params) {
    layout.validate();
    if (params.size() != layout.parameter_count()) {
        throw ShapeError("parameter vector has length " + std::to_string(params.size()) +
                         ", layout needs " + std::to_string(layout.parameter_count()));
    }
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < layout.layer_count(); ++l) {
        const int n_in = layout.layer_sizes[l];
        const int n_out = layout.layer_sizes[l + 1];
        Matrix w(n_out, n_in);
        for (int r = 0; r < n_out; ++r) {
            for (int c = 0; c < n_in; ++c) w(r, c) = params[offset++];
        }
        weights.push_back(std::move(w));
        biases.emplace_back(params.segment(offset, n_out));
        offset += n_out;
    }
    return Network(std::move(layout), std::move(weights), std::move(biases));
}

ParamVector Network::flatten() const { return flatten_parts(weights_, biases_, parameter_count()); }

Network init_weights(const NetworkLayout& layout, std::uint64_t seed) {
    layout.validate();
    Rng rng(seed);
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    for (std::size_t l = 0; l < layout.layer_count(); ++l) {
        const int n_in = layout.layer_sizes[l];
        const int n_out = layout.layer_sizes[l + 1];
        Matrix w(n_out, n_in);
        for (int r = 0; r < n_out; ++r) {
            for (int c = 0; c < n_in; ++c) w(r, c) = rng.uniform(-0.5, 0.5);
        }
        Vector b(n_out);
        for (int r = 0; r < n_out; ++r) b[r] = rng.uniform(-0.5, 0.5);

        const bool hidden = l + 1 < layout.layer_count();
        if (hidden) {
            // Nguyen-Widrow: each unit's weight vector gets norm 0.7 * H^(1/n_in)
            // and biases spread over [-scale, scale].
            const double scale = 0.7 * std::pow(static_cast<double>(n_out), 1.0 / n_in);
            for (int r = 0; r < n_out; ++r) {
                const double norm = w.row(r).norm();
                if (norm > 0.0) w.row(r) *= scale / norm;
            }
            b *= 2.0 * scale;
        }
        weights.push_back(std::move(w));
        biases.push_back(std::move(b));
    }
    return Network(layout, std::move(weights), std::move(biases));
}

Matrix forward(const Network& net, const Matrix& X) {
    return run_forward(net, X).post.back().transpose();
}

Vector stacked_residuals(const Matrix& predictions, const Matrix& targets) {
    if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
        throw ShapeError("predictions and targets differ in shape");
    }
    const Matrix diff = (predictions - targets).transpose();  // m x N, column-major => i*m + j
    return Eigen::Map<const Vector>(diff.data(), diff.size());
}

ParamVector gradient(const Network& net, const Matrix& X, const Matrix& Y, double beta,
                     double alpha) {
    check_targets(net, X, Y);
    const auto& layout = net.layout();
    const auto cache = run_forward(net, X);
    const std::size_t L = layout.layer_count();

    std::vector<Matrix> grad_w(L);
    std::vector<Vector> grad_b(L);
    Matrix delta = 2.0 * beta * (cache.post.back() - Y.transpose());
    for (std::size_t l = L; l-- > 0;) {
        delta = delta.cwiseProduct(derivative_matrix(layout.transfers[l], cache.pre[l]));
        grad_w[l] = delta * cache.post[l].transpose();
        grad_b[l] = delta.rowwise().sum();
        if (l > 0) delta = net.weights()[l].transpose() * delta;
    }
    // may hold non-finite entries when the forward pass overflows
    ParamVector g = flatten_parts(grad_w, grad_b, net.parameter_count());
    if (alpha != 0.0) g += 2.0 * alpha * net.flatten();
    return g;
}

Matrix jacobian(const Network& net, const Matrix& X) {
    const auto& layout = net.layout();
    const auto cache = run_forward(net, X);
    const std::size_t L = layout.layer_count();
    const Eigen::Index n = X.rows();
    const int m = layout.output_size();
    Matrix J = Matrix::Zero(n * m, net.parameter_count());

    std::vector<Eigen::Index> offsets(L);
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < L; ++l) {
        offsets[l] = offset;
        offset += static_cast<Eigen::Index>(layout.layer_sizes[l] + 1) * layout.layer_sizes[l + 1];
    }

    std::vector<Matrix> slopes(L);
    for (std::size_t l = 0; l < L; ++l) slopes[l] = derivative_matrix(layout.transfers[l], cache.pre[l]);

    for (int j = 0; j < m; ++j) {
        Matrix delta = Matrix::Zero(m, n);
        delta.row(j).setOnes();
        for (std::size_t l = L; l-- > 0;) {
            delta = delta.cwiseProduct(slopes[l]);
            const Matrix& input = cache.post[l];
            const Eigen::Index n_out = delta.rows();
            const Eigen::Index n_in = input.rows();
            for (Eigen::Index i = 0; i < n; ++i) {
                auto row = J.row(i * m + j);
                Eigen::Index p = offsets[l];
                for (Eigen::Index r = 0; r < n_out; ++r) {
                    const double d = delta(r, i);
                    for (Eigen::Index c = 0; c < n_in; ++c) row[p++] = d * input(c, i);
                }
                row.segment(p, n_out) = delta.col(i);
            }
            if (l > 0) delta = net.weights()[l].transpose() * delta;
        }
    }
    return J;
}

}  // namespace brann
