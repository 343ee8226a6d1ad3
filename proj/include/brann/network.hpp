#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "brann/errors.hpp"

namespace brann {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Flat parameter vector. Canonical order is layer by layer, each layer's
/// weight matrix row-major followed by its bias vector.
using ParamVector = Eigen::VectorXd;

enum class TransferKind {
    tansig,
    logsig,
    purelin,
    poslin,
    satlin,
    hardlim,
    tribas,
    radbas,
    elliotsig,
    compet,
};

inline constexpr TransferKind kAllTransfers[] = {
    TransferKind::tansig,  TransferKind::logsig, TransferKind::purelin,   TransferKind::poslin,
    TransferKind::satlin,  TransferKind::hardlim, TransferKind::tribas,   TransferKind::radbas,
    TransferKind::elliotsig, TransferKind::compet,
};

std::string_view to_string(TransferKind kind);
TransferKind parse_transfer(std::string_view name);

/// True for the transfers whose derivative is not identically zero.
bool is_differentiable(TransferKind kind);

/// Elementwise application, except compet which maps the vector to the
/// one-hot of its argmax (lowest index wins ties).
Vector transfer_apply(TransferKind kind, const Vector& z);

/// Elementwise derivative. hardlim and compet are defined to have zero
/// derivative everywhere; piecewise kinks take the right-hand derivative.
Vector transfer_derivative(TransferKind kind, const Vector& z);

struct NetworkLayout {
    std::vector<int> layer_sizes;          // input, hidden..., output
    std::vector<TransferKind> transfers;   // one per non-input layer

    void validate() const;
    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return transfers.size(); }
    Eigen::Index parameter_count() const;

    /// "1-50-1" style shorthand.
    std::string shape_string() const;

    /// Single hidden layer with the given transfer and a purelin output.
    static NetworkLayout single_hidden(int inputs, int hidden, int outputs,
                                       TransferKind hidden_transfer);

    bool operator==(const NetworkLayout&) const = default;
};

class Network {
public:
    Network(NetworkLayout layout, std::vector<Matrix> weights, std::vector<Vector> biases);

    static Network from_params(NetworkLayout layout, const ParamVector& params);

    const NetworkLayout& layout() const { return layout_; }
    const std::vector<Matrix>& weights() const { return weights_; }
    const std::vector<Vector>& biases() const { return biases_; }
    Eigen::Index parameter_count() const { return layout_.parameter_count(); }

    ParamVector flatten() const;
    Network with_params(const ParamVector& params) const { return from_params(layout_, params); }

private:
    NetworkLayout layout_;
    std::vector<Matrix> weights_;
    std::vector<Vector> biases_;
};

/// Seeded initialization: uniform [-0.5, 0.5] draws, hidden layers rescaled
/// with the Nguyen-Widrow factor 0.7 * n_hidden^(1/n_in).
Network init_weights(const NetworkLayout& layout, std::uint64_t seed);

/// Rows of X are samples. Returns an N x m matrix of outputs.
Matrix forward(const Network& net, const Matrix& X);

/// Gradient of beta * SSE + alpha * SSW via backpropagation, where
/// SSE = sum((Y - forward(X))^2) and SSW = sum of all parameters squared.
ParamVector gradient(const Network& net, const Matrix& X, const Matrix& Y, double beta,
                     double alpha);

/// Jacobian of the stacked outputs: row (i*m + j) is d output_j(x_i) / dw.
Matrix jacobian(const Network& net, const Matrix& X);

/// Outputs minus targets, stacked in the same row order as the Jacobian.
Vector stacked_residuals(const Matrix& predictions, const Matrix& targets);

}  // namespace brann
