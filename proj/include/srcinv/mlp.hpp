#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "srcinv/source_receptor.hpp"

namespace srcinv {

enum class Activation { logsig, tansig, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Layer widths, input first: (input, hidden1, hidden2, output).
struct Topology {
    std::vector<int> sizes;

    static Topology parse(const std::string& spec);  // "6:15:30:12"
    std::string to_string() const;
    void validate() const;  // exactly four layers, all sizes >= 1
};

/// Feed-forward perceptron with per-layer weight matrices, bias vectors and
/// the previous applied corrections (momentum state).
struct MlpNetwork {
    std::vector<Eigen::MatrixXd> weights;    // weights[l]: (sizes[l+1] x sizes[l])
    std::vector<Eigen::VectorXd> biases;
    std::vector<Eigen::MatrixXd> prev_dw;
    std::vector<Eigen::VectorXd> prev_db;
    std::vector<Activation> activations;     // one per non-input layer

    int n_layers() const { return static_cast<int>(weights.size()); }
    int input_size() const { return static_cast<int>(weights.front().cols()); }
    int output_size() const { return static_cast<int>(weights.back().rows()); }
};

/// Network with arbitrary layer widths (>= 2 entries). Weights start uniform
/// in [-0.5, 0.5] scaled by 1/sqrt(fan-in); biases and momentum state zero.
MlpNetwork make_network(const std::vector<int>& sizes, std::uint64_t seed,
                        Activation hidden = Activation::logsig,
                        Activation output = Activation::logsig);

/// Network from a topology string: requires a valid four-layer topology.
MlpNetwork init_network(const Topology& topology, std::uint64_t seed,
                        Activation hidden = Activation::logsig,
                        Activation output = Activation::logsig);

struct ForwardResult {
    /// activations[0] is the input, activations.back() the network output.
    std::vector<Eigen::VectorXd> activations;
    const Eigen::VectorXd& output() const { return activations.back(); }
};

ForwardResult forward_pass(const MlpNetwork& net, const Eigen::VectorXd& input);

struct SseGradient {
    std::vector<Eigen::MatrixXd> dw;  // d(SSE/2)/dW per layer
    std::vector<Eigen::VectorXd> db;
    double sse = 0.0;
};

/// Analytic gradient of half the sum-squared error for one pattern
/// (finite-difference checkable; the momentum update applies -eta times it).
SseGradient backprop_gradient(const MlpNetwork& net, const Eigen::VectorXd& input,
                              const Eigen::VectorXd& target);

/// One incremental momentum-backprop step on a single (input, target)
/// pattern: dw = eta * delta * o^T + alpha * dw_old, biases treated as
/// weights from a unit activation. Returns the pre-update sum-squared error.
double backprop_update(MlpNetwork& net, const Eigen::VectorXd& input,
                       const Eigen::VectorXd& target, double eta, double alpha);

struct TrainingConfig {
    double eta = 0.1;
    double alpha = 0.5;
    int max_iterations = 20000;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_sse;       // per epoch, summed over patterns
    std::vector<double> activation_sse;  // per epoch, on the activation set
};

struct ScaledPair {
    Eigen::VectorXd input;
    Eigen::VectorXd target;
};

/// Epoch training on already-scaled patterns. Patterns are visited in a
/// fresh seeded shuffle order every epoch; stops at max_iterations epochs.
TrainHistory train(MlpNetwork& net, const std::vector<ScaledPair>& train_set,
                   const std::vector<ScaledPair>& activation_set, const TrainingConfig& config);

/// Affine min-max map of inputs and targets into [lo, hi] (default
/// [0.1, 0.9]) so sigmoid outputs can represent physical targets.
struct Scaler {
    Eigen::VectorXd in_min, in_max;
    Eigen::VectorXd out_min, out_max;
    double lo = 0.1;
    double hi = 0.9;

    static Scaler fit(const std::vector<TrainingPair>& pairs, double lo = 0.1, double hi = 0.9);

    Eigen::VectorXd scale_input(const Eigen::VectorXd& x) const;
    Eigen::VectorXd scale_target(const Eigen::VectorXd& y) const;
    Eigen::VectorXd unscale_target(const Eigen::VectorXd& y) const;
    Eigen::VectorXd unscale_input(const Eigen::VectorXd& x) const;

    /// True when x lies inside the fitted input range on every component.
    bool input_in_hull(const Eigen::VectorXd& x) const;
};

std::vector<ScaledPair> scale_pairs(const Scaler& scaler, const std::vector<TrainingPair>& pairs);

struct InversionResult {
    EmissionVector rates;
    /// Set when the observation falls outside the training input hull; the
    /// estimate is an extrapolation and should be treated with suspicion.
    bool extrapolated = false;
};

InversionResult invert(const MlpNetwork& net, const Scaler& scaler,
                       const ObservationVector& observation);

/// Versioned plain-text serialization of network + scaler; round trips are
/// bit exact.
void save_network(const MlpNetwork& net, const Scaler& scaler, const std::string& path,
                  const std::string& header_comment = {});
void load_network(const std::string& path, MlpNetwork& net, Scaler& scaler);

} // namespace srcinv
