#include "srcinv/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "srcinv/errors.hpp"
#include "srcinv/rng.hpp"

namespace srcinv {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::logsig: return "logsig";
        case Activation::tansig: return "tansig";
        case Activation::identity: return "identity";
    }
    return "logsig";
}

Activation activation_from_string(const std::string& s) {
    if (s == "logsig") return Activation::logsig;
    if (s == "tansig") return Activation::tansig;
    if (s == "identity") return Activation::identity;
    throw ValidationError("unknown activation '" + s + "'");
}

namespace {

double apply_activation(Activation a, double s) {
    switch (a) {
        case Activation::logsig: return 1.0 / (1.0 + std::exp(-s));
        case Activation::tansig: return std::tanh(s);
        case Activation::identity: return s;
    }
    return s;
}

/// Derivative expressed through the activation value o.
double activation_derivative(Activation a, double o) {
    switch (a) {
        case Activation::logsig: return o * (1.0 - o);
        case Activation::tansig: return 1.0 - o * o;
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

} // namespace

Topology Topology::parse(const std::string& spec) {
    Topology t;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ':')) {
        try {
            t.sizes.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw ParseError("topology: cannot parse '" + spec + "'");
        }
    }
    t.validate();
    return t;
}

std::string Topology::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < sizes.size(); ++i)
        out += (i ? ":" : "") + std::to_string(sizes[i]);
    return out;
}

void Topology::validate() const {
    if (sizes.size() != 4)
        throw ValidationError("topology: expected four layers (input:hidden:hidden:output)");
    for (int s : sizes)
        if (s < 1) throw ValidationError("topology: layer sizes must be >= 1");
}

MlpNetwork make_network(const std::vector<int>& sizes, std::uint64_t seed, Activation hidden,
                        Activation output) {
    if (sizes.size() < 2) throw ValidationError("network: need at least input and output layers");
    for (int s : sizes)
        if (s < 1) throw ValidationError("network: layer sizes must be >= 1");

    MlpNetwork net;
    RandomStream rng = RandomStream::derive(seed, 0x6d6c70ULL);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        Eigen::MatrixXd w(fan_out, fan_in);
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-0.5, 0.5) * scale;
        net.weights.push_back(w);
        net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
        net.prev_dw.push_back(Eigen::MatrixXd::Zero(fan_out, fan_in));
        net.prev_db.push_back(Eigen::VectorXd::Zero(fan_out));
        const bool last = l + 2 == sizes.size();
        net.activations.push_back(last ? output : hidden);
    }
    return net;
}

MlpNetwork init_network(const Topology& topology, std::uint64_t seed, Activation hidden,
                        Activation output) {
    topology.validate();
    return make_network(topology.sizes, seed, hidden, output);
}

ForwardResult forward_pass(const MlpNetwork& net, const Eigen::VectorXd& input) {
    if (input.size() != net.input_size())
        throw ValidationError("forward_pass: input length " + std::to_string(input.size()) +
                              " != " + std::to_string(net.input_size()));
    ForwardResult fr;
    fr.activations.reserve(net.n_layers() + 1);
    fr.activations.push_back(input);
    for (int l = 0; l < net.n_layers(); ++l) {
        Eigen::VectorXd s = net.weights[l] * fr.activations.back() + net.biases[l];
        for (Eigen::Index i = 0; i < s.size(); ++i)
            s[i] = apply_activation(net.activations[l], s[i]);
        fr.activations.push_back(std::move(s));
    }
    return fr;
}

namespace {

/// Local error gradients per layer for one pattern; also reports the SSE.
std::vector<Eigen::VectorXd> local_deltas(const MlpNetwork& net, const ForwardResult& fr,
                                          const Eigen::VectorXd& target, double& sse) {
    const int n_layers = net.n_layers();
    std::vector<Eigen::VectorXd> deltas(n_layers);

    const Eigen::VectorXd& out = fr.output();
    Eigen::VectorXd err = target - out;
    sse = err.squaredNorm();

    Eigen::VectorXd delta(out.size());
    for (Eigen::Index i = 0; i < out.size(); ++i)
        delta[i] = err[i] * activation_derivative(net.activations[n_layers - 1], out[i]);
    deltas[n_layers - 1] = delta;

    for (int l = n_layers - 2; l >= 0; --l) {
        const Eigen::VectorXd& o = fr.activations[l + 1];
        Eigen::VectorXd back = net.weights[l + 1].transpose() * deltas[l + 1];
        for (Eigen::Index i = 0; i < back.size(); ++i)
            back[i] *= activation_derivative(net.activations[l], o[i]);
        deltas[l] = std::move(back);
    }
    return deltas;
}

} // namespace

SseGradient backprop_gradient(const MlpNetwork& net, const Eigen::VectorXd& input,
                              const Eigen::VectorXd& target) {
    const ForwardResult fr = forward_pass(net, input);
    SseGradient g;
    const auto deltas = local_deltas(net, fr, target, g.sse);
    for (int l = 0; l < net.n_layers(); ++l) {
        g.dw.push_back(-deltas[l] * fr.activations[l].transpose());
        g.db.push_back(-deltas[l]);
    }
    return g;
}

double backprop_update(MlpNetwork& net, const Eigen::VectorXd& input,
                       const Eigen::VectorXd& target, double eta, double alpha) {
    if (target.size() != net.output_size())
        throw ValidationError("backprop_update: target length mismatch");
    const ForwardResult fr = forward_pass(net, input);
    double sse = 0.0;
    const auto deltas = local_deltas(net, fr, target, sse);

    for (int l = 0; l < net.n_layers(); ++l) {
        Eigen::MatrixXd dw =
            eta * deltas[l] * fr.activations[l].transpose() + alpha * net.prev_dw[l];
        Eigen::VectorXd db = eta * deltas[l] + alpha * net.prev_db[l];
        net.weights[l] += dw;
        net.biases[l] += db;
        net.prev_dw[l] = std::move(dw);
        net.prev_db[l] = std::move(db);
    }
    return sse;
}

void TrainingConfig::validate() const {
    if (!(eta > 0.0)) throw ValidationError("training: eta must be > 0");
    if (alpha < 0.0 || alpha >= 1.0) throw ValidationError("training: alpha must be in [0, 1)");
    if (max_iterations < 1) throw ValidationError("training: max_iterations must be >= 1");
}

TrainHistory train(MlpNetwork& net, const std::vector<ScaledPair>& train_set,
                   const std::vector<ScaledPair>& activation_set, const TrainingConfig& config) {
    config.validate();
    if (train_set.empty()) throw ValidationError("train: empty training set");

    TrainHistory history;
    history.train_sse.reserve(config.max_iterations);
    history.activation_sse.reserve(config.max_iterations);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.max_iterations; ++epoch) {
        RandomStream rng = RandomStream::derive(config.seed, 0x65706f6368ULL, epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
            std::swap(order[i - 1], order[j]);
        }

        double epoch_sse = 0.0;
        for (std::size_t idx : order)
            epoch_sse +=
                backprop_update(net, train_set[idx].input, train_set[idx].target, config.eta,
                                config.alpha);
        history.train_sse.push_back(epoch_sse);

        double act_sse = 0.0;
        for (const auto& p : activation_set)
            act_sse += (p.target - forward_pass(net, p.input).output()).squaredNorm();
        history.activation_sse.push_back(act_sse);
    }
    return history;
}

Scaler Scaler::fit(const std::vector<TrainingPair>& pairs, double lo, double hi) {
    if (pairs.empty()) throw ValidationError("scaler: no pairs to fit");
    Scaler s;
    s.lo = lo;
    s.hi = hi;
    const Eigen::Index ni = pairs.front().concentrations.size();
    const Eigen::Index no = pairs.front().emissions.size();
    s.in_min = pairs.front().concentrations;
    s.in_max = pairs.front().concentrations;
    s.out_min = pairs.front().emissions;
    s.out_max = pairs.front().emissions;
    for (const auto& p : pairs) {
        if (p.concentrations.size() != ni || p.emissions.size() != no)
            throw ValidationError("scaler: inconsistent pair dimensions");
        s.in_min = s.in_min.cwiseMin(p.concentrations);
        s.in_max = s.in_max.cwiseMax(p.concentrations);
        s.out_min = s.out_min.cwiseMin(p.emissions);
        s.out_max = s.out_max.cwiseMax(p.emissions);
    }
    // A constant feature has no usable range; widen it so the map stays
    // invertible.
    for (Eigen::Index i = 0; i < ni; ++i)
        if (s.in_max[i] - s.in_min[i] < 1e-12) {
            s.in_min[i] -= 0.5;
            s.in_max[i] += 0.5;
        }
    for (Eigen::Index i = 0; i < no; ++i)
        if (s.out_max[i] - s.out_min[i] < 1e-12) {
            s.out_min[i] -= 0.5;
            s.out_max[i] += 0.5;
        }
    return s;
}

namespace {

Eigen::VectorXd affine_to_band(const Eigen::VectorXd& x, const Eigen::VectorXd& mn,
                               const Eigen::VectorXd& mx, double lo, double hi) {
    Eigen::VectorXd y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        y[i] = lo + (hi - lo) * (x[i] - mn[i]) / (mx[i] - mn[i]);
    return y;
}

Eigen::VectorXd affine_from_band(const Eigen::VectorXd& y, const Eigen::VectorXd& mn,
                                 const Eigen::VectorXd& mx, double lo, double hi) {
    Eigen::VectorXd x(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i)
        x[i] = mn[i] + (mx[i] - mn[i]) * (y[i] - lo) / (hi - lo);
    return x;
}

} // namespace

Eigen::VectorXd Scaler::scale_input(const Eigen::VectorXd& x) const {
    return affine_to_band(x, in_min, in_max, lo, hi);
}
Eigen::VectorXd Scaler::scale_target(const Eigen::VectorXd& y) const {
    return affine_to_band(y, out_min, out_max, lo, hi);
}
Eigen::VectorXd Scaler::unscale_target(const Eigen::VectorXd& y) const {
    return affine_from_band(y, out_min, out_max, lo, hi);
}
Eigen::VectorXd Scaler::unscale_input(const Eigen::VectorXd& x) const {
    return affine_from_band(x, in_min, in_max, lo, hi);
}

bool Scaler::input_in_hull(const Eigen::VectorXd& x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x[i] < in_min[i] || x[i] > in_max[i]) return false;
    return true;
}

std::vector<ScaledPair> scale_pairs(const Scaler& scaler, const std::vector<TrainingPair>& pairs) {
    std::vector<ScaledPair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs)
        out.push_back({scaler.scale_input(p.concentrations), scaler.scale_target(p.emissions)});
    return out;
}

InversionResult invert(const MlpNetwork& net, const Scaler& scaler,
                       const ObservationVector& observation) {
    InversionResult result;
    result.extrapolated = !scaler.input_in_hull(observation);
    const Eigen::VectorXd scaled = scaler.scale_input(observation);
    const Eigen::VectorXd out = forward_pass(net, scaled).output();
    // saturated sigmoid outputs can land slightly below the target band
    result.rates = scaler.unscale_target(out).cwiseMax(0.0);
    return result;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_vector(std::ofstream& out, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << fmt(v[i]);
    out << "\n";
}

Eigen::VectorXd read_vector(std::istream& in, Eigen::Index n, const std::string& what) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(in >> v[i])) throw ParseError("network file: truncated " + what);
    return v;
}

} // namespace

void save_network(const MlpNetwork& net, const Scaler& scaler, const std::string& path,
                  const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "srcinv-mlp 1\n";
    out << "sizes";
    out << " " << net.input_size();
    for (int l = 0; l < net.n_layers(); ++l) out << " " << net.weights[l].rows();
    out << "\n";
    out << "activations";
    for (Activation a : net.activations) out << " " << to_string(a);
    out << "\n";
    for (int l = 0; l < net.n_layers(); ++l) {
        out << "layer " << l << "\n";
        for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c)
                out << (c ? " " : "") << fmt(net.weights[l](r, c));
            out << "\n";
        }
        write_vector(out, net.biases[l]);
    }
    out << "scaler " << fmt(scaler.lo) << " " << fmt(scaler.hi) << "\n";
    write_vector(out, scaler.in_min);
    write_vector(out, scaler.in_max);
    write_vector(out, scaler.out_min);
    write_vector(out, scaler.out_max);
}

void load_network(const std::string& path, MlpNetwork& net, Scaler& scaler) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file '" + path + "'");
    std::string line;
    // Skip leading comments.
    while (std::getline(in, line) && (line.empty() || line[0] == '#')) {}
    std::istringstream magic(line);
    std::string tag;
    int version = 0;
    magic >> tag >> version;
    if (tag != "srcinv-mlp" || version != 1)
        throw ParseError("network file '" + path + "': unsupported format");

    std::string key;
    in >> key;
    if (key != "sizes") throw ParseError("network file: expected sizes");
    std::getline(in, line);
    std::istringstream ss(line);
    std::vector<int> sizes;
    int n;
    while (ss >> n) sizes.push_back(n);
    if (sizes.size() < 2) throw ParseError("network file: bad sizes line");

    in >> key;
    if (key != "activations") throw ParseError("network file: expected activations");
    net = MlpNetwork{};
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        std::string a;
        if (!(in >> a)) throw ParseError("network file: truncated activations");
        net.activations.push_back(activation_from_string(a));
    }

    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        int idx;
        in >> key >> idx;
        if (key != "layer" || idx != static_cast<int>(l))
            throw ParseError("network file: expected layer " + std::to_string(l));
        Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                if (!(in >> w(r, c))) throw ParseError("network file: truncated weights");
        net.weights.push_back(w);
        net.biases.push_back(read_vector(in, sizes[l + 1], "biases"));
        net.prev_dw.push_back(Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]));
        net.prev_db.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
    }

    in >> key;
    if (key != "scaler") throw ParseError("network file: expected scaler block");
    in >> scaler.lo >> scaler.hi;
    const Eigen::Index ni = sizes.front();
    const Eigen::Index no = sizes.back();
    scaler.in_min = read_vector(in, ni, "scaler");
    scaler.in_max = read_vector(in, ni, "scaler");
    scaler.out_min = read_vector(in, no, "scaler");
    scaler.out_max = read_vector(in, no, "scaler");
}

} // namespace srcinv
