// Command-line harness for the dispersion / source-estimation pipeline.
//
// Stages: simulate -> matrix -> synth -> train -> invert / compare.
// Every stage is deterministic for a fixed config and seed; outputs are
// delimited text with a header recording the config hash and seed.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "srcinv/errors.hpp"
#include "srcinv/experiment.hpp"

namespace fs = std::filesystem;
using namespace srcinv;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    long long seed = -1;
    double noise = -1.0;
    std::string topology;
    std::string direction;
    int particles = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Experiment config (JSON)");
    cmd->add_option("--out", opts.out_dir, "Output directory");
    cmd->add_option("--seed", opts.seed, "Master seed (overrides config seeds)");
    cmd->add_option("--noise", opts.noise, "Noise level sigma (e.g. 0.05 or 0.10)");
    cmd->add_option("--topology", opts.topology, "Network topology, e.g. 6:15:30:12");
    cmd->add_option("--direction", opts.direction, "Integration direction: forward|backward");
    cmd->add_option("--particles", opts.particles, "Particles per source");
}

ExperimentConfig make_config(const CommonOpts& opts) {
    ExperimentConfig cfg = opts.config_path.empty()
                               ? ExperimentConfig::defaults()
                               : ExperimentConfig::from_json_file(opts.config_path);
    if (opts.seed >= 0) {
        const auto s = static_cast<std::uint64_t>(opts.seed);
        cfg.sim.seed = s;
        cfg.noise_seed = s + 1;
        cfg.training.seed = s + 2;
        cfg.pso.seed = s + 3;
    }
    if (opts.noise >= 0.0) cfg.noise_sigma = opts.noise;
    if (!opts.topology.empty()) cfg.topology = opts.topology;
    if (!opts.direction.empty()) cfg.sim.direction = direction_from_string(opts.direction);
    if (opts.particles >= 0) {
        if (opts.particles == 0) throw ValidationError("--particles must be >= 1");
        cfg.sim.n_particles_per_source = opts.particles;
    }
    return cfg;
}

std::string stamp(const ExperimentConfig& cfg) {
    return "config_hash=" + cfg.config_hash() + " seed=" + std::to_string(cfg.sim.seed);
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
    fs::create_directories(opts.out_dir);
    return (fs::path(opts.out_dir) / name).string();
}

int cmd_simulate(const CommonOpts& opts) {
    ExperimentConfig cfg = make_config(opts);
    if (!cfg.meteorology_path.empty() && !fs::exists(cfg.meteorology_path))
        throw ValidationError("meteorology file '" + cfg.meteorology_path + "' not found");
    const auto t0 = std::chrono::steady_clock::now();
    const DetectionCounts counts = run_simulate(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string path = out_path(opts, "counts.txt");
    counts.save(path, stamp(cfg));

    std::int64_t total = 0;
    for (std::int64_t c : counts.counts) total += c;
    std::cout << "simulate: " << to_string(cfg.sim.direction) << ", "
              << cfg.sim.n_particles_per_source << " particles per source, " << counts.n_sources
              << " release origins, " << total << " detections, " << secs << " s\n"
              << "wrote " << path << "\n";
    return 0;
}

int cmd_matrix(const CommonOpts& opts, const std::string& counts_path) {
    ExperimentConfig cfg = make_config(opts);
    const DetectionCounts counts = DetectionCounts::load(counts_path);
    const TransitionMatrix matrix = stage_build_matrix(cfg, counts);
    const std::string path = out_path(opts, "matrix.txt");
    matrix.save(path, stamp(cfg) + " direction=" + to_string(counts.direction));
    std::cout << "matrix: " << matrix.n_receptors() << " x " << matrix.n_sources() << ", wrote "
              << path << "\n";
    return 0;
}

int cmd_synth(const CommonOpts& opts, const std::string& matrix_path) {
    ExperimentConfig cfg = make_config(opts);
    const TransitionMatrix matrix = TransitionMatrix::load(matrix_path);
    const SynthData synth = run_synth(cfg, matrix);

    save_vector(synth.exact_observation, out_path(opts, "observation_exact.txt"), stamp(cfg));
    save_vector(synth.noisy_observation, out_path(opts, "observation.txt"), stamp(cfg));
    save_pairs(synth.split.train, out_path(opts, "train.txt"), stamp(cfg));
    save_pairs(synth.split.activation, out_path(opts, "activation.txt"), stamp(cfg));
    save_pairs(synth.split.generalization, out_path(opts, "generalization.txt"), stamp(cfg));
    std::cout << "synth: sigma=" << cfg.noise_sigma << ", " << synth.split.train.size()
              << " train / " << synth.split.activation.size() << " activation / "
              << synth.split.generalization.size() << " generalization pairs\n";
    return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& train_path,
              const std::string& activation_path) {
    ExperimentConfig cfg = make_config(opts);
    DataSplit split;
    split.train = load_pairs(train_path);
    if (!activation_path.empty()) split.activation = load_pairs(activation_path);

    const TrainedModel model = run_train(cfg, split);
    const std::string path = out_path(opts, "network.txt");
    save_network(model.net, model.scaler, path, stamp(cfg) + " topology=" + cfg.topology);

    std::ofstream hist(out_path(opts, "train_history.txt"));
    hist << "# " << stamp(cfg) << "\n# epoch train_sse activation_sse\n";
    for (std::size_t e = 0; e < model.history.train_sse.size(); ++e) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%zu %.17g %.17g", e, model.history.train_sse[e],
                      model.history.activation_sse[e]);
        hist << buf << "\n";
    }
    std::cout << "train: topology " << cfg.topology << ", " << model.history.train_sse.size()
              << " epochs, final SSE " << model.history.train_sse.back() << ", wrote " << path
              << "\n";
    return 0;
}

int cmd_invert(const CommonOpts& opts, const std::string& network_path,
               const std::string& observation_path) {
    ExperimentConfig cfg = make_config(opts);
    MlpNetwork net;
    Scaler scaler;
    load_network(network_path, net, scaler);
    const ObservationVector obs = load_vector(observation_path);

    const InversionResult result = invert(net, scaler, obs);
    save_vector(result.rates, out_path(opts, "estimate_ann.txt"), stamp(cfg));
    if (result.extrapolated)
        std::cerr << "warning: observation outside the training input range; "
                     "estimate is an extrapolation\n";
    std::cout << "invert: wrote " << out_path(opts, "estimate_ann.txt") << "\n";
    return 0;
}

int cmd_compare(const CommonOpts& opts, const std::string& matrix_path,
                const std::string& observation_path, const std::string& network_path) {
    ExperimentConfig cfg = make_config(opts);
    const TransitionMatrix matrix = TransitionMatrix::load(matrix_path);
    const ObservationVector obs = load_vector(observation_path);
    MlpNetwork net;
    Scaler scaler;
    load_network(network_path, net, scaler);

    const InversionReport report = run_invert_all(cfg, matrix, obs, net, scaler);
    report.save_table(out_path(opts, "report.txt"), stamp(cfg));
    for (const char* solver : {"exact", "qn", "pso", "ann"})
        report.save_grid(out_path(opts, std::string("grid_") + solver + ".txt"), solver, cfg.grid,
                         cfg.active_cells, stamp(cfg));

    std::cout << "compare:\n";
    for (const char* solver : {"qn", "pso", "ann"}) {
        const auto m = report.metrics(solver);
        std::cout << "  " << solver << ": max rel error " << m.max_rel_error << ", rms "
                  << m.rms_error << "\n";
    }
    std::cout << "  runtime_s: qn " << report.qn_runtime_s << ", pso " << report.pso_runtime_s
              << ", ann " << report.ann_runtime_s << "\n";
    std::cout << "wrote " << out_path(opts, "report.txt") << " and grid files\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lagrangian dispersion and surface emission-rate estimation toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string counts_path = "counts.txt";
    std::string matrix_path = "matrix.txt";
    std::string train_path = "train.txt";
    std::string activation_path;
    std::string network_path = "network.txt";
    std::string observation_path = "observation.txt";

    auto* simulate = app.add_subcommand("simulate", "Run the particle dispersion model");
    add_common(simulate, opts);

    auto* matrix = app.add_subcommand("matrix", "Build the source-receptor transition matrix");
    add_common(matrix, opts);
    matrix->add_option("--counts", counts_path, "Detection counts file");

    auto* synth = app.add_subcommand("synth", "Generate noisy observations and training sets");
    add_common(synth, opts);
    synth->add_option("--matrix", matrix_path, "Transition matrix file");

    auto* train = app.add_subcommand("train", "Train the perceptron on synthetic pairs");
    add_common(train, opts);
    train->add_option("--train", train_path, "Training pairs file");
    train->add_option("--activation", activation_path, "Activation pairs file");

    auto* invert = app.add_subcommand("invert", "Estimate emissions with a trained network");
    add_common(invert, opts);
    invert->add_option("--network", network_path, "Trained network file");
    invert->add_option("--observation", observation_path, "Observed concentrations file");

    auto* compare = app.add_subcommand("compare", "Run all solvers and emit the comparison report");
    add_common(compare, opts);
    compare->add_option("--matrix", matrix_path, "Transition matrix file");
    compare->add_option("--observation", observation_path, "Observed concentrations file");
    compare->add_option("--network", network_path, "Trained network file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(opts);
        if (matrix->parsed()) return cmd_matrix(opts, counts_path);
        if (synth->parsed()) return cmd_synth(opts, matrix_path);
        if (train->parsed()) return cmd_train(opts, train_path, activation_path);
        if (invert->parsed()) return cmd_invert(opts, network_path, observation_path);
        if (compare->parsed()) return cmd_compare(opts, matrix_path, observation_path, network_path);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
