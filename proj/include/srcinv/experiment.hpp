#pragma once

#include <map>
#include <string>
#include <vector>

#include "srcinv/dispersion.hpp"
#include "srcinv/inversion.hpp"
#include "srcinv/mlp.hpp"
#include "srcinv/source_receptor.hpp"

namespace srcinv {

/// Cell labels are "A1".."A25", row-major with A1 at the origin corner:
/// A_k maps to 0-based grid index k-1.
int cell_index_from_label(const std::string& label, const DomainGrid& grid);
std::string cell_label_from_index(int index);

/// Everything needed to run the synthetic experiment end to end. Defaults
/// reproduce the 25-cell domain, the six sensors and the twelve active
/// cells (rates 10 and 20 g m^-3 s^-1).
struct ExperimentConfig {
    DomainGrid grid;
    std::vector<SensorSpec> sensors;
    std::vector<std::string> active_cells;
    std::map<std::string, double> exact_rates;  // per active cell label

    std::string meteorology_path;  // empty: built-in tower records
    TurbulenceParams turbulence;
    SimulationConfig sim;

    double noise_sigma = 0.05;
    std::uint64_t noise_seed = 1001;

    std::string topology = "6:15:30:12";
    TrainingConfig training;
    int n_train = 60;
    int n_activation = 30;
    int n_generalization = 30;
    /// "scenario": pairs perturb the exact emission field multiplicatively
    /// (spread defaults to the noise level); "uniform": independent uniform
    /// rates in [rate_min, rate_max].
    std::string sampling_mode = "scenario";
    double train_spread = -1.0;  // < 0: use noise_sigma
    double rate_min = 0.0;
    double rate_max = 30.0;

    Regularizer regularizer = Regularizer::max_entropy;
    double s_max = 30.0;
    double lambda = -1.0;  // < 0: discrepancy-principle selection
    QnConfig qn;
    PsoConfig pso;

    static ExperimentConfig defaults();
    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
    std::string to_json_text() const;

    /// FNV-1a hash of the canonical serialized config, for output headers.
    std::string config_hash() const;

    std::vector<int> active_cell_indices() const;
    EmissionVector exact_emissions() const;
    std::vector<WindRecord> wind_records() const;
    void validate() const;
};

std::vector<WindRecord> default_wind_records();

/// Side-by-side per-cell estimates plus summary error metrics.
struct InversionReport {
    struct Row {
        std::string cell;
        double exact = 0.0;
        double qn = 0.0;
        double pso = 0.0;
        double ann = 0.0;
    };
    std::vector<Row> rows;
    std::string ann_topology;
    double qn_runtime_s = 0.0;
    double pso_runtime_s = 0.0;
    double ann_runtime_s = 0.0;

    struct Metrics {
        double max_rel_error = 0.0;
        double rms_error = 0.0;
    };
    Metrics metrics(const std::string& solver) const;  // "qn", "pso", "ann"

    void save_table(const std::string& path, const std::string& header_comment = {}) const;
    /// 25-entry emission map (inactive cells zero) for one solver column,
    /// or "exact".
    void save_grid(const std::string& path, const std::string& solver, const DomainGrid& grid,
                   const std::vector<std::string>& active_cells,
                   const std::string& header_comment = {}) const;
};

/// Pipeline stages. Every stage is a pure function of (config, inputs).
DetectionCounts run_simulate(const ExperimentConfig& cfg);
TransitionMatrix stage_build_matrix(const ExperimentConfig& cfg, const DetectionCounts& counts);

struct SynthData {
    ObservationVector exact_observation;
    ObservationVector noisy_observation;
    DataSplit split;
};
SynthData run_synth(const ExperimentConfig& cfg, const TransitionMatrix& matrix);

struct TrainedModel {
    MlpNetwork net;
    Scaler scaler;
    TrainHistory history;
};
TrainedModel run_train(const ExperimentConfig& cfg, const DataSplit& split);

InversionReport run_invert_all(const ExperimentConfig& cfg, const TransitionMatrix& matrix,
                               const ObservationVector& noisy_observation,
                               const MlpNetwork& net, const Scaler& scaler);

} // namespace srcinv
