#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "srcinv/dispersion.hpp"

namespace srcinv {

/// Emission rates per active cell, g m^-3 s^-1.
using EmissionVector = Eigen::VectorXd;
/// Concentrations per sensor, g m^-3.
using ObservationVector = Eigen::VectorXd;

/// Linear operator M with C = M * S (entries in seconds: concentration per
/// unit emission rate), estimated from particle crossing counts.
struct TransitionMatrix {
    Eigen::MatrixXd m;
    std::vector<int> receptor_ids;
    std::vector<int> source_ids;  // grid cell indices of the active cells

    int n_receptors() const { return static_cast<int>(m.rows()); }
    int n_sources() const { return static_cast<int>(m.cols()); }

    void save(const std::string& path, const std::string& header_comment = {}) const;
    static TransitionMatrix load(const std::string& path);
};

/// Multiplicative Gaussian observation noise: c' = c * (1 + sigma * mu).
struct NoiseModel {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

/// Forward-run matrix entry: M_ij = (V_Sj / V_Ri) * (dt / N_Sj) * N_Rij.
/// Source volumes come from the grid cells, receptor volumes from the
/// sensors' sampling boxes.
TransitionMatrix build_matrix_forward(const DetectionCounts& counts, const DomainGrid& grid,
                                      const std::vector<SensorSpec>& sensors,
                                      const std::vector<int>& source_cells, double dt);

/// Backward-run matrix entry: M_ij = (dt / N_i) * N_Sij, with N_i the number
/// of particles released at receptor i.
TransitionMatrix build_matrix_backward(const DetectionCounts& counts,
                                       const std::vector<int>& source_cells, double dt);

ObservationVector predict_concentrations(const TransitionMatrix& m, const EmissionVector& s);

/// Applies the multiplicative noise with one fresh standard normal draw per
/// component; negative results are clamped to zero.
ObservationVector add_noise(const ObservationVector& exact, const NoiseModel& model);

/// Same, but the caller supplies the mu draws (test hook).
ObservationVector add_noise_with(const ObservationVector& exact, double sigma,
                                 const std::function<double()>& draw_mu);

struct TrainingPair {
    EmissionVector emissions;
    ObservationVector concentrations;
};

/// Emission sampling for synthetic training data.
///
/// uniform: every component independent uniform in [rate_min, rate_max].
/// scenario: multiplicative perturbations of a base emission field,
///   S_j = base_j * (1 + spread * mu), clamped at zero. This mirrors the way
///   the synthetic experiment perturbs the exact solution.
struct EmissionSampler {
    enum class Kind { uniform, scenario };
    Kind kind = Kind::uniform;
    double rate_min = 0.0;
    double rate_max = 30.0;
    EmissionVector base;    // scenario mode
    double spread = 0.05;   // scenario mode

    static EmissionSampler uniform_range(double lo, double hi);
    static EmissionSampler around(const EmissionVector& base, double spread);
};

std::vector<TrainingPair> generate_training_set(const TransitionMatrix& m, int n_pairs,
                                                const EmissionSampler& sampler,
                                                const NoiseModel& noise);

struct DataSplit {
    std::vector<TrainingPair> train;
    std::vector<TrainingPair> activation;
    std::vector<TrainingPair> generalization;
};

/// Disjoint, exhaustive split into the three network stages (sizes must sum
/// to the number of pairs).
DataSplit split_pairs(const std::vector<TrainingPair>& pairs, int n_train, int n_activation,
                      int n_generalization);

void save_pairs(const std::vector<TrainingPair>& pairs, const std::string& path,
                const std::string& header_comment = {});
std::vector<TrainingPair> load_pairs(const std::string& path);

void save_vector(const Eigen::VectorXd& v, const std::string& path,
                 const std::string& header_comment = {});
Eigen::VectorXd load_vector(const std::string& path);

} // namespace srcinv
