#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "srcinv/source_receptor.hpp"

namespace srcinv {

enum class Regularizer { max_entropy, tikhonov0 };

std::string to_string(Regularizer r);
Regularizer regularizer_from_string(const std::string& s);

/// Data-misfit plus regularization objective for the emission inverse
/// problem: F(S) = ||M S - c_obs||^2 + lambda * R(S).
///
/// max_entropy: R(S) = sum_j p_j ln p_j with p_j = S_j / s_max (negated
/// entropy; requires S > 0). tikhonov0: R(S) = ||S||^2.
struct InverseObjective {
    Eigen::MatrixXd m;
    ObservationVector c_obs;
    double lambda = 0.0;
    Regularizer kind = Regularizer::max_entropy;
    double s_max = 30.0;

    void validate() const;
};

struct ObjectiveValue {
    double value = 0.0;
    Eigen::VectorXd gradient;
    double misfit = 0.0;       // ||M S - c||^2
    double regularizer = 0.0;  // R(S)
};

ObjectiveValue objective_eval(const InverseObjective& obj, const EmissionVector& s);

/// Scalar function with analytic gradient, for the generic minimizers.
using GradFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct QnConfig {
    int max_iterations = 500;
    double grad_tol = 1e-8;
    double armijo_c1 = 1e-4;
    double backtrack = 0.5;
    double initial_rate = 15.0;  // uniform starting guess, g m^-3 s^-1
};

struct SolveDiagnostics {
    int iterations = 0;
    double final_value = 0.0;
    double final_misfit = 0.0;
    double final_regularizer = 0.0;
    bool converged = false;
    /// Per-iteration (value, misfit, regularizer) rows.
    std::vector<std::array<double, 3>> history;

    void save(const std::string& path, const std::string& header_comment = {}) const;
};

struct SolveResult {
    EmissionVector s;
    SolveDiagnostics diagnostics;
};

/// Generic BFGS with Armijo backtracking line search; minimizes fn from x0.
Eigen::VectorXd minimize_bfgs(const GradFn& fn, const Eigen::VectorXd& x0, int max_iterations,
                              double grad_tol, double armijo_c1 = 1e-4, double backtrack = 0.5,
                              SolveDiagnostics* diag = nullptr);

/// Quasi-Newton solve of the regularized objective in log-emission
/// variables y = ln S (keeps every iterate strictly positive).
SolveResult quasi_newton_solve(const InverseObjective& obj, const QnConfig& config);

struct PsoConfig {
    int swarm_size = 40;
    double inertia = 0.729;
    double cognitive = 1.494;
    double social = 1.494;
    int max_iterations = 1000;
    Eigen::VectorXd lower;  // per-dimension bounds
    Eigen::VectorXd upper;
    std::uint64_t seed = 7;

    void validate() const;
};

/// Generic global-best particle swarm minimizer, deterministic per seed.
Eigen::VectorXd pso_minimize(const std::function<double(const Eigen::VectorXd&)>& fn,
                             const PsoConfig& config, SolveDiagnostics* diag = nullptr);

/// PSO solve of the regularized objective (entropy evaluation floors the
/// position at a small positive epsilon).
SolveResult pso_solve(const InverseObjective& obj, const PsoConfig& config);

/// Discrepancy-principle choice of lambda over a logarithmic grid: the grid
/// point whose solved misfit is closest to (sigma * ||c_obs||)^2. Returns
/// 1e-6 for noiseless data.
double select_lambda(const InverseObjective& obj_template, double sigma,
                     const ObservationVector& c_obs,
                     const std::vector<double>& grid = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0,
                                                        1e1, 1e2});

} // namespace srcinv
