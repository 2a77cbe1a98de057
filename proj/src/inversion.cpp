#include "srcinv/inversion.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "srcinv/errors.hpp"
#include "srcinv/rng.hpp"

namespace srcinv {

std::string to_string(Regularizer r) {
    return r == Regularizer::max_entropy ? "max-entropy" : "tikhonov0";
}

Regularizer regularizer_from_string(const std::string& s) {
    if (s == "max-entropy") return Regularizer::max_entropy;
    if (s == "tikhonov0") return Regularizer::tikhonov0;
    throw ValidationError("unknown regularizer '" + s + "'");
}

void InverseObjective::validate() const {
    if (lambda < 0.0) throw ValidationError("objective: lambda must be >= 0");
    if (!(s_max > 0.0)) throw ValidationError("objective: s_max must be > 0");
    if (m.rows() != c_obs.size())
        throw ValidationError("objective: matrix rows do not match observation length");
}

ObjectiveValue objective_eval(const InverseObjective& obj, const EmissionVector& s) {
    obj.validate();
    if (s.size() != obj.m.cols())
        throw ValidationError("objective: emission vector length mismatch");

    ObjectiveValue ov;
    const Eigen::VectorXd residual = obj.m * s - obj.c_obs;
    ov.misfit = residual.squaredNorm();
    ov.gradient = 2.0 * obj.m.transpose() * residual;

    if (obj.kind == Regularizer::max_entropy) {
        double entropy_sum = 0.0;
        Eigen::VectorXd reg_grad(s.size());
        for (Eigen::Index j = 0; j < s.size(); ++j) {
            if (!(s[j] > 0.0))
                throw std::domain_error("objective: max-entropy needs strictly positive rates");
            const double p = s[j] / obj.s_max;
            entropy_sum += p * std::log(p);
            reg_grad[j] = (std::log(p) + 1.0) / obj.s_max;
        }
        ov.regularizer = entropy_sum;
        ov.gradient += obj.lambda * reg_grad;
    } else {
        ov.regularizer = s.squaredNorm();
        ov.gradient += 2.0 * obj.lambda * s;
    }
    ov.value = ov.misfit + obj.lambda * ov.regularizer;
    return ov;
}

Eigen::VectorXd minimize_bfgs(const GradFn& fn, const Eigen::VectorXd& x0, int max_iterations,
                              double grad_tol, double armijo_c1, double backtrack,
                              SolveDiagnostics* diag) {
    const Eigen::Index n = x0.size();
    Eigen::VectorXd x = x0;
    Eigen::VectorXd g(n);
    double fx = fn(x, g);
    if (!std::isfinite(fx))
        throw std::runtime_error("minimize_bfgs: objective not finite at the starting point");

    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
    int it = 0;
    bool converged = g.norm() < grad_tol;

    for (; it < max_iterations && !converged; ++it) {
        Eigen::VectorXd direction = -(h_inv * g);
        if (direction.dot(g) >= 0.0) {
            // Curvature information went bad; restart from steepest descent.
            h_inv.setIdentity();
            direction = -g;
        }

        double step = 1.0;
        const double slope = g.dot(direction);
        Eigen::VectorXd x_new;
        Eigen::VectorXd g_new(n);
        double f_new = fx;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * direction;
            f_new = fn(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= fx + armijo_c1 * step * slope) {
                accepted = true;
                break;
            }
            step *= backtrack;
        }
        if (!accepted) break;

        const Eigen::VectorXd s_vec = x_new - x;
        const Eigen::VectorXd y_vec = g_new - g;
        const double sy = s_vec.dot(y_vec);
        if (sy > 1e-12 * s_vec.norm() * y_vec.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
            h_inv = (eye - rho * s_vec * y_vec.transpose()) * h_inv *
                        (eye - rho * y_vec * s_vec.transpose()) +
                    rho * s_vec * s_vec.transpose();
        }

        x = std::move(x_new);
        g = g_new;
        fx = f_new;
        if (diag) diag->history.push_back({fx, 0.0, 0.0});
        converged = g.norm() < grad_tol;
    }

    if (diag) {
        diag->iterations = it;
        diag->final_value = fx;
        diag->converged = converged;
    }
    return x;
}

SolveResult quasi_newton_solve(const InverseObjective& obj, const QnConfig& config) {
    obj.validate();
    if (!(config.grad_tol > 0.0)) throw ValidationError("quasi-newton: grad_tol must be > 0");
    if (config.max_iterations < 1)
        throw ValidationError("quasi-newton: max_iterations must be >= 1");

    const Eigen::Index n = obj.m.cols();
    SolveResult result;

    // Work in y = ln S; the chain rule gives dF/dy = S * dF/dS, and every
    // iterate maps back to a strictly positive emission vector.
    const GradFn fn = [&obj](const Eigen::VectorXd& y, Eigen::VectorXd& grad) {
        const Eigen::VectorXd s = y.array().exp();
        const ObjectiveValue ov = objective_eval(obj, s);
        grad = ov.gradient.cwiseProduct(s);
        return ov.value;
    };

    const Eigen::VectorXd y0 =
        Eigen::VectorXd::Constant(n, std::log(config.initial_rate));
    const Eigen::VectorXd y = minimize_bfgs(fn, y0, config.max_iterations, config.grad_tol,
                                            config.armijo_c1, config.backtrack,
                                            &result.diagnostics);
    result.s = y.array().exp();

    const ObjectiveValue final_ov = objective_eval(obj, result.s);
    result.diagnostics.final_value = final_ov.value;
    result.diagnostics.final_misfit = final_ov.misfit;
    result.diagnostics.final_regularizer = final_ov.regularizer;
    for (auto& row : result.diagnostics.history) {
        row[1] = final_ov.misfit;  // per-iteration misfit split not retained by the generic core
        row[2] = final_ov.regularizer;
    }
    return result;
}

void PsoConfig::validate() const {
    if (swarm_size < 2) throw ValidationError("pso: swarm_size must be >= 2");
    if (max_iterations < 0) throw ValidationError("pso: max_iterations must be >= 0");
    if (lower.size() == 0 || lower.size() != upper.size())
        throw ValidationError("pso: bounds missing or mismatched");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
        if (!(lower[i] < upper[i])) throw ValidationError("pso: need lower < upper per dimension");
}

Eigen::VectorXd pso_minimize(const std::function<double(const Eigen::VectorXd&)>& fn,
                             const PsoConfig& config, SolveDiagnostics* diag) {
    config.validate();
    const Eigen::Index n = config.lower.size();
    RandomStream rng = RandomStream::derive(config.seed, 0x70736fULL);

    std::vector<Eigen::VectorXd> pos(config.swarm_size), vel(config.swarm_size),
        pbest(config.swarm_size);
    std::vector<double> pbest_val(config.swarm_size);
    Eigen::VectorXd gbest;
    double gbest_val = std::numeric_limits<double>::infinity();

    for (int p = 0; p < config.swarm_size; ++p) {
        pos[p].resize(n);
        vel[p].resize(n);
        for (Eigen::Index d = 0; d < n; ++d) {
            const double range = config.upper[d] - config.lower[d];
            pos[p][d] = rng.uniform(config.lower[d], config.upper[d]);
            vel[p][d] = rng.uniform(-range, range) * 0.1;
        }
        pbest[p] = pos[p];
        pbest_val[p] = fn(pos[p]);
        if (pbest_val[p] < gbest_val) {
            gbest_val = pbest_val[p];
            gbest = pos[p];
        }
    }
    if (diag) diag->history.push_back({gbest_val, 0.0, 0.0});

    for (int it = 0; it < config.max_iterations; ++it) {
        for (int p = 0; p < config.swarm_size; ++p) {
            for (Eigen::Index d = 0; d < n; ++d) {
                const double r1 = rng.uniform();
                const double r2 = rng.uniform();
                vel[p][d] = config.inertia * vel[p][d] +
                            config.cognitive * r1 * (pbest[p][d] - pos[p][d]) +
                            config.social * r2 * (gbest[d] - pos[p][d]);
                pos[p][d] += vel[p][d];
                if (pos[p][d] < config.lower[d]) {
                    pos[p][d] = config.lower[d];
                    vel[p][d] = 0.0;
                } else if (pos[p][d] > config.upper[d]) {
                    pos[p][d] = config.upper[d];
                    vel[p][d] = 0.0;
                }
            }
            const double val = fn(pos[p]);
            if (val < pbest_val[p]) {
                pbest_val[p] = val;
                pbest[p] = pos[p];
                if (val < gbest_val) {
                    gbest_val = val;
                    gbest = pos[p];
                }
            }
        }
        if (diag) diag->history.push_back({gbest_val, 0.0, 0.0});
    }

    if (diag) {
        diag->iterations = config.max_iterations;
        diag->final_value = gbest_val;
        diag->converged = true;
    }
    return gbest;
}

SolveResult pso_solve(const InverseObjective& obj, const PsoConfig& config) {
    obj.validate();
    const bool entropic = obj.kind == Regularizer::max_entropy;
    const auto fn = [&obj, entropic](const Eigen::VectorXd& x) {
        Eigen::VectorXd s = x;
        if (entropic) s = s.cwiseMax(1e-9);
        return objective_eval(obj, s).value;
    };

    SolveResult result;
    Eigen::VectorXd best = pso_minimize(fn, config, &result.diagnostics);
    if (entropic) best = best.cwiseMax(1e-9);
    result.s = best;

    const ObjectiveValue ov = objective_eval(obj, result.s);
    result.diagnostics.final_value = ov.value;
    result.diagnostics.final_misfit = ov.misfit;
    result.diagnostics.final_regularizer = ov.regularizer;
    return result;
}

double select_lambda(const InverseObjective& obj_template, double sigma,
                     const ObservationVector& c_obs, const std::vector<double>& grid) {
    if (sigma < 0.0) throw ValidationError("select_lambda: sigma must be >= 0");
    if (grid.empty()) throw ValidationError("select_lambda: empty grid");
    if (sigma == 0.0) return 1e-6;
    if (grid.size() == 1) return grid.front();

    const double target = std::pow(sigma * c_obs.norm(), 2);
    QnConfig qn;
    qn.max_iterations = 200;
    qn.grad_tol = 1e-6;

    double best_lambda = grid.front();
    double best_gap = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        InverseObjective obj = obj_template;
        obj.c_obs = c_obs;
        obj.lambda = lambda;
        const SolveResult res = quasi_newton_solve(obj, qn);
        const double misfit = std::max(res.diagnostics.final_misfit, 1e-300);
        const double gap = std::abs(std::log(misfit / target));
        if (gap < best_gap) {
            best_gap = gap;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

void SolveDiagnostics::save(const std::string& path, const std::string& header_comment) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "# iteration value misfit regularizer\n";
    char buf[200];
    for (std::size_t i = 0; i < history.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu %.17g %.17g %.17g", i, history[i][0], history[i][1],
                      history[i][2]);
        out << buf << "\n";
    }
    std::snprintf(buf, sizeof(buf), "# final value=%.17g misfit=%.17g regularizer=%.17g converged=%d",
                  final_value, final_misfit, final_regularizer, converged ? 1 : 0);
    out << buf << "\n";
}

} // namespace srcinv
