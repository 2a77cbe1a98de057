#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srcinv/meteo.hpp"
#include "srcinv/rng.hpp"

namespace srcinv {

enum class Direction { forward, backward };

inline double time_sign(Direction d) { return d == Direction::forward ? 1.0 : -1.0; }

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

/// One Monte Carlo particle: position, Lagrangian velocity fluctuation and
/// the id of the releasing cell (or releasing receptor, in backward runs).
struct Particle {
    Vec3 pos;
    Vec3 vel;
    int source_id = 0;
    bool alive = true;
};

/// Regular nx x ny grid of emission cells, one layer deep (full mixing
/// height per cell).
struct DomainGrid {
    int nx = 5;          // cells along x
    int ny = 5;          // cells along y
    double cell_dx = 300.0;
    double cell_dy = 200.0;
    double height = 1000.0;

    int n_cells() const { return nx * ny; }
    double extent_x() const { return nx * cell_dx; }
    double extent_y() const { return ny * cell_dy; }
    double cell_volume() const { return cell_dx * cell_dy * height; }

    /// Cell index (0-based, row-major: index = row * nx + col).
    int cell_of(double x, double y) const;
    void cell_bounds(int cell, double& x0, double& y0, double& x1, double& y1) const;
    bool contains_xy(double x, double y) const {
        return x >= 0.0 && x < extent_x() && y >= 0.0 && y < extent_y();
    }
};

/// Point sampler with a physical cube edge and an independently sized
/// counting (sampling) box. Detection statistics use the sampling box; its
/// volume is what enters the transition-matrix normalization.
struct SensorSpec {
    double x = 0.0;
    double y = 0.0;
    double z = 10.0;
    double edge = 0.1;   // physical cube edge, m
    // Sampling half-extents, m. Default to the physical cube.
    double sample_hx = 0.05;
    double sample_hy = 0.05;
    double sample_hz = 0.05;

    double sample_volume() const { return 8.0 * sample_hx * sample_hy * sample_hz; }

    bool contains(const Vec3& p) const {
        return std::abs(p.x - x) <= sample_hx && std::abs(p.y - y) <= sample_hy &&
               std::abs(p.z - z) <= sample_hz;
    }

    static SensorSpec at(double x, double y) {
        SensorSpec s;
        s.x = x;
        s.y = y;
        return s;
    }
};

struct SimulationConfig {
    double dt = 1.0;                    // s
    int n_particles_per_source = 10000;
    double duration = 3000.0;           // s
    Direction direction = Direction::forward;
    std::uint64_t seed = 42;

    void validate(const TurbulenceParams& params) const;
};

/// Crossing statistics of one dispersion run: count(i, j) accumulates
/// (particle, step) events for receptor i and source j, released[k] is the
/// number of particles launched by release origin k (sources in forward
/// runs, receptors in backward runs).
struct DetectionCounts {
    Direction direction = Direction::forward;
    double dt = 1.0;
    int n_receptors = 0;
    int n_sources = 0;
    std::vector<std::int64_t> counts;    // n_receptors * n_sources, row-major
    std::vector<std::int64_t> released;  // per release origin

    std::int64_t& count(int receptor, int source) {
        return counts[static_cast<std::size_t>(receptor) * n_sources + source];
    }
    std::int64_t count(int receptor, int source) const {
        return counts[static_cast<std::size_t>(receptor) * n_sources + source];
    }

    void save(const std::string& path, const std::string& header_comment = {}) const;
    static DetectionCounts load(const std::string& path);
};

/// Drift term of the velocity Langevin equation for homogeneous Gaussian
/// turbulence: a_i = -u_i / tau_Li.
inline Vec3 drift_coefficient(const Vec3& u, const TurbulenceParams& params) {
    return {-u.x / params.tau_l[0], -u.y / params.tau_l[1], -u.z / params.tau_l[2]};
}

/// Diagonal diffusion amplitude b_ii = sqrt(2 sigma_i^2 / tau_Li); off-diagonal
/// entries are identically zero.
inline Vec3 diffusion_coefficient(const TurbulenceParams& params) {
    return {std::sqrt(2.0 * params.sigma2[0] / params.tau_l[0]),
            std::sqrt(2.0 * params.sigma2[1] / params.tau_l[1]),
            std::sqrt(2.0 * params.sigma2[2] / params.tau_l[2])};
}

/// B_ij = (1/2) b_ik b_jk, diagonal: sigma_i^2 / tau_Li.
inline Vec3 diffusion_b_matrix_diagonal(const TurbulenceParams& params) {
    return {params.sigma2[0] / params.tau_l[0], params.sigma2[1] / params.tau_l[1],
            params.sigma2[2] / params.tau_l[2]};
}

/// One Euler-Maruyama step of the Langevin model. c_v = +1 integrates
/// forward, c_v = -1 backward (mean wind reversed). Vertical reflection at
/// ground and at z = height flips the w fluctuation; leaving the horizontal
/// domain deactivates the particle.
inline Particle langevin_step(Particle p, const Vec3& wind, const TurbulenceParams& params,
                              const DomainGrid& grid, double dt, double c_v,
                              RandomStream& rng) {
    const Vec3 a = drift_coefficient(p.vel, params);
    const Vec3 b = diffusion_coefficient(params);
    const double sqdt = std::sqrt(dt);
    p.vel.x += a.x * dt + b.x * sqdt * rng.normal();
    p.vel.y += a.y * dt + b.y * sqdt * rng.normal();
    p.vel.z += a.z * dt + b.z * sqdt * rng.normal();

    p.pos.x += (c_v * wind.x + p.vel.x) * dt;
    p.pos.y += (c_v * wind.y + p.vel.y) * dt;
    p.pos.z += (c_v * wind.z + p.vel.z) * dt;

    if (p.pos.z < 0.0) {
        p.pos.z = -p.pos.z;
        p.vel.z = -p.vel.z;
    }
    if (p.pos.z > grid.height) {
        p.pos.z = 2.0 * grid.height - p.pos.z;
        p.vel.z = -p.vel.z;
    }
    if (!grid.contains_xy(p.pos.x, p.pos.y)) p.alive = false;
    return p;
}

/// Particles released uniformly over the volume of a grid cell with initial
/// velocity fluctuations drawn from the stationary N(0, sigma_i^2) law.
/// Particle k uses the stream derived from (seed, source_cell, k).
std::vector<Particle> release_particles(const DomainGrid& grid, int source_cell, int n,
                                        const TurbulenceParams& params, std::uint64_t seed);

/// Full dispersion run. Forward: releases config.n_particles_per_source
/// particles from every cell in source_cells and counts receptor-volume
/// crossings per (sensor, source cell). Backward: releases from every sensor
/// volume, integrates against the reversed mean wind and counts source-cell
/// crossings per (sensor, source cell).
DetectionCounts run_dispersion(const DomainGrid& grid, const std::vector<SensorSpec>& sensors,
                               const std::vector<WindRecord>& records,
                               const TurbulenceParams& params, const SimulationConfig& config,
                               const std::vector<int>& source_cells);

} // namespace srcinv
