#include "srcinv/dispersion.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "srcinv/errors.hpp"

namespace srcinv {

std::string to_string(Direction d) {
    return d == Direction::forward ? "forward" : "backward";
}

Direction direction_from_string(const std::string& s) {
    if (s == "forward") return Direction::forward;
    if (s == "backward") return Direction::backward;
    throw ValidationError("unknown integration direction '" + s + "'");
}

int DomainGrid::cell_of(double x, double y) const {
    if (!contains_xy(x, y)) return -1;
    const int col = static_cast<int>(x / cell_dx);
    const int row = static_cast<int>(y / cell_dy);
    return row * nx + col;
}

void DomainGrid::cell_bounds(int cell, double& x0, double& y0, double& x1, double& y1) const {
    if (cell < 0 || cell >= n_cells())
        throw std::domain_error("cell index " + std::to_string(cell) + " outside grid");
    const int row = cell / nx;
    const int col = cell % nx;
    x0 = col * cell_dx;
    y0 = row * cell_dy;
    x1 = x0 + cell_dx;
    y1 = y0 + cell_dy;
}

void SimulationConfig::validate(const TurbulenceParams& params) const {
    if (!(dt > 0.0)) throw ValidationError("simulation: dt must be > 0");
    if (dt > 0.1 * params.min_tau())
        throw ValidationError("simulation: dt must satisfy dt <= 0.1 * min tau_L (inertial subrange)");
    if (n_particles_per_source < 1)
        throw ValidationError("simulation: need at least one particle per source");
    if (!(duration > 0.0)) throw ValidationError("simulation: duration must be > 0");
}

std::vector<Particle> release_particles(const DomainGrid& grid, int source_cell, int n,
                                        const TurbulenceParams& params, std::uint64_t seed) {
    if (n < 1) throw ValidationError("release_particles: n must be >= 1");
    double x0, y0, x1, y1;
    grid.cell_bounds(source_cell, x0, y0, x1, y1);
    params.validate();

    const std::array<double, 3> sigma{std::sqrt(params.sigma2[0]), std::sqrt(params.sigma2[1]),
                                      std::sqrt(params.sigma2[2])};
    std::vector<Particle> particles;
    particles.reserve(n);
    for (int k = 0; k < n; ++k) {
        RandomStream rng = RandomStream::derive(seed, static_cast<std::uint64_t>(source_cell), k);
        Particle p;
        p.pos = {rng.uniform(x0, x1), rng.uniform(y0, y1), rng.uniform(0.0, grid.height)};
        p.vel = {sigma[0] * rng.normal(), sigma[1] * rng.normal(), sigma[2] * rng.normal()};
        p.source_id = source_cell;
        particles.push_back(p);
    }
    return particles;
}

namespace {

Particle release_one(const DomainGrid& grid, double x0, double y0, double x1, double y1,
                     double z0, double z1, const TurbulenceParams& params, int origin_id,
                     RandomStream& rng) {
    (void)grid;
    Particle p;
    p.pos = {rng.uniform(x0, x1), rng.uniform(y0, y1), rng.uniform(z0, z1)};
    p.vel = {std::sqrt(params.sigma2[0]) * rng.normal(),
             std::sqrt(params.sigma2[1]) * rng.normal(),
             std::sqrt(params.sigma2[2]) * rng.normal()};
    p.source_id = origin_id;
    return p;
}

} // namespace

DetectionCounts run_dispersion(const DomainGrid& grid, const std::vector<SensorSpec>& sensors,
                               const std::vector<WindRecord>& records,
                               const TurbulenceParams& params, const SimulationConfig& config,
                               const std::vector<int>& source_cells) {
    params.validate();
    config.validate(params);
    if (sensors.empty()) throw ValidationError("run_dispersion: no sensors");
    if (source_cells.empty()) throw ValidationError("run_dispersion: no source cells");
    for (int cell : source_cells) {
        double x0, y0, x1, y1;
        grid.cell_bounds(cell, x0, y0, x1, y1);  // throws on invalid index
    }

    const int n_sensors = static_cast<int>(sensors.size());
    const int n_sources = static_cast<int>(source_cells.size());
    const int n_steps = static_cast<int>(std::llround(config.duration / config.dt));
    const double c_v = time_sign(config.direction);
    const bool forward = config.direction == Direction::forward;

    DetectionCounts dc;
    dc.direction = config.direction;
    dc.dt = config.dt;
    dc.n_receptors = n_sensors;
    dc.n_sources = n_sources;
    dc.counts.assign(static_cast<std::size_t>(n_sensors) * n_sources, 0);

    std::unordered_map<int, int> source_column;
    for (int j = 0; j < n_sources; ++j) source_column[source_cells[j]] = j;

    const int n_origins = forward ? n_sources : n_sensors;
    dc.released.assign(n_origins, config.n_particles_per_source);

    for (int origin = 0; origin < n_origins; ++origin) {
        double x0, y0, x1, y1, z0, z1;
        if (forward) {
            grid.cell_bounds(source_cells[origin], x0, y0, x1, y1);
            z0 = 0.0;
            z1 = grid.height;
        } else {
            const SensorSpec& s = sensors[origin];
            x0 = s.x - s.sample_hx;
            x1 = s.x + s.sample_hx;
            y0 = s.y - s.sample_hy;
            y1 = s.y + s.sample_hy;
            z0 = s.z - s.sample_hz;
            z1 = s.z + s.sample_hz;
        }
        const std::uint64_t stream_id =
            forward ? static_cast<std::uint64_t>(source_cells[origin])
                    : 0x80000000ULL + static_cast<std::uint64_t>(origin);

        for (int k = 0; k < config.n_particles_per_source; ++k) {
            RandomStream rng = RandomStream::derive(config.seed, stream_id, k);
            Particle p = release_one(grid, x0, y0, x1, y1, z0, z1, params, origin, rng);
            for (int step = 0; step < n_steps && p.alive; ++step) {
                const double t = step * config.dt;
                const Vec3 wind = mean_wind_at(records, std::max(p.pos.z, 1e-3), t);
                p = langevin_step(p, wind, params, grid, config.dt, c_v, rng);
                if (!p.alive) break;
                if (forward) {
                    for (int i = 0; i < n_sensors; ++i)
                        if (sensors[i].contains(p.pos)) ++dc.count(i, origin);
                } else {
                    const int cell = grid.cell_of(p.pos.x, p.pos.y);
                    auto it = source_column.find(cell);
                    if (it != source_column.end()) ++dc.count(origin, it->second);
                }
            }
        }
    }
    return dc;
}

void DetectionCounts::save(const std::string& path, const std::string& header_comment) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "# direction=" << to_string(direction) << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", dt);
    out << "# dt=" << buf << "\n";
    out << "# receptors=" << n_receptors << "\n";
    out << "# sources=" << n_sources << "\n";
    out << "# counts: receptor source count\n";
    for (int i = 0; i < n_receptors; ++i)
        for (int j = 0; j < n_sources; ++j)
            out << i << " " << j << " " << count(i, j) << "\n";
    out << "# released: origin count\n";
    for (std::size_t k = 0; k < released.size(); ++k)
        out << k << " " << released[k] << "\n";
}

DetectionCounts DetectionCounts::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open counts file '" + path + "'");
    DetectionCounts dc;
    std::string line;
    bool in_released = false;
    bool sized = false;
    int n_receptors = -1, n_sources = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (line.find("direction=") != std::string::npos)
                dc.direction = direction_from_string(line.substr(eq + 1));
            else if (line.find("# dt=") == 0)
                dc.dt = std::stod(line.substr(eq + 1));
            else if (line.find("receptors=") != std::string::npos)
                n_receptors = std::stoi(line.substr(eq + 1));
            else if (line.find("sources=") != std::string::npos)
                n_sources = std::stoi(line.substr(eq + 1));
            else if (line.find("released:") != std::string::npos)
                in_released = true;
            continue;
        }
        if (!sized) {
            if (n_receptors < 0 || n_sources < 0)
                throw ParseError("counts file '" + path + "': missing size header");
            dc.n_receptors = n_receptors;
            dc.n_sources = n_sources;
            dc.counts.assign(static_cast<std::size_t>(n_receptors) * n_sources, 0);
            sized = true;
        }
        std::istringstream ss(line);
        if (in_released) {
            std::size_t k;
            std::int64_t n;
            if (!(ss >> k >> n)) throw ParseError("counts file '" + path + "': bad released row");
            if (k >= dc.released.size()) dc.released.resize(k + 1, 0);
            dc.released[k] = n;
        } else {
            int i, j;
            std::int64_t c;
            if (!(ss >> i >> j >> c)) throw ParseError("counts file '" + path + "': bad count row");
            if (i < 0 || i >= dc.n_receptors || j < 0 || j >= dc.n_sources)
                throw ParseError("counts file '" + path + "': count row out of range");
            dc.count(i, j) = c;
        }
    }
    if (!sized) throw ParseError("counts file '" + path + "': no data");
    return dc;
}

} // namespace srcinv
