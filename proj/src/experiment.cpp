#include "srcinv/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "srcinv/errors.hpp"

namespace srcinv {

using nlohmann::json;

int cell_index_from_label(const std::string& label, const DomainGrid& grid) {
    if (label.size() < 2 || label[0] != 'A')
        throw ValidationError("cell label '" + label + "' is not of the form A<k>");
    int k = 0;
    for (std::size_t i = 1; i < label.size(); ++i) {
        if (label[i] < '0' || label[i] > '9')
            throw ValidationError("cell label '" + label + "' is not of the form A<k>");
        k = 10 * k + (label[i] - '0');
    }
    if (k < 1 || k > grid.n_cells())
        throw ValidationError("cell label '" + label + "' outside the grid");
    return k - 1;
}

std::string cell_label_from_index(int index) { return "A" + std::to_string(index + 1); }

std::vector<WindRecord> default_wind_records() {
    // Tower averages at 10/120/200 m over five 10-minute periods.
    const char* text =
        "12:05; 2,6; 5,7; 5,7; 290; 310; 310\n"
        "12:15; 2,6; 5,1; 5,7; 300; 310; 310\n"
        "12:25; 2,1; 4,6; 5,1; 280; 310; 320\n"
        "12:35; 2,1; 4,6; 5,1; 280; 310; 320\n"
        "12:45; 2,6; 5,1; 5,7; 290; 310; 310\n";
    std::istringstream in(text);
    return load_meteorology(in);
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    cfg.grid = DomainGrid{};

    const double positions[6][2] = {{400, 500}, {600, 300}, {800, 700},
                                    {1000, 500}, {1200, 300}, {1400, 700}};
    for (const auto& p : positions) {
        SensorSpec s = SensorSpec::at(p[0], p[1]);
        // Counting box; the 0.1 m cube yields no statistics at a feasible
        // particle count, so detections use a larger sampling volume whose
        // size enters the matrix normalization.
        s.sample_hx = 75.0;
        s.sample_hy = 50.0;
        s.sample_hz = 10.0;
        cfg.sensors.push_back(s);
    }

    cfg.active_cells = {"A2", "A3", "A4", "A7", "A8", "A9",
                        "A12", "A13", "A14", "A17", "A18", "A19"};
    for (const auto& label : {"A2", "A3", "A4", "A7", "A8", "A9"}) cfg.exact_rates[label] = 10.0;
    for (const auto& label : {"A12", "A13", "A14", "A17", "A18", "A19"})
        cfg.exact_rates[label] = 20.0;

    // longer training memorizes the measurement noise in the pairs and the
    // generalization error grows; 2000 epochs stops while it still falls
    cfg.training.max_iterations = 2000;

    cfg.pso.lower = Eigen::VectorXd::Zero(12);
    cfg.pso.upper = Eigen::VectorXd::Constant(12, 30.0);
    return cfg;
}

void ExperimentConfig::validate() const {
    turbulence.validate();
    sim.validate(turbulence);
    if (active_cells.empty()) throw ValidationError("config: no active cells");
    for (const auto& label : active_cells) {
        cell_index_from_label(label, grid);
        if (exact_rates.find(label) == exact_rates.end())
            throw ValidationError("config: no exact rate for cell " + label);
    }
    if (noise_sigma < 0.0) throw ValidationError("config: noise sigma must be >= 0");
    if (n_train < 1) throw ValidationError("config: n_train must be >= 1");
    if (sampling_mode != "scenario" && sampling_mode != "uniform")
        throw ValidationError("config: sampling_mode must be 'scenario' or 'uniform'");
    const Topology topo = Topology::parse(topology);
    topo.validate();
    if (topo.sizes.front() != static_cast<int>(sensors.size()) ||
        topo.sizes.back() != static_cast<int>(active_cells.size()))
        throw ValidationError("config: topology ends must match sensor and active cell counts");
    for (const SensorSpec& s : sensors)
        if (s.x < 0 || s.x > grid.extent_x() || s.y < 0 || s.y > grid.extent_y() ||
            s.z < 0 || s.z > grid.height)
            throw ValidationError("config: sensor outside domain bounds");
}

std::vector<int> ExperimentConfig::active_cell_indices() const {
    std::vector<int> idx;
    for (const auto& label : active_cells) idx.push_back(cell_index_from_label(label, grid));
    return idx;
}

EmissionVector ExperimentConfig::exact_emissions() const {
    EmissionVector s(static_cast<Eigen::Index>(active_cells.size()));
    for (std::size_t j = 0; j < active_cells.size(); ++j) s[j] = exact_rates.at(active_cells[j]);
    return s;
}

std::vector<WindRecord> ExperimentConfig::wind_records() const {
    if (meteorology_path.empty()) return default_wind_records();
    return load_meteorology_file(meteorology_path);
}

namespace {

json sensors_to_json(const std::vector<SensorSpec>& sensors) {
    json arr = json::array();
    for (const SensorSpec& s : sensors)
        arr.push_back({{"x", s.x},
                       {"y", s.y},
                       {"z", s.z},
                       {"edge", s.edge},
                       {"sample_hx", s.sample_hx},
                       {"sample_hy", s.sample_hy},
                       {"sample_hz", s.sample_hz}});
    return arr;
}

std::vector<SensorSpec> sensors_from_json(const json& arr) {
    std::vector<SensorSpec> sensors;
    for (const auto& item : arr) {
        SensorSpec s;
        s.x = item.at("x");
        s.y = item.at("y");
        s.z = item.value("z", 10.0);
        s.edge = item.value("edge", 0.1);
        s.sample_hx = item.value("sample_hx", s.edge / 2.0);
        s.sample_hy = item.value("sample_hy", s.edge / 2.0);
        s.sample_hz = item.value("sample_hz", s.edge / 2.0);
        sensors.push_back(s);
    }
    return sensors;
}

} // namespace

std::string ExperimentConfig::to_json_text() const {
    json j;
    j["grid"] = {{"nx", grid.nx},
                 {"ny", grid.ny},
                 {"cell_dx", grid.cell_dx},
                 {"cell_dy", grid.cell_dy},
                 {"height", grid.height}};
    j["sensors"] = sensors_to_json(sensors);
    j["active_cells"] = active_cells;
    j["exact_rates"] = exact_rates;
    j["meteorology_path"] = meteorology_path;
    j["turbulence"] = {{"sigma2", turbulence.sigma2}, {"tau_l", turbulence.tau_l}};
    j["simulation"] = {{"dt", sim.dt},
                       {"particles_per_source", sim.n_particles_per_source},
                       {"duration", sim.duration},
                       {"direction", to_string(sim.direction)},
                       {"seed", sim.seed}};
    j["noise"] = {{"sigma", noise_sigma}, {"seed", noise_seed}};
    j["network"] = {{"topology", topology},
                    {"eta", training.eta},
                    {"alpha", training.alpha},
                    {"max_iterations", training.max_iterations},
                    {"seed", training.seed}};
    j["training_set"] = {{"n_train", n_train},
                         {"n_activation", n_activation},
                         {"n_generalization", n_generalization},
                         {"sampling_mode", sampling_mode},
                         {"spread", train_spread},
                         {"rate_min", rate_min},
                         {"rate_max", rate_max}};
    j["inversion"] = {{"regularizer", srcinv::to_string(regularizer)},
                      {"s_max", s_max},
                      {"lambda", lambda},
                      {"qn_max_iterations", qn.max_iterations},
                      {"qn_grad_tol", qn.grad_tol},
                      {"qn_initial_rate", qn.initial_rate},
                      {"pso_swarm", pso.swarm_size},
                      {"pso_inertia", pso.inertia},
                      {"pso_cognitive", pso.cognitive},
                      {"pso_social", pso.social},
                      {"pso_max_iterations", pso.max_iterations},
                      {"pso_seed", pso.seed},
                      {"bound_min", 0.0},
                      {"bound_max", pso.upper.size() ? pso.upper[0] : 30.0}};
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig cfg = defaults();
    if (j.contains("grid")) {
        const json& g = j["grid"];
        cfg.grid.nx = g.value("nx", cfg.grid.nx);
        cfg.grid.ny = g.value("ny", cfg.grid.ny);
        cfg.grid.cell_dx = g.value("cell_dx", cfg.grid.cell_dx);
        cfg.grid.cell_dy = g.value("cell_dy", cfg.grid.cell_dy);
        cfg.grid.height = g.value("height", cfg.grid.height);
    }
    if (j.contains("sensors")) cfg.sensors = sensors_from_json(j["sensors"]);
    if (j.contains("active_cells"))
        cfg.active_cells = j["active_cells"].get<std::vector<std::string>>();
    if (j.contains("exact_rates"))
        cfg.exact_rates = j["exact_rates"].get<std::map<std::string, double>>();
    cfg.meteorology_path = j.value("meteorology_path", cfg.meteorology_path);
    if (j.contains("turbulence")) {
        const json& t = j["turbulence"];
        if (t.contains("sigma2")) cfg.turbulence.sigma2 = t["sigma2"].get<std::array<double, 3>>();
        if (t.contains("tau_l")) cfg.turbulence.tau_l = t["tau_l"].get<std::array<double, 3>>();
    }
    if (j.contains("simulation")) {
        const json& s = j["simulation"];
        cfg.sim.dt = s.value("dt", cfg.sim.dt);
        cfg.sim.n_particles_per_source =
            s.value("particles_per_source", cfg.sim.n_particles_per_source);
        cfg.sim.duration = s.value("duration", cfg.sim.duration);
        if (s.contains("direction"))
            cfg.sim.direction = direction_from_string(s["direction"].get<std::string>());
        cfg.sim.seed = s.value("seed", cfg.sim.seed);
    }
    if (j.contains("noise")) {
        cfg.noise_sigma = j["noise"].value("sigma", cfg.noise_sigma);
        cfg.noise_seed = j["noise"].value("seed", cfg.noise_seed);
    }
    if (j.contains("network")) {
        const json& n = j["network"];
        cfg.topology = n.value("topology", cfg.topology);
        cfg.training.eta = n.value("eta", cfg.training.eta);
        cfg.training.alpha = n.value("alpha", cfg.training.alpha);
        cfg.training.max_iterations = n.value("max_iterations", cfg.training.max_iterations);
        cfg.training.seed = n.value("seed", cfg.training.seed);
    }
    if (j.contains("training_set")) {
        const json& t = j["training_set"];
        cfg.n_train = t.value("n_train", cfg.n_train);
        cfg.n_activation = t.value("n_activation", cfg.n_activation);
        cfg.n_generalization = t.value("n_generalization", cfg.n_generalization);
        cfg.sampling_mode = t.value("sampling_mode", cfg.sampling_mode);
        cfg.train_spread = t.value("spread", cfg.train_spread);
        cfg.rate_min = t.value("rate_min", cfg.rate_min);
        cfg.rate_max = t.value("rate_max", cfg.rate_max);
    }
    if (j.contains("inversion")) {
        const json& inv = j["inversion"];
        if (inv.contains("regularizer"))
            cfg.regularizer = regularizer_from_string(inv["regularizer"].get<std::string>());
        cfg.s_max = inv.value("s_max", cfg.s_max);
        cfg.lambda = inv.value("lambda", cfg.lambda);
        cfg.qn.max_iterations = inv.value("qn_max_iterations", cfg.qn.max_iterations);
        cfg.qn.grad_tol = inv.value("qn_grad_tol", cfg.qn.grad_tol);
        cfg.qn.initial_rate = inv.value("qn_initial_rate", cfg.qn.initial_rate);
        cfg.pso.swarm_size = inv.value("pso_swarm", cfg.pso.swarm_size);
        cfg.pso.inertia = inv.value("pso_inertia", cfg.pso.inertia);
        cfg.pso.cognitive = inv.value("pso_cognitive", cfg.pso.cognitive);
        cfg.pso.social = inv.value("pso_social", cfg.pso.social);
        cfg.pso.max_iterations = inv.value("pso_max_iterations", cfg.pso.max_iterations);
        cfg.pso.seed = inv.value("pso_seed", cfg.pso.seed);
        const double lo = inv.value("bound_min", 0.0);
        const double hi = inv.value("bound_max", 30.0);
        const auto dim = static_cast<Eigen::Index>(cfg.active_cells.size());
        cfg.pso.lower = Eigen::VectorXd::Constant(dim, lo);
        cfg.pso.upper = Eigen::VectorXd::Constant(dim, hi);
    }
    // Keep PSO bounds consistent with the number of unknowns.
    if (cfg.pso.lower.size() != static_cast<Eigen::Index>(cfg.active_cells.size())) {
        const auto dim = static_cast<Eigen::Index>(cfg.active_cells.size());
        const double lo = cfg.pso.lower.size() ? cfg.pso.lower[0] : 0.0;
        const double hi = cfg.pso.upper.size() ? cfg.pso.upper[0] : 30.0;
        cfg.pso.lower = Eigen::VectorXd::Constant(dim, lo);
        cfg.pso.upper = Eigen::VectorXd::Constant(dim, hi);
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::config_hash() const {
    const std::string text = to_json_text();
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

DetectionCounts run_simulate(const ExperimentConfig& cfg) {
    cfg.validate();
    return run_dispersion(cfg.grid, cfg.sensors, cfg.wind_records(), cfg.turbulence, cfg.sim,
                          cfg.active_cell_indices());
}

TransitionMatrix stage_build_matrix(const ExperimentConfig& cfg, const DetectionCounts& counts) {
    if (counts.direction == Direction::forward)
        return build_matrix_forward(counts, cfg.grid, cfg.sensors, cfg.active_cell_indices(),
                                    counts.dt);
    return build_matrix_backward(counts, cfg.active_cell_indices(), counts.dt);
}

SynthData run_synth(const ExperimentConfig& cfg, const TransitionMatrix& matrix) {
    SynthData out;
    const EmissionVector exact = cfg.exact_emissions();
    out.exact_observation = predict_concentrations(matrix, exact);
    out.noisy_observation = add_noise(out.exact_observation, {cfg.noise_sigma, cfg.noise_seed});

    EmissionSampler sampler =
        cfg.sampling_mode == "uniform"
            ? EmissionSampler::uniform_range(cfg.rate_min, cfg.rate_max)
            : EmissionSampler::around(exact,
                                      cfg.train_spread < 0.0 ? cfg.noise_sigma : cfg.train_spread);
    const int total = cfg.n_train + cfg.n_activation + cfg.n_generalization;
    const auto pairs =
        generate_training_set(matrix, total, sampler, {cfg.noise_sigma, cfg.noise_seed + 1});
    out.split = split_pairs(pairs, cfg.n_train, cfg.n_activation, cfg.n_generalization);
    return out;
}

TrainedModel run_train(const ExperimentConfig& cfg, const DataSplit& split) {
    TrainedModel model;
    const Topology topo = Topology::parse(cfg.topology);
    if (topo.sizes.front() != static_cast<int>(cfg.sensors.size()))
        throw ValidationError("config: topology input size != number of sensors");
    if (topo.sizes.back() != static_cast<int>(cfg.active_cells.size()))
        throw ValidationError("config: topology output size != number of active cells");

    model.net = init_network(topo, cfg.training.seed);
    model.scaler = Scaler::fit(split.train);
    const auto scaled_train = scale_pairs(model.scaler, split.train);
    const auto scaled_act = scale_pairs(model.scaler, split.activation);
    model.history = train(model.net, scaled_train, scaled_act, cfg.training);
    return model;
}

InversionReport run_invert_all(const ExperimentConfig& cfg, const TransitionMatrix& matrix,
                               const ObservationVector& noisy_observation, const MlpNetwork& net,
                               const Scaler& scaler) {
    using clock = std::chrono::steady_clock;

    InverseObjective obj;
    obj.m = matrix.m;
    obj.c_obs = noisy_observation;
    obj.kind = cfg.regularizer;
    obj.s_max = cfg.s_max;
    obj.lambda = cfg.lambda >= 0.0 ? cfg.lambda
                                   : select_lambda(obj, cfg.noise_sigma, noisy_observation);

    InversionReport report;
    report.ann_topology = cfg.topology;

    auto t0 = clock::now();
    const SolveResult qn_res = quasi_newton_solve(obj, cfg.qn);
    report.qn_runtime_s = std::chrono::duration<double>(clock::now() - t0).count();

    t0 = clock::now();
    const SolveResult pso_res = pso_solve(obj, cfg.pso);
    report.pso_runtime_s = std::chrono::duration<double>(clock::now() - t0).count();

    // A single forward pass is microseconds; average over repeats so the
    // reported time is measurable.
    const int reps = 100;
    t0 = clock::now();
    InversionResult ann_res;
    for (int r = 0; r < reps; ++r) ann_res = invert(net, scaler, noisy_observation);
    report.ann_runtime_s =
        std::chrono::duration<double>(clock::now() - t0).count() / static_cast<double>(reps);

    const EmissionVector exact = cfg.exact_emissions();
    for (std::size_t j = 0; j < cfg.active_cells.size(); ++j) {
        InversionReport::Row row;
        row.cell = cfg.active_cells[j];
        row.exact = exact[static_cast<Eigen::Index>(j)];
        row.qn = qn_res.s[static_cast<Eigen::Index>(j)];
        row.pso = pso_res.s[static_cast<Eigen::Index>(j)];
        row.ann = ann_res.rates[static_cast<Eigen::Index>(j)];
        report.rows.push_back(row);
    }
    return report;
}

InversionReport::Metrics InversionReport::metrics(const std::string& solver) const {
    Metrics m;
    double sq_sum = 0.0;
    for (const Row& row : rows) {
        double estimate = 0.0;
        if (solver == "qn") estimate = row.qn;
        else if (solver == "pso") estimate = row.pso;
        else if (solver == "ann") estimate = row.ann;
        else throw ValidationError("unknown solver column '" + solver + "'");
        const double err = estimate - row.exact;
        m.max_rel_error = std::max(m.max_rel_error, std::abs(err) / std::abs(row.exact));
        sq_sum += err * err;
    }
    m.rms_error = rows.empty() ? 0.0 : std::sqrt(sq_sum / static_cast<double>(rows.size()));
    return m;
}

void InversionReport::save_table(const std::string& path, const std::string& header_comment) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "# cell exact qn pso ann(" << ann_topology << ")\n";
    char buf[256];
    for (const Row& row : rows) {
        std::snprintf(buf, sizeof(buf), "%s %.17g %.17g %.17g %.17g", row.cell.c_str(), row.exact,
                      row.qn, row.pso, row.ann);
        out << buf << "\n";
    }
    // wall-clock runtimes go to stdout, not here: rerunning an identical
    // config must produce byte-identical files
    for (const char* solver : {"qn", "pso", "ann"}) {
        const Metrics m = metrics(solver);
        std::snprintf(buf, sizeof(buf), "# %s max_rel_error=%.17g rms_error=%.17g", solver,
                      m.max_rel_error, m.rms_error);
        out << buf << "\n";
    }
}

void InversionReport::save_grid(const std::string& path, const std::string& solver,
                               const DomainGrid& grid,
                               const std::vector<std::string>& active_cells,
                               const std::string& header_comment) const {
    std::vector<double> values(grid.n_cells(), 0.0);
    for (std::size_t j = 0; j < rows.size(); ++j) {
        const int idx = cell_index_from_label(active_cells[j], grid);
        const Row& row = rows[j];
        if (solver == "exact") values[idx] = row.exact;
        else if (solver == "qn") values[idx] = row.qn;
        else if (solver == "pso") values[idx] = row.pso;
        else if (solver == "ann") values[idx] = row.ann;
        else throw ValidationError("unknown solver column '" + solver + "'");
    }

    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "# emission map (" << solver << "), " << grid.ny << " rows x " << grid.nx
        << " columns, origin row first\n";
    char buf[64];
    for (int r = 0; r < grid.ny; ++r) {
        for (int c = 0; c < grid.nx; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", values[r * grid.nx + c]);
            out << (c ? " " : "") << buf;
        }
        out << "\n";
    }
}

} // namespace srcinv
