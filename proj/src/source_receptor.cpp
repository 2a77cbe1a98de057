#include "srcinv/source_receptor.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "srcinv/errors.hpp"

namespace srcinv {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

TransitionMatrix build_matrix_forward(const DetectionCounts& counts, const DomainGrid& grid,
                                      const std::vector<SensorSpec>& sensors,
                                      const std::vector<int>& source_cells, double dt) {
    if (counts.direction != Direction::forward)
        throw ValidationError("build_matrix_forward: counts come from a backward run");
    if (static_cast<int>(sensors.size()) != counts.n_receptors ||
        static_cast<int>(source_cells.size()) != counts.n_sources)
        throw ValidationError("build_matrix_forward: registry sizes do not match counts");

    TransitionMatrix tm;
    tm.m.setZero(counts.n_receptors, counts.n_sources);
    for (int i = 0; i < counts.n_receptors; ++i) tm.receptor_ids.push_back(i);
    tm.source_ids = source_cells;

    const double v_source = grid.cell_volume();
    for (int j = 0; j < counts.n_sources; ++j) {
        const std::int64_t n_s = counts.released[j];
        for (int i = 0; i < counts.n_receptors; ++i) {
            const std::int64_t n_r = counts.count(i, j);
            if (n_r == 0) continue;
            if (n_s <= 0)
                throw ValidationError("build_matrix_forward: detections recorded for source " +
                                      std::to_string(j) + " which released no particles");
            const double v_receptor = sensors[i].sample_volume();
            tm.m(i, j) = (v_source / v_receptor) * (dt / static_cast<double>(n_s)) *
                         static_cast<double>(n_r);
        }
    }
    return tm;
}

TransitionMatrix build_matrix_backward(const DetectionCounts& counts,
                                       const std::vector<int>& source_cells, double dt) {
    if (counts.direction != Direction::backward)
        throw ValidationError("build_matrix_backward: counts come from a forward run");
    if (static_cast<int>(source_cells.size()) != counts.n_sources)
        throw ValidationError("build_matrix_backward: source registry does not match counts");

    TransitionMatrix tm;
    tm.m.setZero(counts.n_receptors, counts.n_sources);
    for (int i = 0; i < counts.n_receptors; ++i) tm.receptor_ids.push_back(i);
    tm.source_ids = source_cells;

    for (int i = 0; i < counts.n_receptors; ++i) {
        const std::int64_t n_rel = counts.released[i];
        for (int j = 0; j < counts.n_sources; ++j) {
            const std::int64_t n = counts.count(i, j);
            if (n == 0) continue;
            if (n_rel <= 0)
                throw ValidationError("build_matrix_backward: crossings recorded for receptor " +
                                      std::to_string(i) + " which released no particles");
            tm.m(i, j) = (dt / static_cast<double>(n_rel)) * static_cast<double>(n);
        }
    }
    return tm;
}

ObservationVector predict_concentrations(const TransitionMatrix& m, const EmissionVector& s) {
    if (s.size() != m.m.cols())
        throw ValidationError("predict_concentrations: emission vector length " +
                              std::to_string(s.size()) + " != " + std::to_string(m.m.cols()));
    return m.m * s;
}

ObservationVector add_noise(const ObservationVector& exact, const NoiseModel& model) {
    if (model.sigma < 0.0) throw ValidationError("noise: sigma must be >= 0");
    RandomStream rng = RandomStream::derive(model.seed, 0x6e6f697365ULL);
    return add_noise_with(exact, model.sigma, [&rng] { return rng.normal(); });
}

ObservationVector add_noise_with(const ObservationVector& exact, double sigma,
                                 const std::function<double()>& draw_mu) {
    ObservationVector noisy(exact.size());
    for (Eigen::Index i = 0; i < exact.size(); ++i) {
        const double v = exact[i] * (1.0 + sigma * draw_mu());
        noisy[i] = v < 0.0 ? 0.0 : v;
    }
    return noisy;
}

EmissionSampler EmissionSampler::uniform_range(double lo, double hi) {
    if (lo < 0.0 || !(lo < hi))
        throw ValidationError("emission sampler: need 0 <= rate_min < rate_max");
    EmissionSampler s;
    s.kind = Kind::uniform;
    s.rate_min = lo;
    s.rate_max = hi;
    return s;
}

EmissionSampler EmissionSampler::around(const EmissionVector& base, double spread) {
    if (base.size() == 0) throw ValidationError("emission sampler: empty base field");
    if (spread < 0.0) throw ValidationError("emission sampler: spread must be >= 0");
    EmissionSampler s;
    s.kind = Kind::scenario;
    s.base = base;
    s.spread = spread;
    return s;
}

std::vector<TrainingPair> generate_training_set(const TransitionMatrix& m, int n_pairs,
                                                const EmissionSampler& sampler,
                                                const NoiseModel& noise) {
    if (n_pairs < 1) throw ValidationError("generate_training_set: n_pairs must be >= 1");
    if (sampler.kind == EmissionSampler::Kind::scenario && sampler.base.size() != m.m.cols())
        throw ValidationError("generate_training_set: base field length does not match matrix");

    std::vector<TrainingPair> pairs;
    pairs.reserve(n_pairs);
    for (int p = 0; p < n_pairs; ++p) {
        RandomStream rng = RandomStream::derive(noise.seed, 0x747261696eULL, p);
        EmissionVector s(m.m.cols());
        if (sampler.kind == EmissionSampler::Kind::uniform) {
            for (Eigen::Index j = 0; j < s.size(); ++j)
                s[j] = rng.uniform(sampler.rate_min, sampler.rate_max);
        } else {
            for (Eigen::Index j = 0; j < s.size(); ++j) {
                const double v = sampler.base[j] * (1.0 + sampler.spread * rng.normal());
                s[j] = v < 0.0 ? 0.0 : v;
            }
        }
        const ObservationVector exact = predict_concentrations(m, s);
        const ObservationVector noisy =
            add_noise_with(exact, noise.sigma, [&rng] { return rng.normal(); });
        pairs.push_back({std::move(s), noisy});
    }
    return pairs;
}

DataSplit split_pairs(const std::vector<TrainingPair>& pairs, int n_train, int n_activation,
                      int n_generalization) {
    if (n_train < 1 || n_activation < 0 || n_generalization < 0)
        throw ValidationError("split_pairs: invalid split sizes");
    if (static_cast<std::size_t>(n_train + n_activation + n_generalization) != pairs.size())
        throw ValidationError("split_pairs: split sizes must sum to the number of pairs");
    DataSplit out;
    out.train.assign(pairs.begin(), pairs.begin() + n_train);
    out.activation.assign(pairs.begin() + n_train, pairs.begin() + n_train + n_activation);
    out.generalization.assign(pairs.begin() + n_train + n_activation, pairs.end());
    return out;
}

void TransitionMatrix::save(const std::string& path, const std::string& header_comment) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "# transition matrix, rows = receptors, columns = sources\n";
    out << "# source_cells:";
    for (int id : source_ids) out << " " << id;
    out << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out << (j ? " " : "") << fmt(m(i, j));
        out << "\n";
    }
}

TransitionMatrix TransitionMatrix::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open matrix file '" + path + "'");
    TransitionMatrix tm;
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "# source_cells:";
            if (line.rfind(key, 0) == 0) {
                std::istringstream ss(line.substr(key.size()));
                int id;
                while (ss >> id) tm.source_ids.push_back(id);
            }
            continue;
        }
        std::istringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("matrix file '" + path + "': ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("matrix file '" + path + "': no data");
    tm.m.resize(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            tm.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    for (Eigen::Index i = 0; i < tm.m.rows(); ++i) tm.receptor_ids.push_back(static_cast<int>(i));
    if (tm.source_ids.empty())
        for (Eigen::Index j = 0; j < tm.m.cols(); ++j) tm.source_ids.push_back(static_cast<int>(j));
    return tm;
}

void save_pairs(const std::vector<TrainingPair>& pairs, const std::string& path,
                const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    if (pairs.empty()) throw ValidationError("save_pairs: nothing to save");
    out << "# emissions=" << pairs.front().emissions.size()
        << " concentrations=" << pairs.front().concentrations.size() << "\n";
    for (const auto& p : pairs) {
        for (Eigen::Index j = 0; j < p.emissions.size(); ++j)
            out << (j ? " " : "") << fmt(p.emissions[j]);
        for (Eigen::Index i = 0; i < p.concentrations.size(); ++i)
            out << " " << fmt(p.concentrations[i]);
        out << "\n";
    }
}

std::vector<TrainingPair> load_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open pairs file '" + path + "'");
    std::vector<TrainingPair> pairs;
    std::string line;
    int n_emit = -1, n_conc = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            int e, c;
            if (std::sscanf(line.c_str(), "# emissions=%d concentrations=%d", &e, &c) == 2) {
                n_emit = e;
                n_conc = c;
            }
            continue;
        }
        if (n_emit < 0) throw ParseError("pairs file '" + path + "': missing size header");
        std::istringstream ss(line);
        TrainingPair p;
        p.emissions.resize(n_emit);
        p.concentrations.resize(n_conc);
        for (int j = 0; j < n_emit; ++j)
            if (!(ss >> p.emissions[j])) throw ParseError("pairs file '" + path + "': short row");
        for (int i = 0; i < n_conc; ++i)
            if (!(ss >> p.concentrations[i]))
                throw ParseError("pairs file '" + path + "': short row");
        pairs.push_back(std::move(p));
    }
    return pairs;
}

void save_vector(const Eigen::VectorXd& v, const std::string& path,
                 const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) out << fmt(v[i]) << "\n";
}

Eigen::VectorXd load_vector(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open vector file '" + path + "'");
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        values.push_back(std::stod(line));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
    return v;
}

} // namespace srcinv
