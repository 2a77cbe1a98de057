#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "srcinv/errors.hpp"
#include "srcinv/experiment.hpp"

using namespace srcinv;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.sim.n_particles_per_source = 50;
    cfg.sim.duration = 120.0;
    return cfg;
}

} // namespace

TEST_CASE("cell labels map to row-major indices") {
    DomainGrid grid;
    CHECK(cell_index_from_label("A1", grid) == 0);
    CHECK(cell_index_from_label("A7", grid) == 6);
    CHECK(cell_index_from_label("A25", grid) == 24);
    CHECK(cell_label_from_index(0) == "A1");
    CHECK(cell_label_from_index(13) == "A14");
}

TEST_CASE("bad labels are rejected") {
    DomainGrid grid;
    CHECK_THROWS_AS(cell_index_from_label("A0", grid), ValidationError);
    CHECK_THROWS_AS(cell_index_from_label("A26", grid), ValidationError);
    CHECK_THROWS_AS(cell_index_from_label("B3", grid), ValidationError);
    CHECK_THROWS_AS(cell_index_from_label("A", grid), ValidationError);
    CHECK_THROWS_AS(cell_index_from_label("A7x", grid), ValidationError);
}

TEST_CASE("the default experiment carries the built-in layout") {
    const ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.validate();
    CHECK(cfg.sensors.size() == 6);
    CHECK(cfg.active_cells.size() == 12);
    CHECK(cfg.exact_rates.at("A7") == 10.0);
    CHECK(cfg.exact_rates.at("A17") == 20.0);
    const EmissionVector s = cfg.exact_emissions();
    REQUIRE(s.size() == 12);
    CHECK(s.sum() == doctest::Approx(6 * 10.0 + 6 * 20.0));

    const auto records = cfg.wind_records();
    REQUIRE(records.size() == 5);
    CHECK(records[0].speeds[0] == 2.6);
    CHECK(records[2].directions[0] == 280.0);
}

TEST_CASE("configs survive a json round trip with equal hashes") {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.noise_sigma = 0.10;
    cfg.topology = "6:7:8:12";
    cfg.sim.seed = 77;
    const std::string text = cfg.to_json_text();
    const ExperimentConfig back = ExperimentConfig::from_json_text(text);
    CHECK(back.noise_sigma == cfg.noise_sigma);
    CHECK(back.topology == cfg.topology);
    CHECK(back.sim.seed == cfg.sim.seed);
    CHECK(back.active_cells == cfg.active_cells);
    CHECK(back.config_hash() == cfg.config_hash());
    CHECK(back.config_hash().size() == 16);

    cfg.sim.seed = 78;
    CHECK(back.config_hash() != cfg.config_hash());
}

TEST_CASE("invalid configurations fail validation") {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.active_cells.push_back("A99");
    CHECK_THROWS_AS(cfg.validate(), ValidationError);

    ExperimentConfig missing_rate = ExperimentConfig::defaults();
    missing_rate.exact_rates.erase("A7");
    CHECK_THROWS_AS(missing_rate.validate(), ValidationError);

    ExperimentConfig bad_topology = ExperimentConfig::defaults();
    bad_topology.topology = "6:15:30:11";  // output must match the active cells
    CHECK_THROWS_AS(bad_topology.validate(), ValidationError);

    ExperimentConfig bad_mode = ExperimentConfig::defaults();
    bad_mode.sampling_mode = "gaussian";
    CHECK_THROWS_AS(bad_mode.validate(), ValidationError);
}

TEST_CASE("report metrics recompute from the rows") {
    InversionReport report;
    report.rows = {{"A2", 10.0, 12.0, 9.0, 10.5},
                   {"A12", 20.0, 16.0, 24.0, 19.0}};
    const auto qn = report.metrics("qn");
    CHECK(qn.max_rel_error == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(qn.rms_error ==
          doctest::Approx(std::sqrt((4.0 + 16.0) / 2.0)).epsilon(1e-12));
    const auto ann = report.metrics("ann");
    CHECK(ann.max_rel_error == doctest::Approx(0.05).epsilon(1e-12));
    CHECK_THROWS_AS(report.metrics("nn"), ValidationError);
}

TEST_CASE("grid files carry 25 values with inactive cells zero") {
    InversionReport report;
    report.rows = {{"A7", 10.0, 11.0, 9.5, 10.2}};
    DomainGrid grid;
    const auto path = std::filesystem::temp_directory_path() / "srcinv_grid.txt";
    report.save_grid(path.string(), "qn", grid, {"A7"});

    std::ifstream in(path);
    std::string line;
    int values = 0;
    double a7 = -1.0;
    double total = 0.0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        double v;
        while (row >> v) {
            ++values;
            total += v;
            if (values == 7) a7 = v;
        }
    }
    std::filesystem::remove(path);
    CHECK(values == 25);
    CHECK(a7 == 11.0);
    CHECK(total == 11.0);  // every inactive cell is exactly zero

    CHECK_THROWS_AS(report.save_grid(path.string(), "exact?", grid, {"A7"}),
                    ValidationError);
}

TEST_CASE("simulation and synthesis stages are bitwise reproducible") {
    const ExperimentConfig cfg = tiny_config();
    const DetectionCounts c1 = run_simulate(cfg);
    const DetectionCounts c2 = run_simulate(cfg);
    CHECK(c1.counts == c2.counts);
    CHECK(c1.released == c2.released);

    const TransitionMatrix m = stage_build_matrix(cfg, c1);
    CHECK(m.m.rows() == 6);
    CHECK(m.m.cols() == 12);
    CHECK((m.m.array() >= 0.0).all());

    const SynthData s1 = run_synth(cfg, m);
    const SynthData s2 = run_synth(cfg, m);
    CHECK(s1.exact_observation == s2.exact_observation);
    CHECK(s1.noisy_observation == s2.noisy_observation);
    CHECK(s1.split.train.size() == cfg.n_train);
    CHECK(s1.split.activation.size() == cfg.n_activation);
    CHECK(s1.split.generalization.size() == cfg.n_generalization);
    for (std::size_t k = 0; k < s1.split.train.size(); ++k)
        CHECK(s1.split.train[k].emissions == s2.split.train[k].emissions);

    // the exact observation is the clean forward prediction
    const ObservationVector predicted = predict_concentrations(m, cfg.exact_emissions());
    CHECK(s1.exact_observation == predicted);
}

TEST_CASE("a different master seed changes the detection statistics") {
    ExperimentConfig cfg = tiny_config();
    const DetectionCounts a = run_simulate(cfg);
    cfg.sim.seed += 1;
    const DetectionCounts b = run_simulate(cfg);
    CHECK(a.counts != b.counts);
}

TEST_CASE("training stage validates the topology against the problem size") {
    ExperimentConfig cfg = tiny_config();
    cfg.n_train = 6;
    cfg.n_activation = 2;
    cfg.n_generalization = 2;
    cfg.training.max_iterations = 5;

    const DetectionCounts counts = run_simulate(cfg);
    const TransitionMatrix m = stage_build_matrix(cfg, counts);
    const SynthData synth = run_synth(cfg, m);

    const TrainedModel model = run_train(cfg, synth.split);
    CHECK(model.net.input_size() == 6);
    CHECK(model.net.output_size() == 12);
    CHECK(model.history.train_sse.size() == 5);

    cfg.topology = "5:15:30:12";  // input width disagrees with six sensors
    CHECK_THROWS_AS(run_train(cfg, synth.split), ValidationError);
}
