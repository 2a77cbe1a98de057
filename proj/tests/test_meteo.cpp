#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "srcinv/meteo.hpp"

using namespace srcinv;

TEST_CASE("parses tower rows with decimal commas") {
    std::istringstream in("12:05; 2,6; 5,7; 5,7; 290; 310; 310\n");
    const auto records = load_meteorology(in);
    REQUIRE(records.size() == 1);
    const WindRecord& r = records[0];
    CHECK(r.time_label == "12:05");
    CHECK(r.speeds == std::vector<double>{2.6, 5.7, 5.7});
    CHECK(r.directions == std::vector<double>{290.0, 310.0, 310.0});
    CHECK(r.heights == std::vector<double>{10.0, 120.0, 200.0});
}

TEST_CASE("empty input gives an empty sequence") {
    std::istringstream in("");
    CHECK(load_meteorology(in).empty());
}

TEST_CASE("comments and blank lines are skipped") {
    std::istringstream in("# tower data\n\n12:15; 2,6; 5,1; 5,7; 300; 310; 310\n");
    CHECK(load_meteorology(in).size() == 1);
}

TEST_CASE("negative speed is rejected") {
    std::istringstream in("12:05; -1; 5,7; 5,7; 290; 310; 310\n");
    CHECK_THROWS_AS(load_meteorology(in), ValidationError);
}

TEST_CASE("malformed rows name the offending cell") {
    std::istringstream in("12:05; 2,6; oops; 5,7; 290; 310; 310\n");
    try {
        load_meteorology(in);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 1") != std::string::npos);
        CHECK(msg.find("column 3") != std::string::npos);
    }
}

TEST_CASE("wrong column count is a parse error") {
    std::istringstream in("12:05; 2,6; 5,7\n");
    CHECK_THROWS_AS(load_meteorology(in), ParseError);
}

namespace {

std::vector<WindRecord> table_records() {
    std::istringstream in(
        "12:05; 2,6; 5,7; 5,7; 290; 310; 310\n"
        "12:15; 2,6; 5,1; 5,7; 300; 310; 310\n"
        "12:25; 2,1; 4,6; 5,1; 280; 310; 320\n"
        "12:35; 2,1; 4,6; 5,1; 280; 310; 320\n"
        "12:45; 2,6; 5,1; 5,7; 290; 310; 310\n");
    return load_meteorology(in);
}

} // namespace

TEST_CASE("wind components at the lowest level, first period") {
    const auto records = table_records();
    const Vec3 w = mean_wind_at(records, 10.0, 0.0);
    // speed 2.6 from 290 deg: u = -2.6 sin(290), v = -2.6 cos(290)
    CHECK(w.x == doctest::Approx(2.443187).epsilon(1e-5));
    CHECK(w.y == doctest::Approx(-0.889253).epsilon(1e-5));
    CHECK(w.z == 0.0);
}

TEST_CASE("measurement heights reproduce table values exactly") {
    const auto records = table_records();
    const Vec3 w120 = mean_wind_at(records, 120.0, 0.0);
    CHECK(std::hypot(w120.x, w120.y) == doctest::Approx(5.7).epsilon(1e-12));
    const Vec3 w200 = mean_wind_at(records, 200.0, 0.0);
    CHECK(std::hypot(w200.x, w200.y) == doctest::Approx(5.7).epsilon(1e-12));
}

TEST_CASE("profile clamps outside the measured range") {
    const auto records = table_records();
    const Vec3 below = mean_wind_at(records, 2.0, 0.0);
    const Vec3 at10 = mean_wind_at(records, 10.0, 0.0);
    CHECK(below.x == at10.x);
    CHECK(below.y == at10.y);
    const Vec3 above = mean_wind_at(records, 500.0, 0.0);
    const Vec3 at200 = mean_wind_at(records, 200.0, 0.0);
    CHECK(above.x == at200.x);
    CHECK(above.y == at200.y);
}

TEST_CASE("speed magnitude matches the interpolated scalar speed") {
    const auto records = table_records();
    for (double z : {15.0, 40.0, 80.0, 119.0, 160.0, 199.0}) {
        const Vec3 w = mean_wind_at(records, z, 0.0);
        const double frac = z < 120.0 ? (std::log(z) - std::log(10.0)) / (std::log(120.0) - std::log(10.0))
                                      : (std::log(z) - std::log(120.0)) / (std::log(200.0) - std::log(120.0));
        const double speed = z < 120.0 ? 2.6 + frac * (5.7 - 2.6) : 5.7;
        CHECK(std::hypot(w.x, w.y) == doctest::Approx(speed).epsilon(1e-12));
    }
}

TEST_CASE("direction interpolation takes the shorter arc") {
    WindRecord r;
    r.time_label = "t";
    r.heights = {10.0, 1000.0};
    r.speeds = {3.0, 3.0};
    r.directions = {350.0, 10.0};
    r.validate();
    // geometric midpoint in ln z: direction must be 0 (north), not 180
    const Vec3 w = mean_wind_at({r}, 100.0, 0.0);
    CHECK(std::abs(w.x) < 1e-12);
    CHECK(w.y == doctest::Approx(-3.0).epsilon(1e-12));
}

TEST_CASE("records are piecewise constant in time") {
    const auto records = table_records();
    const Vec3 p1 = mean_wind_at(records, 10.0, 10.0);
    const Vec3 p2 = mean_wind_at(records, 10.0, 650.0);   // second record, dir 300
    const Vec3 p5 = mean_wind_at(records, 10.0, 9999.0);  // past the end: clamps to last
    CHECK(p1.x != p2.x);
    const Vec3 last = mean_wind_at(records, 10.0, 4.5 * 600.0);
    CHECK(p5.x == last.x);
}

TEST_CASE("non-positive heights are a domain error") {
    const auto records = table_records();
    CHECK_THROWS_AS(mean_wind_at(records, 0.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(mean_wind_at(records, -5.0, 0.0), std::domain_error);
}

TEST_CASE("turbulence field is homogeneous") {
    TurbulenceParams p;
    p.sigma2 = {0.5, 0.5, 0.25};
    p.tau_l = {100.0, 100.0, 50.0};
    for (double z : {10.0, 500.0}) {
        const TurbulenceParams q = turbulence_at(p, z);
        CHECK(q.sigma2 == p.sigma2);
        CHECK(q.tau_l == p.tau_l);
    }
}

TEST_CASE("invalid turbulence parameters are rejected") {
    TurbulenceParams p;
    p.sigma2 = {0.5, -0.1, 0.25};
    CHECK_THROWS_AS(p.validate(), ValidationError);
    TurbulenceParams q;
    q.tau_l = {100.0, 0.0, 50.0};
    CHECK_THROWS_AS(q.validate(), ValidationError);
}
