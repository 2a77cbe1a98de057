#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "srcinv/errors.hpp"

namespace srcinv {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }

/// One averaging period of tower observations: mean wind speed and
/// meteorological direction (degrees FROM which the wind blows, clockwise
/// from north) at each measurement height.
struct WindRecord {
    std::string time_label;          // "h:m"
    std::vector<double> heights;     // m, strictly increasing
    std::vector<double> speeds;      // m/s, one per height
    std::vector<double> directions;  // deg in [0, 360), one per height

    void validate() const;
};

/// Homogeneous turbulence statistics: velocity variance and Lagrangian
/// de-correlation time scale per component (u, v, w).
struct TurbulenceParams {
    std::array<double, 3> sigma2{0.5, 0.5, 0.25};  // m^2/s^2
    std::array<double, 3> tau_l{100.0, 100.0, 50.0};  // s

    void validate() const;
    double min_tau() const;
};

/// Parses delimited wind observations. Columns: time, one speed per height,
/// one direction per height. Semicolon delimiter with decimal commas
/// tolerated ("2,6" reads as 2.6); plain comma delimiter also accepted.
std::vector<WindRecord> load_meteorology(std::istream& in,
                                         const std::vector<double>& heights = {10.0, 120.0, 200.0});

std::vector<WindRecord> load_meteorology_file(const std::string& path,
                                              const std::vector<double>& heights = {10.0, 120.0, 200.0});

/// Mean wind vector (u, v, w) in m/s at height z and elapsed time t.
///
/// The record covering t is selected (each record is valid for period_s
/// seconds, piecewise constant; times past the last record clamp to it).
/// Speed is interpolated linearly in ln(z) between bracketing heights and
/// clamped to the boundary values outside the measured range; direction is
/// interpolated along the shorter circular arc. Components follow the
/// meteorological convention: u = -speed*sin(dir), v = -speed*cos(dir), w = 0.
Vec3 mean_wind_at(const std::vector<WindRecord>& records, double z, double t,
                  double period_s = 600.0);

/// Point query of the turbulence field. The field is homogeneous, so the
/// prescribed parameters are returned for every height.
TurbulenceParams turbulence_at(const TurbulenceParams& params, double z);

} // namespace srcinv
