#include "srcinv/meteo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace srcinv {

void WindRecord::validate() const {
    const std::size_t n = heights.size();
    if (n < 1 || speeds.size() != n || directions.size() != n)
        throw ValidationError("wind record '" + time_label +
                              "': heights/speeds/directions must have equal length >= 1");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(heights[i] < heights[i + 1]))
            throw ValidationError("wind record '" + time_label + "': heights must be strictly increasing");
    for (std::size_t i = 0; i < n; ++i) {
        if (heights[i] <= 0.0)
            throw ValidationError("wind record '" + time_label + "': heights must be positive");
        if (speeds[i] < 0.0)
            throw ValidationError("wind record '" + time_label + "': negative wind speed");
        if (directions[i] < 0.0 || directions[i] >= 360.0)
            throw ValidationError("wind record '" + time_label + "': direction outside [0, 360)");
    }
}

void TurbulenceParams::validate() const {
    for (double s2 : sigma2)
        if (s2 < 0.0) throw ValidationError("turbulence: sigma^2 must be >= 0");
    for (double t : tau_l)
        if (!(t > 0.0)) throw ValidationError("turbulence: tau_L must be > 0");
}

double TurbulenceParams::min_tau() const {
    return std::min({tau_l[0], tau_l[1], tau_l[2]});
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, delim)) fields.push_back(trim(field));
    return fields;
}

double parse_number(std::string field, std::size_t row, std::size_t col, bool decimal_comma) {
    if (decimal_comma)
        std::replace(field.begin(), field.end(), ',', '.');
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(field, &consumed);
    } catch (const std::exception&) {
        consumed = 0;
    }
    if (consumed != field.size() || field.empty())
        throw ParseError("meteorology: row " + std::to_string(row) + ", column " +
                         std::to_string(col) + ": cannot parse number from '" + field + "'");
    return value;
}

} // namespace

std::vector<WindRecord> load_meteorology(std::istream& in, const std::vector<double>& heights) {
    std::vector<WindRecord> records;
    std::string line;
    std::size_t row = 0;
    const std::size_t nh = heights.size();
    while (std::getline(in, line)) {
        ++row;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;

        // Semicolon-delimited rows may use decimal commas; comma-delimited
        // rows must use decimal points.
        const bool semis = line.find(';') != std::string::npos;
        const auto fields = split(line, semis ? ';' : ',');
        if (fields.size() != 1 + 2 * nh)
            throw ParseError("meteorology: row " + std::to_string(row) + ": expected " +
                             std::to_string(1 + 2 * nh) + " columns, got " +
                             std::to_string(fields.size()));

        WindRecord rec;
        rec.time_label = fields[0];
        rec.heights = heights;
        for (std::size_t i = 0; i < nh; ++i)
            rec.speeds.push_back(parse_number(fields[1 + i], row, 2 + i, semis));
        for (std::size_t i = 0; i < nh; ++i) {
            double dir = parse_number(fields[1 + nh + i], row, 2 + nh + i, semis);
            if (dir == 360.0) dir = 0.0;
            rec.directions.push_back(dir);
        }
        rec.validate();
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<WindRecord> load_meteorology_file(const std::string& path,
                                              const std::vector<double>& heights) {
    std::ifstream in(path);
    if (!in) throw ParseError("meteorology: cannot open '" + path + "'");
    return load_meteorology(in, heights);
}

namespace {

double interp_direction(double d0, double d1, double frac) {
    double delta = std::fmod(d1 - d0, 360.0);
    if (delta > 180.0) delta -= 360.0;
    if (delta < -180.0) delta += 360.0;
    double dir = d0 + frac * delta;
    dir = std::fmod(dir, 360.0);
    if (dir < 0.0) dir += 360.0;
    return dir;
}

} // namespace

Vec3 mean_wind_at(const std::vector<WindRecord>& records, double z, double t, double period_s) {
    if (records.empty()) throw ValidationError("mean_wind_at: no wind records");
    if (!(z > 0.0)) throw std::domain_error("mean_wind_at: height must be positive");

    std::size_t idx = 0;
    if (t > 0.0) idx = static_cast<std::size_t>(t / period_s);
    idx = std::min(idx, records.size() - 1);
    const WindRecord& rec = records[idx];

    const auto& h = rec.heights;
    const std::size_t n = h.size();

    double speed, dir;
    if (z <= h.front()) {
        speed = rec.speeds.front();
        dir = rec.directions.front();
    } else if (z >= h.back()) {
        speed = rec.speeds.back();
        dir = rec.directions.back();
    } else {
        std::size_t k = 0;
        while (k + 2 < n && z >= h[k + 1]) ++k;
        const double frac = (std::log(z) - std::log(h[k])) / (std::log(h[k + 1]) - std::log(h[k]));
        speed = rec.speeds[k] + frac * (rec.speeds[k + 1] - rec.speeds[k]);
        dir = interp_direction(rec.directions[k], rec.directions[k + 1], frac);
    }

    const double rad = dir * M_PI / 180.0;
    return {-speed * std::sin(rad), -speed * std::cos(rad), 0.0};
}

TurbulenceParams turbulence_at(const TurbulenceParams& params, double /*z*/) {
    params.validate();
    return params;
}

} // namespace srcinv
