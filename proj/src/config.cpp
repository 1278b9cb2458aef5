#include "alef/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace alef {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key, size_t line) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw InputError("config line " + std::to_string(line) + ": key '" + key +
                         "' expects a number, got '" + v + "'");
    }
}

long parse_int(const std::string& v, const std::string& key, size_t line) {
    try {
        size_t pos = 0;
        long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw InputError("config line " + std::to_string(line) + ": key '" + key +
                         "' expects an integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& v, const std::string& key, size_t line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InputError("config line " + std::to_string(line) + ": key '" + key +
                     "' expects true/false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& v, const std::string& key, size_t line) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_double(item, key, line));
    }
    if (out.empty())
        throw InputError("config line " + std::to_string(line) + ": key '" + key +
                         "' expects a comma list of numbers");
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::stringstream ss(text);
    std::string raw;
    size_t lineno = 0;
    while (std::getline(ss, raw)) {
        ++lineno;
        std::string line = raw;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(lineno) +
                             ": expected 'key = value', got '" + raw + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "background") c.background = val;
        else if (key == "n") c.n = int(parse_int(val, key, lineno));
        else if (key == "gamma_order") c.gamma_order = int(parse_int(val, key, lineno));
        else if (key == "a") c.a = parse_double(val, key, lineno);
        else if (key == "r_min") c.r_min = parse_double(val, key, lineno);
        else if (key == "r_max") c.r_max = parse_double(val, key, lineno);
        else if (key == "grid_n") c.grid_n = size_t(parse_int(val, key, lineno));
        else if (key == "stretch") c.stretch = parse_double(val, key, lineno);
        else if (key == "family") c.family = val;
        else if (key == "amplitude") c.amplitude = parse_double(val, key, lineno);
        else if (key == "width") c.width = parse_double(val, key, lineno);
        else if (key == "center") c.center = parse_double(val, key, lineno);
        else if (key == "tail_exponent") c.tail_exponent = parse_double(val, key, lineno);
        else if (key == "delta_ball") c.delta_ball = parse_double(val, key, lineno);
        else if (key == "t_max") c.t_max = parse_double(val, key, lineno);
        else if (key == "tol_conv") c.tol_conv = parse_double(val, key, lineno);
        else if (key == "tol_mono") c.tol_mono = parse_double(val, key, lineno);
        else if (key == "safety") c.safety = parse_double(val, key, lineno);
        else if (key == "diag_t0") c.diag_t0 = parse_double(val, key, lineno);
        else if (key == "diag_factor") c.diag_factor = parse_double(val, key, lineno);
        else if (key == "snapshots") c.snapshots = parse_bool(val, key, lineno);
        else if (key == "snap_t0") c.snap_t0 = parse_double(val, key, lineno);
        else if (key == "snap_dt") c.snap_dt = parse_double(val, key, lineno);
        else if (key == "mv_radii") c.mv_radii = parse_list(val, key, lineno);
        else if (key == "mv_time") c.mv_time = parse_double(val, key, lineno);
        else if (key == "spectral_m") c.spectral_m = int(parse_int(val, key, lineno));
        else if (key == "seed") c.seed = unsigned(parse_int(val, key, lineno));
        else if (key == "cross_term") c.cross_term = parse_bool(val, key, lineno);
        else if (key == "scenario") c.scenario = val;
        else if (key == "out_dir") c.out_dir = val;
        else
            throw InputError("config line " + std::to_string(lineno) + ": unknown key '" + key +
                             "'");
    }
    c.validate();
    return c;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open config file: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str());
}

void RunConfig::validate() const {
    require(background == "euclidean" || background == "cone" || background == "eguchi_hanson",
            "config: background must be euclidean|cone|eguchi_hanson");
    require(n >= 3, "config: n >= 3 required");
    if (background == "cone") {
        require(gamma_order >= 2, "config: cone requires gamma_order >= 2");
        require(r_min > 0.0, "config: cone requires r_min > 0 (apex excluded)");
    }
    if (background == "eguchi_hanson") {
        require(n == 4, "config: eguchi_hanson requires n = 4");
        require(a > 0.0, "config: bolt parameter a > 0 required");
        require(r_min == a, "config: eguchi_hanson requires r_min = a");
    }
    require(r_max > r_min && r_min >= 0.0, "config: need r_max > r_min >= 0");
    require(grid_n >= 16, "config: grid_n >= 16 required");
    require(stretch >= 1.0, "config: stretch >= 1 required");
    require(amplitude >= 0.0, "config: amplitude >= 0 required");
    require(width > 0.0, "config: width > 0 required");
    require(delta_ball > 0.0, "config: delta_ball > 0 required");
    require(t_max > 0.0, "config: t_max > 0 required");
    require(safety > 0.0 && safety <= 1.0, "config: safety in (0,1] required");
    require(diag_factor > 1.0, "config: diag_factor > 1 required");
    require(diag_t0 > 0.0, "config: diag_t0 > 0 required");
    require(spectral_m >= 1, "config: spectral_m >= 1 required");
    for (double r : mv_radii) require(r > 0.0, "config: mv_radii must be positive");
}

std::string render_config(const RunConfig& c) {
    std::ostringstream o;
    o << "background = " << c.background << "\n";
    o << "n = " << c.n << "\n";
    o << "gamma_order = " << c.gamma_order << "\n";
    o << "a = " << fmt(c.a) << "\n";
    o << "r_min = " << fmt(c.r_min) << "\n";
    o << "r_max = " << fmt(c.r_max) << "\n";
    o << "grid_n = " << c.grid_n << "\n";
    o << "stretch = " << fmt(c.stretch) << "\n";
    o << "family = " << c.family << "\n";
    o << "amplitude = " << fmt(c.amplitude) << "\n";
    o << "width = " << fmt(c.width) << "\n";
    o << "center = " << fmt(c.center) << "\n";
    o << "tail_exponent = " << fmt(c.tail_exponent) << "\n";
    o << "delta_ball = " << fmt(c.delta_ball) << "\n";
    o << "t_max = " << fmt(c.t_max) << "\n";
    o << "tol_conv = " << fmt(c.tol_conv) << "\n";
    o << "tol_mono = " << fmt(c.tol_mono) << "\n";
    o << "safety = " << fmt(c.safety) << "\n";
    o << "diag_t0 = " << fmt(c.diag_t0) << "\n";
    o << "diag_factor = " << fmt(c.diag_factor) << "\n";
    o << "snapshots = " << (c.snapshots ? "true" : "false") << "\n";
    o << "snap_t0 = " << fmt(c.snap_t0) << "\n";
    o << "snap_dt = " << fmt(c.snap_dt) << "\n";
    o << "mv_radii = ";
    for (size_t i = 0; i < c.mv_radii.size(); ++i)
        o << (i ? "," : "") << fmt(c.mv_radii[i]);
    o << "\n";
    o << "mv_time = " << fmt(c.mv_time) << "\n";
    o << "spectral_m = " << c.spectral_m << "\n";
    o << "seed = " << c.seed << "\n";
    o << "cross_term = " << (c.cross_term ? "true" : "false") << "\n";
    if (!c.scenario.empty()) o << "scenario = " << c.scenario << "\n";
    o << "out_dir = " << c.out_dir << "\n";
    return o.str();
}

std::string config_hash(const RunConfig& c) {
    const std::string s = render_config(c);
    unsigned long long h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", h);
    return buf;
}

} // namespace alef
