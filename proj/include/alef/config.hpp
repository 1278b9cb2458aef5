#pragma once

#include "alef/common.hpp"

#include <map>

namespace alef {

/// Flat run configuration. Parsed from `key = value` lines with `#`
/// comments; unknown keys are rejected with the line number.
struct RunConfig {
    std::string background = "euclidean"; // euclidean | cone | eguchi_hanson
    int n = 4;
    int gamma_order = 2;
    double a = 1.0; // bolt radius
    double r_min = 0.0;
    double r_max = 40.0;
    size_t grid_n = 256;
    double stretch = 1.01;

    std::string family = "gaussian";
    double amplitude = 1e-2;
    double width = 2.0;
    double center = 0.0;
    double tail_exponent = 0.0;

    double delta_ball = 0.2;
    double t_max = 10.0;
    double tol_conv = 1e-5;
    double tol_mono = 1e-8;
    double safety = 0.4;
    double diag_t0 = 0.01;
    double diag_factor = 1.3;

    bool snapshots = false;
    double snap_t0 = 10.0;
    double snap_dt = 2.0;
    std::vector<double> mv_radii = {2.0, 4.0, 8.0};
    double mv_time = 100.0;

    int spectral_m = 6;
    unsigned seed = 20240901u;
    bool cross_term = false;

    std::string scenario;
    std::string out_dir = "out";

    /// checks every referenced module precondition; throws InputError
    void validate() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);
std::string render_config(const RunConfig& c);

/// FNV-1a hash of the canonical rendering, for the report
std::string config_hash(const RunConfig& c);

} // namespace alef
