#pragma once

#include "alef/config.hpp"

#include <map>

namespace alef {

inline constexpr const char* kVersion = "alef 0.1.0";

/// Machine-readable run summary: ordered key = value lines plus the paths of
/// the emitted CSVs. Every acceptance-relevant quantity has a stable key.
struct Report {
    std::vector<std::pair<std::string, std::string>> keys;
    std::vector<std::string> csv_paths;
    int exit_code = 0;

    void set(const std::string& k, const std::string& v);
    void set(const std::string& k, double v);
    const std::string* find(const std::string& k) const;
};

std::vector<std::string> list_scenarios();
RunConfig scenario_config(const std::string& name);

/// Spectral preflight, flow run, fits; deterministic for a fixed config.
Report run_scenario(const RunConfig& c);

/// Write summary + CSVs into dir (atomically: write-then-rename).
/// Returns the summary path.
std::string emit_report(Report& r, const std::string& dir);

} // namespace alef
