#pragma once

#include <string>
#include <vector>

#include "ppmatch/config.hpp"

namespace ppmatch {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOutcome {
    int exit_code = 0; // 0 ok, 2 validation hard failure (runtime errors throw)
    std::string manifest_text;
    std::vector<std::string> csv_paths;
};

// Validates conditions, dispatches the configured command, writes CSV
// artifacts and manifest.txt into config.out_dir. Everything except the
// [timing] section is a deterministic function of (config, seed).
RunOutcome run(const ExperimentConfig& config);

} // namespace ppmatch
