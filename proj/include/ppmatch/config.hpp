#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppmatch/process_model.hpp"
#include "ppmatch/score_fn.hpp"

namespace ppmatch {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Command { Generate, Rate, Wait, Rare, Clt, Validate };

const char* to_string(Command c);
Command command_from_string(const std::string& s);

// Flat key-value experiment description with section headers. Canonical
// serialization round-trips through parse.
struct ExperimentConfig {
    Command command = Command::Validate;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = "out";

    ProcessModel x_model = ProcessModel::poisson(1.0);
    ProcessModel y_model = ProcessModel::poisson(1.0);
    ScoreFn f = ScoreFn(ScoreComponent::indicator(0.25));

    std::vector<double> theta{1.0};
    std::vector<double> l_list{10.0};
    int replicates = 100;
    std::uint64_t n_samples = 100000;
    std::uint64_t naive_samples = 0;
    bool exact_mode = true;
    double step = 0.05;
    double horizon_c = 50.0;
    double horizon_cap = 1e18;

    std::string serialize() const;
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig parse_file(const std::string& path);

    bool operator==(const ExperimentConfig& o) const { return serialize() == o.serialize(); }
};

} // namespace ppmatch
