#pragma once

#include <string>
#include <vector>

#include "fedqv/simulator.hpp"

namespace fedqv {

// Flat "key = value" experiment files with dotted section prefixes
// (voting.theta, attack.variant, ...). '#' starts a comment. Omitted keys
// keep the library defaults (N=100, C=10, rounds=100, E=5, r=0.01, batch 10,
// B=25, theta=0.1). Unknown keys and invalid values raise with the line.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<string>");

enum class SweepAxis { budget, theta, iota, attacker_fraction };

SweepAxis parse_sweep_axis(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

struct SweepSpec {
    SweepAxis axis = SweepAxis::theta;
    std::vector<double> values;
    int repeats = 1;

    void validate() const;
};

// Applies one sweep-cell value to a copy of the base configuration.
ExperimentConfig apply_sweep_value(const ExperimentConfig& base, SweepAxis axis, double value);

// Deterministic per-cell seed: hash(base_seed, axis, value, repeat).
std::uint64_t sweep_cell_seed(std::uint64_t base_seed, SweepAxis axis, double value, int repeat);

} // namespace fedqv
