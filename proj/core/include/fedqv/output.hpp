#pragma once

#include <string>
#include <vector>

#include "fedqv/config.hpp"
#include "fedqv/simulator.hpp"

namespace fedqv {

inline constexpr const char* kVersion = "fedqv 0.1.0";

// Shortest decimal representation that round-trips the 64-bit value.
std::string format_double(double v);

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records);
void write_votes_csv(const std::string& path, const std::vector<MetricsRecord>& records);
void write_summary_json(const std::string& path, const ExperimentConfig& cfg,
                        const std::vector<MetricsRecord>& records);

// Executes the experiment and writes metrics.csv, summary.json and (when
// vote tracing is on) votes.csv into out_dir. Returns the trace.
std::vector<MetricsRecord> run_to_directory(const ExperimentConfig& cfg, const std::string& out_dir);

struct SweepRow {
    SweepAxis axis = SweepAxis::theta;
    double value = 0.0;
    int repeat = 0;
    std::uint64_t seed = 0;
    double final_acc = 0.0;
    double final_asr = 0.0;
};

// Runs each (value, repeat) cell with its derived seed, cells in parallel,
// then writes grid.csv (one row per cell, value-major order).
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepSpec& sweep,
                                const std::string& out_dir);

} // namespace fedqv
