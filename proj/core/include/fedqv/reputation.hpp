#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fedqv/vector_ops.hpp"

namespace fedqv {

struct ReputationParams {
    double kappa = 1.0;        // positive-evidence weight
    double eta = 1.0;          // negative-evidence weight
    double base_rate = 0.5;    // a, prior belief in [0,1]
    double prior_weight = 2.0; // W > 0
    double lambda = 0.5;       // reputation threshold in [0,1]
    double delta = 2.0;        // acceptance tolerance in MAD units
    int coords_per_round = 100; // M; capped at the parameter dimension in use
    double decay = 0.9;        // P/N retention per round

    void validate() const;
};

struct ObservationIncrement {
    double positive = 0.0;
    double negative = 0.0;
};

// Samples M coordinates (seeded; without replacement when M <= dim) and for
// each computes the median and MAD across parties. A party scores a positive
// observation at a coordinate when its value lies within
// delta * (1.4826 * MAD + 1e-12) of the median, else a negative one.
// Requires at least 3 models.
std::vector<ObservationIncrement> observe(std::span<const ParameterVector> models, double delta,
                                          int coords, std::uint64_t seed);

// Subjective-logic score R = (kappa*P + W*a) / (kappa*P + eta*N + W).
double reputation_score(double positive, double negative, const ReputationParams& p);

// Adaptive-budget step: R >= lambda yields (B + R, R + c); otherwise (B, 0).
std::pair<double, double> adaptive_update(double budget, double credit, double reputation,
                                          double lambda);

// Per-party evidence accumulated across rounds with exponential decay.
class ReputationState {
  public:
    ReputationState() = default;
    explicit ReputationState(int num_parties) : positive_(num_parties, 0.0), negative_(num_parties, 0.0) {}

    int size() const { return static_cast<int>(positive_.size()); }
    double positive(int party) const { return positive_.at(party); }
    double negative(int party) const { return negative_.at(party); }

    // decay-then-add for the observed party only
    void record(int party, const ObservationIncrement& inc, double decay);

    double score(int party, const ReputationParams& p) const;

  private:
    std::vector<double> positive_;
    std::vector<double> negative_;
};

} // namespace fedqv
