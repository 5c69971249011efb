#pragma once

#include <span>
#include <string>
#include <vector>

#include "fedqv/vector_ops.hpp"
#include "fedqv/voting.hpp"

namespace fedqv {

enum class AggregatorVariant {
    fedavg,
    fedqv,
    fedqv_rep,
    multikrum,
    trimmed_mean,
    multikrum_fedqv,
    trimmed_mean_fedqv,
    rep,
    rep_fedqv,
};

AggregatorVariant parse_aggregator(const std::string& name);
std::string aggregator_name(AggregatorVariant v);

struct AggregatorChoice {
    AggregatorVariant variant = AggregatorVariant::fedavg;
    // -1 lets the simulator substitute the round's true attacker count
    // (oracle knowledge, the standard evaluation convention).
    int krum_f = -1;
    int trim_beta = -1;

    bool uses_voting() const;
    bool uses_reputation() const;
};

// |D_i| / sum |D_j|
std::vector<double> fedavg_weights(std::span<const int> dataset_sizes);

// Each model scored by the sum of squared L2 distances to its n-f-2 nearest
// peers; returns the m_select lowest-scoring indices (ascending), ties broken
// toward the lowest index. Requires n >= f+3 and 1 <= m_select <= n-f.
std::vector<int> multi_krum(std::span<const ParameterVector> models, int f, int m_select);

// Coordinate-wise: drop the beta largest and beta smallest values, average
// the rest. Requires 2*beta < n.
ParameterVector trimmed_mean(std::span<const ParameterVector> models, int beta);

// Multi-Krum picks the candidate set, then FedQV weights the survivors.
// Excluded parties vote 0 and their budgets are left untouched this round.
RoundOutcome multikrum_fedqv_round(const ParameterVector& prev_global,
                                   std::span<const UpdateMessage> msgs, BudgetLedger& ledger,
                                   const VotingConfig& cfg, int f, int m_select);

// FedQV weights are computed first; per coordinate the weight-scaled
// candidate values (n * w_i * model_i[j]) are then trimmed-mean averaged,
// so beta = 0 reduces to the plain FedQV aggregate.
RoundOutcome trimmed_mean_fedqv_round(const ParameterVector& prev_global,
                                      std::span<const UpdateMessage> msgs, BudgetLedger& ledger,
                                      const VotingConfig& cfg, int beta);

} // namespace fedqv
