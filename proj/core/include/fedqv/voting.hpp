#pragma once

#include <span>
#include <vector>

#include "fedqv/vector_ops.hpp"

namespace fedqv {

// One party's per-round report: its local model, the cosine similarity it
// computed against the broadcast global model, and its training-set size.
struct UpdateMessage {
    int party = 0;
    ParameterVector model;
    double similarity = 0.0;
    int dataset_size = 1;
};

struct VotingConfig {
    double theta = 0.1;          // similarity band half-width, 0 < theta < 0.5
    double initial_budget = 25.0;

    void validate() const;
};

// Per-party voice-credit budgets, persisted across rounds. Budgets never go
// negative; only the voting pipeline mutates them, sequentially by party.
class BudgetLedger {
  public:
    BudgetLedger() = default;
    BudgetLedger(int num_parties, double initial_budget);

    int size() const { return static_cast<int>(budgets_.size()); }
    double budget(int party) const { return budgets_.at(party); }

    // B <- max(0, B + ln(max(s_bar, 1e-12)) - 1) when s_bar is outside the
    // open band (theta, 1-theta); otherwise unchanged.
    void apply_penalty(int party, double normalized_score, double theta);

    // B <- max(0, B - v^2)
    void deduct(int party, double vote);

    // reputation top-up (adaptive budget): B <- B + amount, amount >= 0
    void grant(int party, double amount);

  private:
    std::vector<double> budgets_;
};

// Intermediate values of one voting round, in message order.
struct PartyVote {
    int party = 0;
    double normalized_score = 0.0;
    double credit = 0.0;
    double vote = 0.0;
    double budget_after = 0.0;
};

struct RoundOutcome {
    std::vector<PartyVote> votes;
    ParameterVector aggregated_model;
};

// (s - min)/(max - min); all-equal or single-score inputs map to 0.5 so the
// party sits mid-band (neither penalised nor maximally credited).
std::vector<double> min_max_normalize(std::span<const double> scores);

// Eq.-style masked credit: c = (-ln(s_bar) + 1) when theta < s_bar < 1-theta, else 0.
double masked_credit(double normalized_score, double theta);

// v = sqrt(min(|D| * c, max(0, B)))
double quadratic_vote(int dataset_size, double credit, double budget);

// sum_i (w_i / sum_j w_j) * model_i; all-zero weights fall back to the
// previous global model supplied by the caller.
ParameterVector aggregate_weighted(std::span<const ParameterVector> models,
                                   std::span<const double> weights, const ParameterVector& fallback);

// Hooks for composition with selector defenses and the adaptive-budget
// extension. `included` (when non-empty, one flag per message) marks the
// candidate set: excluded parties take no part in normalization, keep their
// budget untouched, and vote 0. `reputation` (when non-empty) applies the
// adaptive step between credit computation and voting:
//   R >= lambda:  B <- B + R, c <- R + c;  otherwise c <- 0.
struct FedqvRoundOptions {
    std::vector<bool> included;
    std::vector<double> reputation;
    double reputation_threshold = 0.5;
};

// Full server-side pipeline, in order: min-max normalize -> penalty ->
// masked credit -> (optional reputation adjustment) -> quadratic vote ->
// budget deduction -> weighted aggregation. If every vote is 0 the previous
// global model is retained.
RoundOutcome fedqv_round(const ParameterVector& prev_global, std::span<const UpdateMessage> msgs,
                         BudgetLedger& ledger, const VotingConfig& cfg,
                         const FedqvRoundOptions& opts = {});

} // namespace fedqv
