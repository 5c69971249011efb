#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedqv/dataset.hpp"
#include "fedqv/vector_ops.hpp"
#include "fedqv/voting.hpp"

namespace fedqv {

enum class AttackVariant {
    none,
    labelflip,
    gaussian,
    backdoor,
    scaling,
    neurotoxin,
    krum_lmp,
    trim_lmp,
    min_max,
    min_sum,
    qv_adaptive,
};

AttackVariant parse_attack(const std::string& name);
std::string attack_name(AttackVariant v);
bool attack_is_targeted(AttackVariant v); // trigger-based attacks measured by ASR

enum class PerturbationKind { inverse_std, inverse_unit, inverse_sign };
PerturbationKind parse_perturbation(const std::string& name);

struct AttackSpec {
    AttackVariant variant = AttackVariant::none;
    double malicious_fraction = 0.0; // m, share of all parties
    double gaussian_scale = 1.0;
    TriggerPattern trigger;          // empty pixel set -> default trigger at runtime
    double poison_fraction = 0.5;    // share of the attacker's own data that is triggered
    double scale_factor = 0.0;       // 0 -> number of parties at runtime
    double neurotoxin_k = 0.1;       // top-k fraction excluded from the constraint set
    int pgd_epochs = 5;
    PerturbationKind perturbation = PerturbationKind::inverse_std;
    int search_iters = 20;

    void validate() const;
};

// Every craft is deterministic given its inputs; each sees only the global
// model, the colluding attackers' own benign update estimates, and the
// attacker's own data -- never budgets or the server ledger.

// Coordinates drawn iid from Normal(mean, (sigma_scale*std)^2) with mean/std
// the empirical moments of the attacker's own benign update entries.
ParameterVector gaussian_craft(const ParameterVector& benign, double sigma_scale, std::uint64_t seed);

// factor * poisoned on the last round, the benign update otherwise.
ParameterVector scaling_craft(const ParameterVector& benign, const ParameterVector& poisoned,
                              double factor, int round, int total_rounds);

// Constraint set for the neurotoxin projection: coordinates ranked in the
// bottom (1-k) by |benign_grad| are allowed (floor(k*d) masked out).
std::vector<bool> neurotoxin_allowed(const ParameterVector& benign_grad, double k);

// poisoned_grad with every coordinate outside the constraint set zeroed.
ParameterVector neurotoxin_craft(const ParameterVector& benign_grad,
                                 const ParameterVector& poisoned_grad, double k);

// Fang-style Krum evasion: crafted = global - lambda * sign(mean benign delta),
// lambda maximised by bisection so a locally simulated Krum over
// {crafted x num_attackers, benign} still selects a crafted entry.
// benign_deltas are updates relative to the global model.
ParameterVector lmp_krum_craft(const ParameterVector& global,
                               std::span<const ParameterVector> benign_deltas, int num_attackers,
                               int search_iters);

// Directed trimmed-mean evasion; per coordinate the crafted delta is drawn
// just outside the benign extreme opposite to the benign direction:
//   dir_j >= 0: uniform in [min_j - |min_j|, min_j]
//   dir_j <  0: uniform in [max_j, max_j + |max_j|]
ParameterVector lmp_trim_craft(std::span<const ParameterVector> benign_deltas, std::uint64_t seed);

// crafted = mean(benign) + gamma * p with the largest gamma keeping
// max_i |crafted - benign_i| <= max_{i,j} |benign_i - benign_j|.
ParameterVector min_max_craft(std::span<const ParameterVector> benign_deltas,
                              PerturbationKind kind, int search_iters);

// As min_max_craft with constraint
// sum_i |crafted - benign_i|^2 <= max_i sum_j |benign_i - benign_j|^2.
ParameterVector min_sum_craft(std::span<const ParameterVector> benign_deltas,
                              PerturbationKind kind, int search_iters);

struct QvAdaptiveResult {
    ParameterVector model;
    double reported_score = 0.0;
};

// Two-stage adaptive attack against the voting pipeline. Stage 1 picks, from
// the colluding attackers' benign scores, the one whose min-max normalized
// value is closest to 0.5 (largest acceptance margin); all attackers report
// it. Stage 2 moves the attacker's model against d = sign(global - mean
// benign model) as far as a locally simulated voting round (fresh budgets,
// the crafted entry's own recomputed similarity, benign scores for the other
// attackers) still grants the crafted entry a positive vote.
QvAdaptiveResult qv_adaptive_craft(const ParameterVector& global,
                                   std::span<const ParameterVector> benign_models,
                                   std::size_t own_index, std::span<const double> benign_scores,
                                   std::span<const int> dataset_sizes, const VotingConfig& cfg,
                                   int search_iters);

} // namespace fedqv
