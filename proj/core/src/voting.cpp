#include "fedqv/voting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedqv {

void VotingConfig::validate() const {
    if (!(theta > 0.0 && theta < 0.5)) throw std::invalid_argument("VotingConfig: theta must be in (0, 0.5)");
    if (!(initial_budget > 0.0)) throw std::invalid_argument("VotingConfig: budget must be > 0");
}

BudgetLedger::BudgetLedger(int num_parties, double initial_budget) {
    if (num_parties < 0) throw std::invalid_argument("BudgetLedger: negative party count");
    if (initial_budget < 0.0) throw std::invalid_argument("BudgetLedger: negative budget");
    budgets_.assign(num_parties, initial_budget);
}

void BudgetLedger::apply_penalty(int party, double normalized_score, double theta) {
    if (normalized_score < 0.0 || normalized_score > 1.0) {
        throw std::invalid_argument("apply_penalty: normalized score outside [0,1]");
    }
    if (normalized_score <= theta || normalized_score >= 1.0 - theta) {
        double& b = budgets_.at(party);
        b = std::max(0.0, b + std::log(std::max(normalized_score, 1e-12)) - 1.0);
    }
}

void BudgetLedger::deduct(int party, double vote) {
    if (vote < 0.0) throw std::invalid_argument("deduct: negative vote");
    double& b = budgets_.at(party);
    b = std::max(0.0, b - vote * vote);
}

void BudgetLedger::grant(int party, double amount) {
    if (amount < 0.0) throw std::invalid_argument("grant: negative amount");
    budgets_.at(party) += amount;
}

std::vector<double> min_max_normalize(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("min_max_normalize: empty input");
    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> out(scores.size());
    if (hi - lo <= 0.0) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - lo) / (hi - lo);
    return out;
}

double masked_credit(double normalized_score, double theta) {
    if (normalized_score > theta && normalized_score < 1.0 - theta) {
        return -std::log(normalized_score) + 1.0;
    }
    return 0.0;
}

double quadratic_vote(int dataset_size, double credit, double budget) {
    if (dataset_size < 1) throw std::invalid_argument("quadratic_vote: dataset size must be >= 1");
    if (credit < 0.0) throw std::invalid_argument("quadratic_vote: negative credit");
    return std::sqrt(std::min(double(dataset_size) * credit, std::max(0.0, budget)));
}

ParameterVector aggregate_weighted(std::span<const ParameterVector> models,
                                   std::span<const double> weights, const ParameterVector& fallback) {
    if (models.size() != weights.size()) throw std::invalid_argument("aggregate_weighted: count mismatch");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("aggregate_weighted: negative weight");
        total += w;
    }
    if (total <= 0.0) return fallback;

    ParameterVector out(fallback.size(), 0.0);
    if (!models.empty()) out.assign(models.front().size(), 0.0);
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (models[i].size() != out.size()) throw std::invalid_argument("aggregate_weighted: dimension mismatch");
        const double w = weights[i] / total;
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += w * models[i][j];
    }
    return out;
}

RoundOutcome fedqv_round(const ParameterVector& prev_global, std::span<const UpdateMessage> msgs,
                         BudgetLedger& ledger, const VotingConfig& cfg, const FedqvRoundOptions& opts) {
    cfg.validate();
    if (msgs.empty()) throw std::invalid_argument("fedqv_round: no update messages");
    if (!opts.included.empty() && opts.included.size() != msgs.size()) {
        throw std::invalid_argument("fedqv_round: inclusion mask size mismatch");
    }
    if (!opts.reputation.empty() && opts.reputation.size() != msgs.size()) {
        throw std::invalid_argument("fedqv_round: reputation span size mismatch");
    }

    auto included = [&](std::size_t i) { return opts.included.empty() || opts.included[i]; };

    // normalize over the candidate set only
    std::vector<double> raw;
    raw.reserve(msgs.size());
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        if (included(i)) raw.push_back(msgs[i].similarity);
    }
    std::vector<double> normalized;
    if (!raw.empty()) normalized = min_max_normalize(raw);

    RoundOutcome outcome;
    outcome.votes.resize(msgs.size());
    std::vector<double> weights(msgs.size(), 0.0);

    std::size_t cursor = 0;
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        PartyVote& pv = outcome.votes[i];
        pv.party = msgs[i].party;
        if (!included(i)) {
            pv.budget_after = ledger.budget(msgs[i].party);
            continue;
        }
        const double s_bar = normalized[cursor++];
        pv.normalized_score = s_bar;

        ledger.apply_penalty(msgs[i].party, s_bar, cfg.theta);
        pv.credit = masked_credit(s_bar, cfg.theta);

        if (!opts.reputation.empty()) {
            const double r = opts.reputation[i];
            if (r >= opts.reputation_threshold) {
                ledger.grant(msgs[i].party, r);
                pv.credit = r + pv.credit;
            } else {
                pv.credit = 0.0;
            }
        }

        pv.vote = quadratic_vote(msgs[i].dataset_size, pv.credit, ledger.budget(msgs[i].party));
        ledger.deduct(msgs[i].party, pv.vote);
        pv.budget_after = ledger.budget(msgs[i].party);
        weights[i] = pv.vote;
    }

    std::vector<ParameterVector> models;
    models.reserve(msgs.size());
    for (const auto& m : msgs) models.push_back(m.model);
    outcome.aggregated_model = aggregate_weighted(models, weights, prev_global);
    return outcome;
}

} // namespace fedqv
