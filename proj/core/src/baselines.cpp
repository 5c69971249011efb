#include "fedqv/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedqv {

AggregatorVariant parse_aggregator(const std::string& name) {
    if (name == "fedavg") return AggregatorVariant::fedavg;
    if (name == "fedqv") return AggregatorVariant::fedqv;
    if (name == "fedqv_rep") return AggregatorVariant::fedqv_rep;
    if (name == "multikrum") return AggregatorVariant::multikrum;
    if (name == "trimmed_mean") return AggregatorVariant::trimmed_mean;
    if (name == "multikrum_fedqv") return AggregatorVariant::multikrum_fedqv;
    if (name == "trimmed_mean_fedqv") return AggregatorVariant::trimmed_mean_fedqv;
    if (name == "rep") return AggregatorVariant::rep;
    if (name == "rep_fedqv") return AggregatorVariant::rep_fedqv;
    throw std::invalid_argument("unknown aggregator: " + name);
}

std::string aggregator_name(AggregatorVariant v) {
    switch (v) {
        case AggregatorVariant::fedavg: return "fedavg";
        case AggregatorVariant::fedqv: return "fedqv";
        case AggregatorVariant::fedqv_rep: return "fedqv_rep";
        case AggregatorVariant::multikrum: return "multikrum";
        case AggregatorVariant::trimmed_mean: return "trimmed_mean";
        case AggregatorVariant::multikrum_fedqv: return "multikrum_fedqv";
        case AggregatorVariant::trimmed_mean_fedqv: return "trimmed_mean_fedqv";
        case AggregatorVariant::rep: return "rep";
        case AggregatorVariant::rep_fedqv: return "rep_fedqv";
    }
    return "?";
}

bool AggregatorChoice::uses_voting() const {
    switch (variant) {
        case AggregatorVariant::fedqv:
        case AggregatorVariant::fedqv_rep:
        case AggregatorVariant::multikrum_fedqv:
        case AggregatorVariant::trimmed_mean_fedqv:
        case AggregatorVariant::rep_fedqv: return true;
        default: return false;
    }
}

bool AggregatorChoice::uses_reputation() const {
    switch (variant) {
        case AggregatorVariant::fedqv_rep:
        case AggregatorVariant::rep:
        case AggregatorVariant::rep_fedqv: return true;
        default: return false;
    }
}

std::vector<double> fedavg_weights(std::span<const int> dataset_sizes) {
    if (dataset_sizes.empty()) throw std::invalid_argument("fedavg_weights: empty input");
    double total = 0.0;
    for (int n : dataset_sizes) {
        if (n < 1) throw std::invalid_argument("fedavg_weights: dataset sizes must be positive");
        total += n;
    }
    std::vector<double> w(dataset_sizes.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = dataset_sizes[i] / total;
    return w;
}

namespace {

double sq_dist(const ParameterVector& a, const ParameterVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

std::vector<int> multi_krum(std::span<const ParameterVector> models, int f, int m_select) {
    const int n = static_cast<int>(models.size());
    if (f < 0 || n < f + 3) throw std::invalid_argument("multi_krum: requires n >= f+3");
    if (m_select < 1 || m_select > n - f) throw std::invalid_argument("multi_krum: m_select outside [1, n-f]");
    for (const auto& m : models) {
        if (m.size() != models.front().size()) throw std::invalid_argument("multi_krum: dimension mismatch");
    }

    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = sq_dist(models[i], models[j]);
    }

    const int k = n - f - 2; // closest peers counted per score
    std::vector<double> scores(n, 0.0);
    std::vector<double> row;
    for (int i = 0; i < n; ++i) {
        row.clear();
        for (int j = 0; j < n; ++j) {
            if (j != i) row.push_back(dist[i][j]);
        }
        std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
        scores[i] = std::accumulate(row.begin(), row.begin() + k, 0.0);
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });
    std::vector<int> selected(order.begin(), order.begin() + m_select);
    std::sort(selected.begin(), selected.end());
    return selected;
}

ParameterVector trimmed_mean(std::span<const ParameterVector> models, int beta) {
    const int n = static_cast<int>(models.size());
    if (n == 0) throw std::invalid_argument("trimmed_mean: empty input");
    if (beta < 0 || 2 * beta >= n) throw std::invalid_argument("trimmed_mean: requires 2*beta < n");
    const std::size_t dim = models.front().size();
    for (const auto& m : models) {
        if (m.size() != dim) throw std::invalid_argument("trimmed_mean: dimension mismatch");
    }

    ParameterVector out(dim, 0.0);
    std::vector<double> column(n);
    for (std::size_t j = 0; j < dim; ++j) {
        for (int i = 0; i < n; ++i) column[i] = models[i][j];
        std::sort(column.begin(), column.end());
        double s = 0.0;
        for (int i = beta; i < n - beta; ++i) s += column[i];
        out[j] = s / (n - 2 * beta);
    }
    return out;
}

RoundOutcome multikrum_fedqv_round(const ParameterVector& prev_global,
                                   std::span<const UpdateMessage> msgs, BudgetLedger& ledger,
                                   const VotingConfig& cfg, int f, int m_select) {
    std::vector<ParameterVector> models;
    models.reserve(msgs.size());
    for (const auto& m : msgs) models.push_back(m.model);
    const auto selected = multi_krum(models, f, m_select);

    FedqvRoundOptions opts;
    opts.included.assign(msgs.size(), false);
    for (int idx : selected) opts.included[idx] = true;
    return fedqv_round(prev_global, msgs, ledger, cfg, opts);
}

RoundOutcome trimmed_mean_fedqv_round(const ParameterVector& prev_global,
                                      std::span<const UpdateMessage> msgs, BudgetLedger& ledger,
                                      const VotingConfig& cfg, int beta) {
    RoundOutcome outcome = fedqv_round(prev_global, msgs, ledger, cfg);
    double total = 0.0;
    for (const auto& pv : outcome.votes) total += pv.vote;
    if (total <= 0.0) return outcome; // aggregated_model is already prev_global

    const int n = static_cast<int>(msgs.size());
    std::vector<ParameterVector> scaled;
    scaled.reserve(msgs.size());
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        scaled.push_back(scale(msgs[i].model, double(n) * outcome.votes[i].vote / total));
    }
    outcome.aggregated_model = trimmed_mean(scaled, beta);
    return outcome;
}

} // namespace fedqv
