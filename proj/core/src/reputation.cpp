#include "fedqv/reputation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fedqv/rng.hpp"

namespace fedqv {

void ReputationParams::validate() const {
    if (!(kappa > 0.0)) throw std::invalid_argument("ReputationParams: kappa must be > 0");
    if (!(eta > 0.0)) throw std::invalid_argument("ReputationParams: eta must be > 0");
    if (base_rate < 0.0 || base_rate > 1.0) throw std::invalid_argument("ReputationParams: base rate outside [0,1]");
    if (!(prior_weight > 0.0)) throw std::invalid_argument("ReputationParams: prior weight must be > 0");
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("ReputationParams: lambda outside [0,1]");
    if (!(delta > 0.0)) throw std::invalid_argument("ReputationParams: delta must be > 0");
    if (coords_per_round < 1) throw std::invalid_argument("ReputationParams: coords_per_round must be >= 1");
    if (decay < 0.0 || decay > 1.0) throw std::invalid_argument("ReputationParams: decay outside [0,1]");
}

namespace {

double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    auto mid = v.begin() + n / 2;
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

} // namespace

std::vector<ObservationIncrement> observe(std::span<const ParameterVector> models, double delta,
                                          int coords, std::uint64_t seed) {
    const std::size_t n = models.size();
    if (n < 3) throw std::invalid_argument("observe: needs at least 3 models");
    if (coords < 1) throw std::invalid_argument("observe: coords must be >= 1");
    const std::size_t dim = models.front().size();
    for (const auto& m : models) {
        if (m.size() != dim) throw std::invalid_argument("observe: dimension mismatch");
    }

    auto rng = make_rng({seed, hash_bytes("observe")});
    std::vector<std::size_t> picks;
    if (static_cast<std::size_t>(coords) <= dim) {
        std::vector<std::size_t> order(dim);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        picks.assign(order.begin(), order.begin() + coords);
    } else {
        std::uniform_int_distribution<std::size_t> uni(0, dim - 1);
        picks.resize(coords);
        for (auto& p : picks) p = uni(rng);
    }

    std::vector<ObservationIncrement> inc(n);
    std::vector<double> column(n), dev(n);
    for (std::size_t j : picks) {
        for (std::size_t i = 0; i < n; ++i) column[i] = models[i][j];
        std::vector<double> tmp = column;
        const double mu = median_inplace(tmp);
        for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(column[i] - mu);
        tmp = dev;
        const double mad = median_inplace(tmp);
        const double tol = delta * (1.4826 * mad + 1e-12);
        for (std::size_t i = 0; i < n; ++i) {
            if (dev[i] <= tol) {
                inc[i].positive += 1.0;
            } else {
                inc[i].negative += 1.0;
            }
        }
    }
    return inc;
}

double reputation_score(double positive, double negative, const ReputationParams& p) {
    if (positive < 0.0 || negative < 0.0) throw std::invalid_argument("reputation_score: negative evidence count");
    return (p.kappa * positive + p.prior_weight * p.base_rate) /
           (p.kappa * positive + p.eta * negative + p.prior_weight);
}

std::pair<double, double> adaptive_update(double budget, double credit, double reputation,
                                          double lambda) {
    if (budget < 0.0) throw std::invalid_argument("adaptive_update: negative budget");
    if (!std::isfinite(budget) || !std::isfinite(credit) || !std::isfinite(reputation)) {
        throw std::invalid_argument("adaptive_update: non-finite input");
    }
    if (reputation >= lambda) return {budget + reputation, reputation + credit};
    return {budget, 0.0};
}

void ReputationState::record(int party, const ObservationIncrement& inc, double decay) {
    positive_.at(party) = positive_.at(party) * decay + inc.positive;
    negative_.at(party) = negative_.at(party) * decay + inc.negative;
}

double ReputationState::score(int party, const ReputationParams& p) const {
    return reputation_score(positive_.at(party), negative_.at(party), p);
}

} // namespace fedqv
