#include "fedqv/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fedqv/baselines.hpp"
#include "fedqv/rng.hpp"

namespace fedqv {

AttackVariant parse_attack(const std::string& name) {
    if (name == "none") return AttackVariant::none;
    if (name == "labelflip") return AttackVariant::labelflip;
    if (name == "gaussian") return AttackVariant::gaussian;
    if (name == "backdoor") return AttackVariant::backdoor;
    if (name == "scaling") return AttackVariant::scaling;
    if (name == "neurotoxin") return AttackVariant::neurotoxin;
    if (name == "krum_lmp") return AttackVariant::krum_lmp;
    if (name == "trim_lmp") return AttackVariant::trim_lmp;
    if (name == "min_max") return AttackVariant::min_max;
    if (name == "min_sum") return AttackVariant::min_sum;
    if (name == "qv_adaptive") return AttackVariant::qv_adaptive;
    throw std::invalid_argument("unknown attack: " + name);
}

std::string attack_name(AttackVariant v) {
    switch (v) {
        case AttackVariant::none: return "none";
        case AttackVariant::labelflip: return "labelflip";
        case AttackVariant::gaussian: return "gaussian";
        case AttackVariant::backdoor: return "backdoor";
        case AttackVariant::scaling: return "scaling";
        case AttackVariant::neurotoxin: return "neurotoxin";
        case AttackVariant::krum_lmp: return "krum_lmp";
        case AttackVariant::trim_lmp: return "trim_lmp";
        case AttackVariant::min_max: return "min_max";
        case AttackVariant::min_sum: return "min_sum";
        case AttackVariant::qv_adaptive: return "qv_adaptive";
    }
    return "?";
}

bool attack_is_targeted(AttackVariant v) {
    return v == AttackVariant::backdoor || v == AttackVariant::scaling ||
           v == AttackVariant::neurotoxin;
}

PerturbationKind parse_perturbation(const std::string& name) {
    if (name == "inverse_std") return PerturbationKind::inverse_std;
    if (name == "inverse_unit") return PerturbationKind::inverse_unit;
    if (name == "inverse_sign") return PerturbationKind::inverse_sign;
    throw std::invalid_argument("unknown perturbation kind: " + name);
}

void AttackSpec::validate() const {
    if (malicious_fraction < 0.0 || malicious_fraction > 1.0) {
        throw std::invalid_argument("AttackSpec: malicious fraction outside [0,1]");
    }
    if (gaussian_scale < 0.0) throw std::invalid_argument("AttackSpec: negative gaussian scale");
    if (poison_fraction < 0.0 || poison_fraction > 1.0) {
        throw std::invalid_argument("AttackSpec: poison fraction outside [0,1]");
    }
    if (scale_factor < 0.0) throw std::invalid_argument("AttackSpec: negative scale factor");
    if (!(neurotoxin_k > 0.0 && neurotoxin_k < 1.0)) {
        throw std::invalid_argument("AttackSpec: neurotoxin k must be in (0,1)");
    }
    if (pgd_epochs < 1) throw std::invalid_argument("AttackSpec: pgd_epochs must be >= 1");
    if (search_iters < 1) throw std::invalid_argument("AttackSpec: search_iters must be >= 1");
}

ParameterVector gaussian_craft(const ParameterVector& benign, double sigma_scale, std::uint64_t seed) {
    if (benign.empty()) throw std::invalid_argument("gaussian_craft: empty update");
    const double n = double(benign.size());
    double mean = 0.0;
    for (double x : benign) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : benign) var += (x - mean) * (x - mean);
    var /= n;
    const double sd = sigma_scale * std::sqrt(var);

    ParameterVector out(benign.size(), mean);
    if (sd > 0.0) {
        auto rng = make_rng({seed, hash_bytes("gaussian")});
        std::normal_distribution<double> noise(0.0, sd);
        for (double& x : out) x += noise(rng);
    }
    return out;
}

ParameterVector scaling_craft(const ParameterVector& benign, const ParameterVector& poisoned,
                              double factor, int round, int total_rounds) {
    if (!(factor > 0.0)) throw std::invalid_argument("scaling_craft: factor must be > 0");
    if (round != total_rounds) return benign;
    return scale(poisoned, factor);
}

std::vector<bool> neurotoxin_allowed(const ParameterVector& benign_grad, double k) {
    if (!(k > 0.0 && k < 1.0)) throw std::invalid_argument("neurotoxin_allowed: k must be in (0,1)");
    const std::size_t d = benign_grad.size();
    const std::size_t masked = static_cast<std::size_t>(std::floor(k * double(d)));
    std::vector<bool> allowed(d, true);
    if (masked == 0) return allowed;

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(benign_grad[a]) > std::abs(benign_grad[b]);
    });
    for (std::size_t i = 0; i < masked; ++i) allowed[order[i]] = false;
    return allowed;
}

ParameterVector neurotoxin_craft(const ParameterVector& benign_grad,
                                 const ParameterVector& poisoned_grad, double k) {
    if (benign_grad.size() != poisoned_grad.size()) {
        throw std::invalid_argument("neurotoxin_craft: dimension mismatch");
    }
    const auto allowed = neurotoxin_allowed(benign_grad, k);
    ParameterVector out = poisoned_grad;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!allowed[i]) out[i] = 0.0;
    }
    return out;
}

namespace {

ParameterVector mean_of(std::span<const ParameterVector> vs) {
    ParameterVector out(vs.front().size(), 0.0);
    for (const auto& v : vs) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
    }
    for (double& x : out) x /= double(vs.size());
    return out;
}

ParameterVector sign_of(const ParameterVector& v) {
    ParameterVector s(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) s[i] = (v[i] > 0.0) - (v[i] < 0.0);
    return s;
}

// largest feasible t in [0, cap] for a predicate that holds at 0, located by
// doubling out to an infeasible bracket and bisecting
template <class Pred>
double max_feasible(Pred ok, int iters, double cap = 1e18) {
    double hi = 1.0;
    while (hi < cap && ok(hi)) hi *= 2.0;
    hi = std::min(hi, cap);
    if (ok(hi)) return hi;
    double lo = 0.0;
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (ok(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

} // namespace

ParameterVector lmp_krum_craft(const ParameterVector& global,
                               std::span<const ParameterVector> benign_deltas, int num_attackers,
                               int search_iters) {
    if (benign_deltas.empty()) throw std::invalid_argument("lmp_krum_craft: needs benign updates");
    if (num_attackers < 1) throw std::invalid_argument("lmp_krum_craft: needs at least one attacker");

    const ParameterVector dir = sign_of(mean_of(benign_deltas));
    if (l2_norm(dir) == 0.0) return global; // no benign direction to oppose

    const int n = num_attackers + static_cast<int>(benign_deltas.size());
    const int f = std::min(num_attackers, n - 3);
    if (f < 0) return global;

    auto krum_selects_crafted = [&](double lambda) {
        std::vector<ParameterVector> pop;
        pop.reserve(n);
        const ParameterVector crafted_delta = scale(dir, -lambda);
        for (int i = 0; i < num_attackers; ++i) pop.push_back(crafted_delta);
        for (const auto& b : benign_deltas) pop.push_back(b);
        const auto sel = multi_krum(pop, f, 1);
        return sel.front() < num_attackers;
    };

    double lambda = 10.0;
    if (!krum_selects_crafted(lambda)) {
        // bisect the success boundary inside [0, 10]
        double lo = 0.0, hi = lambda;
        for (int i = 0; i < search_iters; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (krum_selects_crafted(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lambda = lo;
    }
    return add(global, scale(dir, -lambda));
}

ParameterVector lmp_trim_craft(std::span<const ParameterVector> benign_deltas, std::uint64_t seed) {
    if (benign_deltas.empty()) throw std::invalid_argument("lmp_trim_craft: needs benign updates");
    const std::size_t d = benign_deltas.front().size();
    auto rng = make_rng({seed, hash_bytes("trim_lmp")});
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    ParameterVector crafted(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double lo = benign_deltas.front()[j], hi = lo, mean = 0.0;
        for (const auto& b : benign_deltas) {
            lo = std::min(lo, b[j]);
            hi = std::max(hi, b[j]);
            mean += b[j];
        }
        mean /= double(benign_deltas.size());
        const double u = uni(rng);
        if (mean >= 0.0) {
            crafted[j] = (lo - std::abs(lo)) + u * std::abs(lo); // pull below the benign minimum
        } else {
            crafted[j] = hi + u * std::abs(hi); // pull above the benign maximum
        }
    }
    return crafted;
}

namespace {

ParameterVector perturbation_direction(std::span<const ParameterVector> benign,
                                       PerturbationKind kind) {
    const std::size_t d = benign.front().size();
    const ParameterVector mu = mean_of(benign);
    ParameterVector p(d, 0.0);
    switch (kind) {
        case PerturbationKind::inverse_std: {
            for (std::size_t j = 0; j < d; ++j) {
                double var = 0.0;
                for (const auto& b : benign) var += (b[j] - mu[j]) * (b[j] - mu[j]);
                p[j] = -std::sqrt(var / double(benign.size()));
            }
            break;
        }
        case PerturbationKind::inverse_unit: p = scale(mu, -1.0); break;
        case PerturbationKind::inverse_sign: p = scale(sign_of(mu), -1.0); break;
    }
    const double norm = l2_norm(p);
    if (norm == 0.0) return ParameterVector(d, 0.0);
    return scale(p, 1.0 / norm);
}

double max_pairwise_dist(std::span<const ParameterVector> vs) {
    double best = 0.0;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        for (std::size_t j = i + 1; j < vs.size(); ++j) best = std::max(best, l2_norm(sub(vs[i], vs[j])));
    }
    return best;
}

} // namespace

ParameterVector min_max_craft(std::span<const ParameterVector> benign_deltas, PerturbationKind kind,
                              int search_iters) {
    if (benign_deltas.size() < 2) throw std::invalid_argument("min_max_craft: needs >= 2 benign updates");
    const ParameterVector mu = mean_of(benign_deltas);
    const ParameterVector p = perturbation_direction(benign_deltas, kind);
    if (l2_norm(p) == 0.0) return mu;

    const double bound = max_pairwise_dist(benign_deltas);
    auto ok = [&](double gamma) {
        const ParameterVector crafted = add(mu, scale(p, gamma));
        double worst = 0.0;
        for (const auto& b : benign_deltas) worst = std::max(worst, l2_norm(sub(crafted, b)));
        return worst <= bound;
    };
    const double gamma = max_feasible(ok, search_iters);
    return add(mu, scale(p, gamma));
}

ParameterVector min_sum_craft(std::span<const ParameterVector> benign_deltas, PerturbationKind kind,
                              int search_iters) {
    if (benign_deltas.size() < 2) throw std::invalid_argument("min_sum_craft: needs >= 2 benign updates");
    const ParameterVector mu = mean_of(benign_deltas);
    const ParameterVector p = perturbation_direction(benign_deltas, kind);
    if (l2_norm(p) == 0.0) return mu;

    double bound = 0.0;
    for (const auto& a : benign_deltas) {
        double s = 0.0;
        for (const auto& b : benign_deltas) {
            const double dist = l2_norm(sub(a, b));
            s += dist * dist;
        }
        bound = std::max(bound, s);
    }
    auto ok = [&](double gamma) {
        const ParameterVector crafted = add(mu, scale(p, gamma));
        double s = 0.0;
        for (const auto& b : benign_deltas) {
            const double dist = l2_norm(sub(crafted, b));
            s += dist * dist;
        }
        return s <= bound;
    };
    const double gamma = max_feasible(ok, search_iters);
    return add(mu, scale(p, gamma));
}

QvAdaptiveResult qv_adaptive_craft(const ParameterVector& global,
                                   std::span<const ParameterVector> benign_models,
                                   std::size_t own_index, std::span<const double> benign_scores,
                                   std::span<const int> dataset_sizes, const VotingConfig& cfg,
                                   int search_iters) {
    if (benign_models.empty() || benign_models.size() != benign_scores.size() ||
        benign_models.size() != dataset_sizes.size() || own_index >= benign_models.size()) {
        throw std::invalid_argument("qv_adaptive_craft: inconsistent collusion inputs");
    }
    cfg.validate();

    // stage 1: the benign score whose normalized value sits closest to mid-band
    const auto normalized = min_max_normalize(benign_scores);
    std::size_t best = 0;
    for (std::size_t i = 1; i < normalized.size(); ++i) {
        if (std::abs(normalized[i] - 0.5) < std::abs(normalized[best] - 0.5)) best = i;
    }
    const double reported = benign_scores[best];

    const ParameterVector own = benign_models[own_index];
    if (benign_models.size() == 1) {
        // nothing to normalize against; the simulated round always accepts
        return {own, reported};
    }

    // stage 2: push against the estimated global direction while a simulated
    // round still gives the crafted entry a positive vote
    const ParameterVector dir = sign_of(sub(global, mean_of(benign_models)));
    if (l2_norm(dir) == 0.0) return {own, reported};

    auto accepted = [&](double nu) {
        const ParameterVector crafted = sub(own, scale(dir, nu));
        std::vector<UpdateMessage> msgs;
        msgs.reserve(benign_models.size());
        for (std::size_t i = 0; i < benign_models.size(); ++i) {
            UpdateMessage m;
            m.party = static_cast<int>(i);
            m.model = (i == own_index) ? crafted : benign_models[i];
            m.similarity = (i == own_index) ? cosine_similarity(crafted, global) : benign_scores[i];
            m.dataset_size = dataset_sizes[i];
            msgs.push_back(std::move(m));
        }
        BudgetLedger fresh(static_cast<int>(benign_models.size()), cfg.initial_budget);
        const RoundOutcome sim = fedqv_round(global, msgs, fresh, cfg);
        return sim.votes[own_index].vote > 0.0;
    };
    const double nu = accepted(0.0) ? max_feasible(accepted, search_iters, 1e6) : 0.0;
    return {sub(own, scale(dir, nu)), reported};
}

} // namespace fedqv
