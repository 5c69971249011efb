#include "fedqv/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedqv/rng.hpp"
#include "fedqv/threading.hpp"

namespace fedqv {

void ExperimentConfig::validate() const {
    if (num_parties < 1) throw std::invalid_argument("ExperimentConfig: num_parties must be >= 1");
    if (clients_per_round < 1 || clients_per_round > num_parties) {
        throw std::invalid_argument("ExperimentConfig: clients_per_round must be in [1, num_parties]");
    }
    if (rounds < 0) throw std::invalid_argument("ExperimentConfig: negative round count");
    if (!(iota > 0.0)) throw std::invalid_argument("ExperimentConfig: iota must be > 0");
    if (train.local_epochs < 0) throw std::invalid_argument("ExperimentConfig: negative local epochs");
    if (!(train.learning_rate > 0.0)) throw std::invalid_argument("ExperimentConfig: learning rate must be > 0");
    if (train.batch_size < 1) throw std::invalid_argument("ExperimentConfig: batch size must be >= 1");
    voting.validate();
    reputation.validate();
    attack.validate();
    if (dataset.kind == DatasetSpec::Kind::blobs) {
        if (dataset.num_classes < 1 || dataset.dim < 1 || dataset.samples_per_class < 1 ||
            dataset.spread < 0.0) {
            throw std::invalid_argument("ExperimentConfig: bad blob dataset spec");
        }
    } else if (dataset.images_path.empty() || dataset.labels_path.empty()) {
        throw std::invalid_argument("ExperimentConfig: idx dataset needs images and labels paths");
    }
    for (int h : hidden_layers) {
        if (h < 1) throw std::invalid_argument("ExperimentConfig: hidden layer sizes must be positive");
    }
}

std::vector<int> select_parties(int num_parties, int clients, int round, std::uint64_t seed) {
    if (clients < 1 || clients > num_parties) throw std::invalid_argument("select_parties: clients outside [1, N]");
    std::vector<int> pool(num_parties);
    std::iota(pool.begin(), pool.end(), 0);
    auto rng = make_rng({seed, hash_bytes("select"), static_cast<std::uint64_t>(round)});
    // partial Fisher-Yates
    for (int i = 0; i < clients; ++i) {
        std::uniform_int_distribution<int> uni(i, num_parties - 1);
        std::swap(pool[i], pool[uni(rng)]);
    }
    std::vector<int> out(pool.begin(), pool.begin() + clients);
    std::sort(out.begin(), out.end());
    return out;
}

double compute_asr(const ModelSpec& spec, const ParameterVector& params,
                   const LabeledDataset& testset, const TriggerPattern& trigger) {
    if (testset.size() == 0) throw std::invalid_argument("compute_asr: empty test set");
    std::size_t hits = 0, total = 0;
    std::vector<double> row;
    for (std::size_t i = 0; i < testset.size(); ++i) {
        if (testset.labels[i] == trigger.target_label) continue; // would count as trivially correct
        row = testset.features[i];
        for (std::size_t idx : trigger.pixel_indices) row[idx] = trigger.pixel_value;
        ++total;
        if (predict(spec, params, row) == trigger.target_label) ++hits;
    }
    return total == 0 ? 0.0 : double(hits) / double(total);
}

namespace {

LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::size_t>& rows) {
    LabeledDataset out;
    out.num_classes = ds.num_classes;
    out.features.reserve(rows.size());
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) {
        out.features.push_back(ds.features[r]);
        out.labels.push_back(ds.labels[r]);
    }
    return out;
}

} // namespace

Simulation::Simulation(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    threads_ = resolve_thread_count(cfg_.threads);

    LabeledDataset full = cfg_.dataset.kind == DatasetSpec::Kind::blobs
                              ? synth_blobs(cfg_.dataset.num_classes, cfg_.dataset.dim,
                                            cfg_.dataset.samples_per_class, cfg_.dataset.spread,
                                            derive_seed({cfg_.seed, hash_bytes("data")}))
                              : load_idx(cfg_.dataset.images_path, cfg_.dataset.labels_path);

    // 20% seeded holdout, never partitioned to parties
    std::vector<std::size_t> order(full.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = make_rng({cfg_.seed, hash_bytes("holdout")});
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_test = std::max<std::size_t>(1, full.size() / 5);
    test_ = subset(full, {order.begin(), order.begin() + n_test});
    train_ = subset(full, {order.begin() + n_test, order.end()});

    spec_.layer_sizes.push_back(static_cast<int>(train_.feature_dim()));
    for (int h : cfg_.hidden_layers) spec_.layer_sizes.push_back(h);
    spec_.layer_sizes.push_back(train_.num_classes);
    spec_.activation = Activation::relu;

    owned_ = dirichlet_partition(train_, cfg_.num_parties, cfg_.iota,
                                 derive_seed({cfg_.seed, hash_bytes("partition")}))
                 .assignments;

    // attacker identities fixed for the whole run
    std::vector<int> parties(cfg_.num_parties);
    std::iota(parties.begin(), parties.end(), 0);
    auto mal_rng = make_rng({cfg_.seed, hash_bytes("malicious")});
    std::shuffle(parties.begin(), parties.end(), mal_rng);
    const int n_mal = static_cast<int>(std::floor(cfg_.attack.malicious_fraction * cfg_.num_parties));
    malicious_.assign(parties.begin(), parties.begin() + n_mal);
    std::sort(malicious_.begin(), malicious_.end());
    malicious_mask_.assign(cfg_.num_parties, false);
    for (int p : malicious_) malicious_mask_[p] = true;

    trigger_ = cfg_.attack.trigger;
    if (trigger_.pixel_indices.empty()) {
        trigger_ = default_trigger(train_.feature_dim(), train_.num_classes);
    }

    if (cfg_.attack.variant == AttackVariant::labelflip && n_mal > 0) {
        train_flipped_ = flip_labels(train_);
    }
    if (attack_is_targeted(cfg_.attack.variant) && n_mal > 0) {
        poisoned_data_.resize(cfg_.num_parties);
        for (int p : malicious_) {
            poisoned_data_[p] = inject_trigger(subset(train_, owned_[p]), trigger_,
                                               cfg_.attack.poison_fraction,
                                               derive_seed({cfg_.seed, hash_bytes("poison"),
                                                            static_cast<std::uint64_t>(p)}));
        }
    }

    ledger_ = BudgetLedger(cfg_.num_parties, cfg_.voting.initial_budget);
    reputation_ = ReputationState(cfg_.num_parties);
    global_ = init_params(spec_, derive_seed({cfg_.seed, hash_bytes("init")}));
}

bool Simulation::is_malicious(int party) const { return malicious_mask_.at(party); }

ParameterVector Simulation::train_party(int party, std::uint64_t seed) const {
    TrainConfig tc = cfg_.train;
    tc.seed = seed;
    return local_train(spec_, global_, train_, owned_[party], tc);
}

ParameterVector Simulation::train_on(const LabeledDataset& data, std::uint64_t seed, int epochs) const {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    TrainConfig tc = cfg_.train;
    tc.seed = seed;
    tc.local_epochs = epochs;
    return local_train(spec_, global_, data, all, tc);
}

void Simulation::train_selected(const std::vector<int>& selected, std::vector<PartyUpdate>& out) {
    out.resize(selected.size());
    const auto variant = cfg_.attack.variant;
    const int t = round_;

    parallel_for(selected.size(), threads_, [&](std::size_t i) {
        const int party = selected[i];
        const std::uint64_t seed =
            derive_seed({cfg_.seed, static_cast<std::uint64_t>(party), static_cast<std::uint64_t>(t)});
        PartyUpdate& up = out[i];
        up.party = party;
        up.dataset_size = static_cast<int>(owned_[party].size());

        if (!malicious_mask_[party] || variant == AttackVariant::none) {
            up.model = train_party(party, seed);
            up.similarity = cosine_similarity(up.model, global_);
            return;
        }

        switch (variant) {
            case AttackVariant::labelflip: {
                TrainConfig tc = cfg_.train;
                tc.seed = seed;
                up.model = local_train(spec_, global_, train_flipped_, owned_[party], tc);
                up.similarity = cosine_similarity(up.model, global_);
                break;
            }
            case AttackVariant::gaussian: {
                const ParameterVector honest = train_party(party, seed);
                const ParameterVector delta = gaussian_craft(
                    sub(honest, global_), cfg_.attack.gaussian_scale,
                    derive_seed({cfg_.seed, hash_bytes("gauss"), static_cast<std::uint64_t>(party),
                                 static_cast<std::uint64_t>(t)}));
                up.model = add(global_, delta);
                up.similarity = cosine_similarity(up.model, global_);
                break;
            }
            case AttackVariant::backdoor: {
                up.model = train_on(poisoned_data_[party], seed, cfg_.train.local_epochs);
                up.similarity = cosine_similarity(up.model, global_);
                break;
            }
            case AttackVariant::scaling: {
                const ParameterVector honest = train_party(party, seed);
                ParameterVector poisoned_delta = sub(honest, global_);
                if (t == cfg_.rounds) {
                    const ParameterVector poisoned =
                        train_on(poisoned_data_[party],
                                 derive_seed({seed, hash_bytes("scaling")}), cfg_.train.local_epochs);
                    poisoned_delta = sub(poisoned, global_);
                }
                const double factor = cfg_.attack.scale_factor > 0.0 ? cfg_.attack.scale_factor
                                                                     : double(cfg_.num_parties);
                const ParameterVector delta =
                    scaling_craft(sub(honest, global_), poisoned_delta, factor, t, cfg_.rounds);
                up.model = add(global_, delta);
                up.similarity = cosine_similarity(up.model, global_);
                break;
            }
            case AttackVariant::neurotoxin: {
                const bool have_estimate = !prev_global_delta_.empty();
                std::vector<bool> allowed;
                if (have_estimate) allowed = neurotoxin_allowed(prev_global_delta_, cfg_.attack.neurotoxin_k);
                ParameterVector params = global_;
                std::vector<std::size_t> all(poisoned_data_[party].size());
                std::iota(all.begin(), all.end(), std::size_t{0});
                for (int epoch = 0; epoch < cfg_.attack.pgd_epochs; ++epoch) {
                    TrainConfig tc = cfg_.train;
                    tc.local_epochs = 1;
                    tc.seed = derive_seed({seed, static_cast<std::uint64_t>(epoch)});
                    params = local_train(spec_, params, poisoned_data_[party], all, tc);
                    if (have_estimate) {
                        ParameterVector delta = sub(params, global_);
                        for (std::size_t j = 0; j < delta.size(); ++j) {
                            if (!allowed[j]) delta[j] = 0.0;
                        }
                        params = add(global_, delta);
                    }
                }
                up.model = std::move(params);
                up.similarity = cosine_similarity(up.model, global_);
                break;
            }
            // model-poison attacks craft jointly after the honest pass
            case AttackVariant::krum_lmp:
            case AttackVariant::trim_lmp:
            case AttackVariant::min_max:
            case AttackVariant::min_sum:
            case AttackVariant::qv_adaptive: {
                up.honest_model = train_party(party, seed);
                up.model = up.honest_model;
                up.similarity = cosine_similarity(up.honest_model, global_);
                break;
            }
            case AttackVariant::none: break;
        }
    });
}

void Simulation::apply_model_poison(std::vector<PartyUpdate>& updates) {
    const auto variant = cfg_.attack.variant;
    if (variant != AttackVariant::krum_lmp && variant != AttackVariant::trim_lmp &&
        variant != AttackVariant::min_max && variant != AttackVariant::min_sum &&
        variant != AttackVariant::qv_adaptive) {
        return;
    }

    std::vector<std::size_t> attacker_pos;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (malicious_mask_[updates[i].party]) attacker_pos.push_back(i);
    }
    if (attacker_pos.empty()) return;

    std::vector<ParameterVector> deltas;
    deltas.reserve(attacker_pos.size());
    for (std::size_t i : attacker_pos) deltas.push_back(sub(updates[i].honest_model, global_));

    switch (variant) {
        case AttackVariant::krum_lmp: {
            const ParameterVector crafted = lmp_krum_craft(
                global_, deltas, static_cast<int>(attacker_pos.size()), cfg_.attack.search_iters);
            for (std::size_t i : attacker_pos) updates[i].model = crafted;
            break;
        }
        case AttackVariant::trim_lmp: {
            for (std::size_t i : attacker_pos) {
                const ParameterVector delta = lmp_trim_craft(
                    deltas, derive_seed({cfg_.seed, hash_bytes("trim"),
                                         static_cast<std::uint64_t>(updates[i].party),
                                         static_cast<std::uint64_t>(round_)}));
                updates[i].model = add(global_, delta);
            }
            break;
        }
        case AttackVariant::min_max: {
            if (deltas.size() < 2) break;
            const ParameterVector delta =
                min_max_craft(deltas, cfg_.attack.perturbation, cfg_.attack.search_iters);
            for (std::size_t i : attacker_pos) updates[i].model = add(global_, delta);
            break;
        }
        case AttackVariant::min_sum: {
            if (deltas.size() < 2) break;
            const ParameterVector delta =
                min_sum_craft(deltas, cfg_.attack.perturbation, cfg_.attack.search_iters);
            for (std::size_t i : attacker_pos) updates[i].model = add(global_, delta);
            break;
        }
        case AttackVariant::qv_adaptive: {
            std::vector<ParameterVector> models;
            std::vector<double> scores;
            std::vector<int> sizes;
            for (std::size_t i : attacker_pos) {
                models.push_back(updates[i].honest_model);
                scores.push_back(updates[i].similarity);
                sizes.push_back(updates[i].dataset_size);
            }
            for (std::size_t k = 0; k < attacker_pos.size(); ++k) {
                const QvAdaptiveResult res = qv_adaptive_craft(
                    global_, models, k, scores, sizes, cfg_.voting, cfg_.attack.search_iters);
                updates[attacker_pos[k]].model = res.model;
                updates[attacker_pos[k]].similarity = res.reported_score;
            }
            break;
        }
        default: break;
    }
}

ParameterVector Simulation::aggregate(const std::vector<PartyUpdate>& updates,
                                      std::vector<PartyVote>& votes) {
    const int n = static_cast<int>(updates.size());
    std::vector<UpdateMessage> msgs(n);
    std::vector<ParameterVector> models(n);
    std::vector<int> sizes(n);
    int attackers_present = 0;
    for (int i = 0; i < n; ++i) {
        msgs[i].party = updates[i].party;
        msgs[i].model = updates[i].model;
        msgs[i].similarity = updates[i].similarity;
        msgs[i].dataset_size = updates[i].dataset_size;
        models[i] = updates[i].model;
        sizes[i] = updates[i].dataset_size;
        if (malicious_mask_[updates[i].party]) ++attackers_present;
    }

    const auto& agg = cfg_.aggregator;
    const int oracle_f = agg.krum_f >= 0 ? agg.krum_f : attackers_present;
    const int f = std::max(0, std::min(oracle_f, n - 3));
    const int beta_raw = agg.trim_beta >= 0 ? agg.trim_beta : attackers_present;
    const int beta = std::max(0, std::min(beta_raw, (n - 1) / 2));

    // per-message reputation for the rep-based variants
    std::vector<double> rep;
    if (agg.uses_reputation()) {
        if (n >= 3) {
            const int coords = std::min<int>(cfg_.reputation.coords_per_round,
                                             static_cast<int>(global_.size()));
            const auto inc = observe(models, cfg_.reputation.delta, coords,
                                     derive_seed({cfg_.seed, hash_bytes("observe"),
                                                  static_cast<std::uint64_t>(round_)}));
            for (int i = 0; i < n; ++i) reputation_.record(msgs[i].party, inc[i], cfg_.reputation.decay);
        }
        rep.resize(n);
        for (int i = 0; i < n; ++i) rep[i] = reputation_.score(msgs[i].party, cfg_.reputation);
    }

    switch (agg.variant) {
        case AggregatorVariant::fedavg: {
            return aggregate_weighted(models, fedavg_weights(sizes), global_);
        }
        case AggregatorVariant::fedqv: {
            RoundOutcome out = fedqv_round(global_, msgs, ledger_, cfg_.voting);
            votes = std::move(out.votes);
            return std::move(out.aggregated_model);
        }
        case AggregatorVariant::fedqv_rep: {
            FedqvRoundOptions opts;
            opts.reputation = rep;
            opts.reputation_threshold = cfg_.reputation.lambda;
            RoundOutcome out = fedqv_round(global_, msgs, ledger_, cfg_.voting, opts);
            votes = std::move(out.votes);
            return std::move(out.aggregated_model);
        }
        case AggregatorVariant::multikrum: {
            if (n < 3) return aggregate_weighted(models, std::vector<double>(n, 1.0), global_);
            const auto sel = multi_krum(models, f, n - f);
            std::vector<double> w(n, 0.0);
            for (int idx : sel) w[idx] = 1.0;
            return aggregate_weighted(models, w, global_);
        }
        case AggregatorVariant::trimmed_mean: {
            return trimmed_mean(models, beta);
        }
        case AggregatorVariant::multikrum_fedqv: {
            if (n < 3) {
                RoundOutcome out = fedqv_round(global_, msgs, ledger_, cfg_.voting);
                votes = std::move(out.votes);
                return std::move(out.aggregated_model);
            }
            RoundOutcome out = multikrum_fedqv_round(global_, msgs, ledger_, cfg_.voting, f, n - f);
            votes = std::move(out.votes);
            return std::move(out.aggregated_model);
        }
        case AggregatorVariant::trimmed_mean_fedqv: {
            RoundOutcome out = trimmed_mean_fedqv_round(global_, msgs, ledger_, cfg_.voting, beta);
            votes = std::move(out.votes);
            return std::move(out.aggregated_model);
        }
        case AggregatorVariant::rep: {
            std::vector<double> w(n, 0.0);
            for (int i = 0; i < n; ++i) {
                if (rep[i] >= cfg_.reputation.lambda) w[i] = rep[i];
            }
            return aggregate_weighted(models, w, global_);
        }
        case AggregatorVariant::rep_fedqv: {
            FedqvRoundOptions opts;
            opts.included.resize(n);
            for (int i = 0; i < n; ++i) opts.included[i] = rep[i] >= cfg_.reputation.lambda;
            RoundOutcome out = fedqv_round(global_, msgs, ledger_, cfg_.voting, opts);
            votes = std::move(out.votes);
            return std::move(out.aggregated_model);
        }
    }
    throw std::logic_error("aggregate: unhandled aggregator variant");
}

MetricsRecord Simulation::run_round() {
    ++round_;
    const auto selected = select_parties(cfg_.num_parties, cfg_.clients_per_round, round_, cfg_.seed);

    std::vector<PartyUpdate> updates;
    train_selected(selected, updates);
    apply_model_poison(updates);

    std::vector<PartyVote> votes;
    ParameterVector next = aggregate(updates, votes);
    prev_global_delta_ = sub(next, global_);
    global_ = std::move(next);

    MetricsRecord rec;
    rec.round = round_;
    rec.acc = evaluate(spec_, global_, test_);
    rec.asr = attack_is_targeted(cfg_.attack.variant) && !malicious_.empty()
                  ? compute_asr(spec_, global_, test_, trigger_)
                  : 0.0;
    rec.train_loss = mean_loss(spec_, global_, train_);
    rec.votes = std::move(votes);
    return rec;
}

std::vector<MetricsRecord> Simulation::run() {
    std::vector<MetricsRecord> trace;
    trace.reserve(cfg_.rounds);
    while (round_ < cfg_.rounds) trace.push_back(run_round());
    return trace;
}

std::vector<MetricsRecord> run_experiment(const ExperimentConfig& cfg) {
    Simulation sim(cfg);
    return sim.run();
}

} // namespace fedqv
