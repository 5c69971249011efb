#include <doctest.h>

#include <map>
#include <numeric>
#include <set>

#include "fedqv/rng.hpp"
#include "fedqv/simulator.hpp"

using namespace fedqv;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.num_parties = 6;
    cfg.clients_per_round = 3;
    cfg.rounds = 2;
    cfg.dataset.num_classes = 3;
    cfg.dataset.dim = 4;
    cfg.dataset.samples_per_class = 30;
    cfg.dataset.spread = 0.4;
    cfg.hidden_layers = {8};
    cfg.train.local_epochs = 2;
    cfg.train.batch_size = 8;
    cfg.iota = 0.9;
    cfg.seed = 7;
    cfg.threads = 1;
    return cfg;
}

} // namespace

TEST_CASE("select_parties: full selection and determinism") {
    const auto everyone = select_parties(5, 5, 3, 11);
    CHECK(everyone == std::vector<int>{0, 1, 2, 3, 4});

    const auto a = select_parties(20, 7, 4, 11);
    const auto b = select_parties(20, 7, 4, 11);
    CHECK(a == b);
    CHECK(a.size() == 7);
    CHECK(std::set<int>(a.begin(), a.end()).size() == 7); // without replacement
    CHECK(a != select_parties(20, 7, 5, 11));
}

TEST_CASE("select_parties: near-uniform selection frequency") {
    const int N = 10, C = 3, T = 10000;
    std::vector<int> counts(N, 0);
    for (int t = 0; t < T; ++t) {
        for (int p : select_parties(N, C, t, 5)) counts[p]++;
    }
    for (int p = 0; p < N; ++p) {
        const double freq = double(counts[p]) / T;
        CHECK(freq == doctest::Approx(double(C) / N).epsilon(0.07)); // 0.3 +/- 0.02
    }
}

TEST_CASE("compute_asr: constant predictors and denominator exclusion") {
    ModelSpec spec{{2, 3}, Activation::identity};
    LabeledDataset test;
    test.num_classes = 3;
    test.features = {{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}};
    test.labels = {0, 1, 2};
    TriggerPattern trig;
    trig.pixel_indices = {0};
    trig.pixel_value = 1.0;
    trig.target_label = 2;

    // bias-only model that always predicts the target label
    ParameterVector always(spec.param_count(), 0.0);
    always[spec.param_count() - 1] = 10.0; // bias of class 2
    CHECK(compute_asr(spec, always, test, trig) == 1.0);

    // always predicts class 0, never the target
    ParameterVector never(spec.param_count(), 0.0);
    never[spec.param_count() - 3] = 10.0; // bias of class 0
    CHECK(compute_asr(spec, never, test, trig) == 0.0);

    // samples already labelled with the target are excluded from the count
    LabeledDataset only_target;
    only_target.num_classes = 3;
    only_target.features = {{0.5, 0.5}};
    only_target.labels = {2};
    CHECK(compute_asr(spec, always, only_target, trig) == 0.0);
}

TEST_CASE("run_round: fedavg on a 3-party toy matches a straight-line loop") {
    ExperimentConfig cfg = small_config();
    cfg.num_parties = 3;
    cfg.clients_per_round = 3;
    cfg.rounds = 1;
    cfg.aggregator.variant = AggregatorVariant::fedavg;
    Simulation sim(cfg);

    // independent recomputation: train each party from the broadcast model and
    // average with dataset-size weights
    const ParameterVector start = sim.global_model();
    const auto& owned = sim.partition();
    std::vector<ParameterVector> locals;
    std::vector<double> sizes;
    for (int p = 0; p < 3; ++p) {
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed({cfg.seed, std::uint64_t(p), std::uint64_t(1)});
        locals.push_back(local_train(sim.model_spec(), start, sim.train_data(), owned[p], tc));
        sizes.push_back(double(owned[p].size()));
    }
    const double total = sizes[0] + sizes[1] + sizes[2];
    ParameterVector expected(start.size(), 0.0);
    for (int p = 0; p < 3; ++p) {
        for (std::size_t j = 0; j < expected.size(); ++j) {
            expected[j] += sizes[p] / total * locals[p][j];
        }
    }

    sim.run_round();
    const auto& got = sim.global_model();
    REQUIRE(got.size() == expected.size());
    for (std::size_t j = 0; j < got.size(); ++j) {
        CHECK(got[j] == doctest::Approx(expected[j]).epsilon(1e-12));
    }
}

TEST_CASE("run_round: single client passes its model through (any aggregator)") {
    for (auto variant : {AggregatorVariant::fedavg, AggregatorVariant::fedqv,
                         AggregatorVariant::trimmed_mean}) {
        ExperimentConfig cfg = small_config();
        cfg.num_parties = 4;
        cfg.clients_per_round = 1;
        cfg.rounds = 1;
        cfg.aggregator.variant = variant;
        Simulation sim(cfg);
        const ParameterVector start = sim.global_model();
        const auto selected = select_parties(4, 1, 1, cfg.seed);
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed({cfg.seed, std::uint64_t(selected[0]), std::uint64_t(1)});
        const auto expected =
            local_train(sim.model_spec(), start, sim.train_data(), sim.partition()[selected[0]], tc);
        sim.run_round();
        CHECK(sim.global_model() == expected);
    }
}

TEST_CASE("run_experiment: zero attackers equals attack disabled") {
    ExperimentConfig with = small_config();
    with.attack.variant = AttackVariant::min_max;
    with.attack.malicious_fraction = 0.0;
    ExperimentConfig without = small_config();
    without.attack.variant = AttackVariant::none;

    const auto a = run_experiment(with);
    const auto b = run_experiment(without);
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK(a[t].acc == b[t].acc);
        CHECK(a[t].train_loss == b[t].train_loss);
    }
}

TEST_CASE("run_experiment: empty when rounds is zero, deterministic otherwise") {
    ExperimentConfig cfg = small_config();
    cfg.rounds = 0;
    CHECK(run_experiment(cfg).empty());

    cfg.rounds = 3;
    cfg.aggregator.variant = AggregatorVariant::fedqv;
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    REQUIRE(a.size() == 3);
    for (std::size_t t = 0; t < 3; ++t) {
        CHECK(a[t].acc == b[t].acc);
        CHECK(a[t].asr == b[t].asr);
        CHECK(a[t].train_loss == b[t].train_loss);
        REQUIRE(a[t].votes.size() == b[t].votes.size());
        for (std::size_t i = 0; i < a[t].votes.size(); ++i) {
            CHECK(a[t].votes[i].vote == b[t].votes[i].vote);
            CHECK(a[t].votes[i].budget_after == b[t].votes[i].budget_after);
        }
    }
}

TEST_CASE("run_experiment: thread count does not change results") {
    ExperimentConfig cfg = small_config();
    cfg.rounds = 3;
    cfg.clients_per_round = 6;
    cfg.aggregator.variant = AggregatorVariant::fedqv;
    cfg.attack.variant = AttackVariant::labelflip;
    cfg.attack.malicious_fraction = 0.34;

    ExperimentConfig eight = cfg;
    eight.threads = 8;
    cfg.threads = 1;

    const auto a = run_experiment(cfg);
    const auto b = run_experiment(eight);
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK(a[t].acc == b[t].acc);
        CHECK(a[t].asr == b[t].asr);
        CHECK(a[t].train_loss == b[t].train_loss);
    }
}

TEST_CASE("run_experiment: untargeted attacks report asr = 0") {
    ExperimentConfig cfg = small_config();
    cfg.rounds = 2;
    cfg.attack.variant = AttackVariant::labelflip;
    cfg.attack.malicious_fraction = 0.34;
    for (const auto& rec : run_experiment(cfg)) CHECK(rec.asr == 0.0);
}

TEST_CASE("run_experiment: malicious identities are a fixed seeded subset") {
    ExperimentConfig cfg = small_config();
    cfg.attack.variant = AttackVariant::gaussian;
    cfg.attack.malicious_fraction = 0.5;
    Simulation a(cfg), b(cfg);
    CHECK(a.malicious_parties() == b.malicious_parties());
    CHECK(a.malicious_parties().size() == 3); // floor(0.5 * 6)
}

TEST_CASE("run_experiment: budgets persist across rounds under fedqv") {
    ExperimentConfig cfg = small_config();
    cfg.aggregator.variant = AggregatorVariant::fedqv;
    cfg.clients_per_round = 6;
    cfg.rounds = 1;
    cfg.voting.initial_budget = 25.0;
    Simulation sim(cfg);
    sim.run_round();
    double spent = 0.0;
    for (int p = 0; p < 6; ++p) spent += 25.0 - sim.ledger().budget(p);
    CHECK(spent > 0.0); // someone voted or was penalized
}

TEST_CASE("run_experiment: no-attack blobs run reaches 0.9 accuracy within 40 rounds") {
    // regression fixture for the default small config
    ExperimentConfig cfg;
    cfg.num_parties = 30;
    cfg.clients_per_round = 10;
    cfg.rounds = 40;
    cfg.dataset.num_classes = 10;
    cfg.dataset.dim = 20;
    cfg.dataset.samples_per_class = 100;
    cfg.dataset.spread = 0.5;
    cfg.hidden_layers = {32};
    cfg.iota = 0.9;
    cfg.aggregator.variant = AggregatorVariant::fedqv;
    cfg.voting.initial_budget = 1e6; // generous budget: no depletion freeze
    cfg.seed = 1;
    const auto trace = run_experiment(cfg);
    double best = 0.0;
    for (const auto& rec : trace) best = std::max(best, rec.acc);
    CHECK(best >= 0.9);
}
