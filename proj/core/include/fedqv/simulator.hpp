#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fedqv/attacks.hpp"
#include "fedqv/baselines.hpp"
#include "fedqv/dataset.hpp"
#include "fedqv/model.hpp"
#include "fedqv/reputation.hpp"
#include "fedqv/voting.hpp"

namespace fedqv {

struct DatasetSpec {
    enum class Kind { blobs, idx };
    Kind kind = Kind::blobs;
    int num_classes = 10;
    int dim = 20;
    int samples_per_class = 100;
    double spread = 0.5;
    std::string images_path;
    std::string labels_path;
};

// Full experiment declaration; every run is a pure function of this struct.
struct ExperimentConfig {
    int num_parties = 100;
    int clients_per_round = 10;
    int rounds = 100;
    TrainConfig train;
    DatasetSpec dataset;
    std::vector<int> hidden_layers = {32};
    double iota = 0.9;
    AggregatorChoice aggregator = {AggregatorVariant::fedqv};
    VotingConfig voting;
    ReputationParams reputation;
    AttackSpec attack;
    std::uint64_t seed = 42;
    bool vote_trace = false;
    int threads = 0; // 0 = FEDQV_THREADS env, then hardware concurrency

    void validate() const;
};

struct MetricsRecord {
    int round = 0;
    double acc = 0.0;
    double asr = 0.0; // identically 0 for untargeted attacks
    double train_loss = 0.0;
    std::vector<PartyVote> votes; // filled for voting aggregators when tracing
};

// Uniform sample of `clients` party indices without replacement,
// deterministic in (seed, round); returned ascending.
std::vector<int> select_parties(int num_parties, int clients, int round, std::uint64_t seed);

// Applies the trigger pixels (labels untouched) to every test sample whose
// true label differs from the target, then measures the fraction classified
// as the target label.
double compute_asr(const ModelSpec& spec, const ParameterVector& params,
                   const LabeledDataset& testset, const TriggerPattern& trigger);

// One experiment instance: dataset, partition, attacker identities, ledger
// and reputation state, advanced round by round.
class Simulation {
  public:
    explicit Simulation(ExperimentConfig cfg);

    MetricsRecord run_round();
    std::vector<MetricsRecord> run(); // all remaining rounds

    int current_round() const { return round_; }
    const ExperimentConfig& config() const { return cfg_; }
    const ModelSpec& model_spec() const { return spec_; }
    const ParameterVector& global_model() const { return global_; }
    const LabeledDataset& train_data() const { return train_; }
    const LabeledDataset& test_data() const { return test_; }
    const std::vector<std::vector<std::size_t>>& partition() const { return owned_; }
    const std::vector<int>& malicious_parties() const { return malicious_; }
    const BudgetLedger& ledger() const { return ledger_; }
    const TriggerPattern& trigger() const { return trigger_; }
    bool is_malicious(int party) const;

  private:
    struct PartyUpdate {
        int party = 0;
        ParameterVector model;     // submitted model
        double similarity = 0.0;   // submitted score
        int dataset_size = 1;
        ParameterVector honest_model; // attacker-side clean estimate
    };

    void train_selected(const std::vector<int>& selected, std::vector<PartyUpdate>& out);
    void apply_model_poison(std::vector<PartyUpdate>& updates);
    ParameterVector aggregate(const std::vector<PartyUpdate>& updates, std::vector<PartyVote>& votes);
    ParameterVector train_party(int party, std::uint64_t seed) const;
    ParameterVector train_on(const LabeledDataset& data, std::uint64_t seed, int epochs) const;

    ExperimentConfig cfg_;
    ModelSpec spec_;
    LabeledDataset train_;
    LabeledDataset test_;
    LabeledDataset train_flipped_;                  // labelflip view, built on demand
    std::vector<std::vector<std::size_t>> owned_;   // per-party indices into train_
    std::vector<LabeledDataset> poisoned_data_;     // per-party triggered copy (targeted attacks)
    std::vector<int> malicious_;
    std::vector<bool> malicious_mask_;
    TriggerPattern trigger_;
    BudgetLedger ledger_;
    ReputationState reputation_;
    ParameterVector global_;
    ParameterVector prev_global_delta_; // neurotoxin's benign-gradient estimate
    int round_ = 0;
    int threads_ = 1;
};

std::vector<MetricsRecord> run_experiment(const ExperimentConfig& cfg);

} // namespace fedqv
