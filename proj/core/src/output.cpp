#include "fedqv/output.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fedqv/rng.hpp"
#include "fedqv/threading.hpp"

namespace fedqv {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

using ordered_json = nlohmann::ordered_json;

ordered_json config_to_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["num_parties"] = cfg.num_parties;
    j["clients_per_round"] = cfg.clients_per_round;
    j["rounds"] = cfg.rounds;
    j["seed"] = cfg.seed;
    j["vote_trace"] = cfg.vote_trace;
    j["train"] = {{"epochs", cfg.train.local_epochs},
                  {"learning_rate", cfg.train.learning_rate},
                  {"batch_size", cfg.train.batch_size}};
    j["model"] = {{"hidden", cfg.hidden_layers}};
    ordered_json ds;
    ds["kind"] = cfg.dataset.kind == DatasetSpec::Kind::blobs ? "blobs" : "idx";
    if (cfg.dataset.kind == DatasetSpec::Kind::blobs) {
        ds["classes"] = cfg.dataset.num_classes;
        ds["dim"] = cfg.dataset.dim;
        ds["samples_per_class"] = cfg.dataset.samples_per_class;
        ds["spread"] = cfg.dataset.spread;
    } else {
        ds["images"] = cfg.dataset.images_path;
        ds["labels"] = cfg.dataset.labels_path;
    }
    ds["iota"] = cfg.iota;
    j["dataset"] = ds;
    j["aggregator"] = {{"variant", aggregator_name(cfg.aggregator.variant)},
                       {"krum_f", cfg.aggregator.krum_f},
                       {"trim_beta", cfg.aggregator.trim_beta}};
    j["voting"] = {{"theta", cfg.voting.theta}, {"budget", cfg.voting.initial_budget}};
    j["reputation"] = {{"kappa", cfg.reputation.kappa},
                       {"eta", cfg.reputation.eta},
                       {"base_rate", cfg.reputation.base_rate},
                       {"prior_weight", cfg.reputation.prior_weight},
                       {"lambda", cfg.reputation.lambda},
                       {"delta", cfg.reputation.delta},
                       {"coords", cfg.reputation.coords_per_round},
                       {"decay", cfg.reputation.decay}};
    j["attack"] = {{"variant", attack_name(cfg.attack.variant)},
                   {"fraction", cfg.attack.malicious_fraction},
                   {"poison_fraction", cfg.attack.poison_fraction},
                   {"gaussian_scale", cfg.attack.gaussian_scale},
                   {"scale_factor", cfg.attack.scale_factor},
                   {"neurotoxin_k", cfg.attack.neurotoxin_k},
                   {"pgd_epochs", cfg.attack.pgd_epochs},
                   {"search_iters", cfg.attack.search_iters}};
    return j;
}

} // namespace

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
    auto out = open_out(path);
    out << "round,acc,asr,train_loss\n";
    for (const auto& r : records) {
        out << r.round << ',' << format_double(r.acc) << ',' << format_double(r.asr) << ','
            << format_double(r.train_loss) << '\n';
    }
}

void write_votes_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
    auto out = open_out(path);
    out << "round,party,vote,credit,normalized_score,budget_after\n";
    for (const auto& r : records) {
        for (const auto& v : r.votes) {
            out << r.round << ',' << v.party << ',' << format_double(v.vote) << ','
                << format_double(v.credit) << ',' << format_double(v.normalized_score) << ','
                << format_double(v.budget_after) << '\n';
        }
    }
}

void write_summary_json(const std::string& path, const ExperimentConfig& cfg,
                        const std::vector<MetricsRecord>& records) {
    ordered_json j;
    j["version"] = kVersion;
    j["config"] = config_to_json(cfg);
    j["rounds_run"] = records.size();
    j["final_acc"] = records.empty() ? 0.0 : records.back().acc;
    j["final_asr"] = records.empty() ? 0.0 : records.back().asr;
    j["final_train_loss"] = records.empty() ? 0.0 : records.back().train_loss;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

std::vector<MetricsRecord> run_to_directory(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto records = run_experiment(cfg);
    write_metrics_csv(out_dir + "/metrics.csv", records);
    write_summary_json(out_dir + "/summary.json", cfg, records);
    if (cfg.vote_trace) write_votes_csv(out_dir + "/votes.csv", records);
    return records;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepSpec& sweep,
                                const std::string& out_dir) {
    sweep.validate();
    std::filesystem::create_directories(out_dir);

    std::vector<SweepRow> rows(sweep.values.size() * sweep.repeats);
    for (std::size_t vi = 0; vi < sweep.values.size(); ++vi) {
        for (int rep = 0; rep < sweep.repeats; ++rep) {
            SweepRow& row = rows[vi * sweep.repeats + rep];
            row.axis = sweep.axis;
            row.value = sweep.values[vi];
            row.repeat = rep;
            row.seed = sweep_cell_seed(base.seed, sweep.axis, sweep.values[vi], rep);
        }
    }

    parallel_for(rows.size(), resolve_thread_count(base.threads), [&](std::size_t i) {
        ExperimentConfig cfg = apply_sweep_value(base, rows[i].axis, rows[i].value);
        cfg.seed = rows[i].seed;
        cfg.threads = 1; // cell-level parallelism only
        const auto records = run_experiment(cfg);
        rows[i].final_acc = records.empty() ? 0.0 : records.back().acc;
        rows[i].final_asr = records.empty() ? 0.0 : records.back().asr;
    });

    auto out = open_out(out_dir + "/grid.csv");
    out << "axis,value,repeat,seed,final_acc,final_asr\n";
    for (const auto& r : rows) {
        out << sweep_axis_name(r.axis) << ',' << format_double(r.value) << ',' << r.repeat << ','
            << r.seed << ',' << format_double(r.final_acc) << ',' << format_double(r.final_asr)
            << '\n';
    }
    return rows;
}

} // namespace fedqv
