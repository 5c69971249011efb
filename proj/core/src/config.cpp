#include "fedqv/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fedqv/rng.hpp"

namespace fedqv {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    throw std::invalid_argument(origin + ":" + std::to_string(line) + ": " + msg);
}

struct Parser {
    const std::string& origin;
    int line = 0;
    std::string key;

    [[noreturn]] void bad_value(const std::string& value, const char* expect) const {
        fail(origin, line, "invalid value '" + value + "' for " + key + " (expected " + expect + ")");
    }

    double as_real(const std::string& v) const {
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size()) bad_value(v, "a real number");
            return x;
        } catch (const std::invalid_argument&) {
            bad_value(v, "a real number");
        } catch (const std::out_of_range&) {
            bad_value(v, "a real number");
        }
    }

    long long as_int(const std::string& v) const {
        try {
            std::size_t used = 0;
            const long long x = std::stoll(v, &used);
            if (used != v.size()) bad_value(v, "an integer");
            return x;
        } catch (const std::invalid_argument&) {
            bad_value(v, "an integer");
        } catch (const std::out_of_range&) {
            bad_value(v, "an integer");
        }
    }

    bool as_bool(const std::string& v) const {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        bad_value(v, "true/false");
    }

    std::vector<double> as_real_list(const std::string& v) const {
        std::vector<double> out;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(as_real(item));
        }
        if (out.empty()) bad_value(v, "a comma-separated list");
        return out;
    }

    std::vector<long long> as_int_list(const std::string& v) const {
        std::vector<long long> out;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(as_int(item));
        }
        if (out.empty()) bad_value(v, "a comma-separated list");
        return out;
    }
};

} // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    Parser p{origin};

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++p.line;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(origin, p.line, "expected 'key = value', got '" + trim(raw) + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(origin, p.line, "empty key");
        if (value.empty()) fail(origin, p.line, "empty value for " + key);
        p.key = key;

        try {
            if (key == "num_parties") cfg.num_parties = static_cast<int>(p.as_int(value));
            else if (key == "clients_per_round") cfg.clients_per_round = static_cast<int>(p.as_int(value));
            else if (key == "rounds") cfg.rounds = static_cast<int>(p.as_int(value));
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(p.as_int(value));
            else if (key == "vote_trace") cfg.vote_trace = p.as_bool(value);
            else if (key == "threads") cfg.threads = static_cast<int>(p.as_int(value));
            else if (key == "train.epochs") cfg.train.local_epochs = static_cast<int>(p.as_int(value));
            else if (key == "train.learning_rate") cfg.train.learning_rate = p.as_real(value);
            else if (key == "train.batch_size") cfg.train.batch_size = static_cast<int>(p.as_int(value));
            else if (key == "model.hidden") {
                cfg.hidden_layers.clear();
                for (long long h : p.as_int_list(value)) cfg.hidden_layers.push_back(static_cast<int>(h));
            } else if (key == "dataset.kind") {
                if (value == "blobs") cfg.dataset.kind = DatasetSpec::Kind::blobs;
                else if (value == "idx") cfg.dataset.kind = DatasetSpec::Kind::idx;
                else p.bad_value(value, "blobs|idx");
            } else if (key == "dataset.classes") cfg.dataset.num_classes = static_cast<int>(p.as_int(value));
            else if (key == "dataset.dim") cfg.dataset.dim = static_cast<int>(p.as_int(value));
            else if (key == "dataset.samples_per_class") cfg.dataset.samples_per_class = static_cast<int>(p.as_int(value));
            else if (key == "dataset.spread") cfg.dataset.spread = p.as_real(value);
            else if (key == "dataset.images") cfg.dataset.images_path = value;
            else if (key == "dataset.labels") cfg.dataset.labels_path = value;
            else if (key == "dataset.iota") cfg.iota = p.as_real(value);
            else if (key == "aggregator") cfg.aggregator.variant = parse_aggregator(value);
            else if (key == "aggregator.krum_f") cfg.aggregator.krum_f = static_cast<int>(p.as_int(value));
            else if (key == "aggregator.trim_beta") cfg.aggregator.trim_beta = static_cast<int>(p.as_int(value));
            else if (key == "voting.theta") cfg.voting.theta = p.as_real(value);
            else if (key == "voting.budget") cfg.voting.initial_budget = p.as_real(value);
            else if (key == "reputation.kappa") cfg.reputation.kappa = p.as_real(value);
            else if (key == "reputation.eta") cfg.reputation.eta = p.as_real(value);
            else if (key == "reputation.base_rate") cfg.reputation.base_rate = p.as_real(value);
            else if (key == "reputation.prior_weight") cfg.reputation.prior_weight = p.as_real(value);
            else if (key == "reputation.lambda") cfg.reputation.lambda = p.as_real(value);
            else if (key == "reputation.delta") cfg.reputation.delta = p.as_real(value);
            else if (key == "reputation.coords") cfg.reputation.coords_per_round = static_cast<int>(p.as_int(value));
            else if (key == "reputation.decay") cfg.reputation.decay = p.as_real(value);
            else if (key == "attack.variant") cfg.attack.variant = parse_attack(value);
            else if (key == "attack.fraction") cfg.attack.malicious_fraction = p.as_real(value);
            else if (key == "attack.gaussian_scale") cfg.attack.gaussian_scale = p.as_real(value);
            else if (key == "attack.poison_fraction") cfg.attack.poison_fraction = p.as_real(value);
            else if (key == "attack.scale_factor") cfg.attack.scale_factor = p.as_real(value);
            else if (key == "attack.neurotoxin_k") cfg.attack.neurotoxin_k = p.as_real(value);
            else if (key == "attack.pgd_epochs") cfg.attack.pgd_epochs = static_cast<int>(p.as_int(value));
            else if (key == "attack.perturbation") cfg.attack.perturbation = parse_perturbation(value);
            else if (key == "attack.search_iters") cfg.attack.search_iters = static_cast<int>(p.as_int(value));
            else if (key == "attack.trigger.pixels") {
                cfg.attack.trigger.pixel_indices.clear();
                for (long long idx : p.as_int_list(value)) {
                    if (idx < 0) p.bad_value(value, "nonnegative indices");
                    cfg.attack.trigger.pixel_indices.push_back(static_cast<std::size_t>(idx));
                }
            } else if (key == "attack.trigger.value") cfg.attack.trigger.pixel_value = p.as_real(value);
            else if (key == "attack.trigger.target") cfg.attack.trigger.target_label = static_cast<int>(p.as_int(value));
            else fail(origin, p.line, "unknown key '" + key + "'");
        } catch (const std::invalid_argument& e) {
            // enum parse errors get the line context added here
            const std::string what = e.what();
            if (what.rfind(origin, 0) == 0) throw;
            fail(origin, p.line, what);
        }
    }

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(origin + ": " + e.what());
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "budget") return SweepAxis::budget;
    if (name == "theta") return SweepAxis::theta;
    if (name == "iota") return SweepAxis::iota;
    if (name == "attacker_fraction") return SweepAxis::attacker_fraction;
    throw std::invalid_argument("unknown sweep axis: " + name);
}

std::string sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::budget: return "budget";
        case SweepAxis::theta: return "theta";
        case SweepAxis::iota: return "iota";
        case SweepAxis::attacker_fraction: return "attacker_fraction";
    }
    return "?";
}

void SweepSpec::validate() const {
    if (values.empty()) throw std::invalid_argument("SweepSpec: no values");
    if (repeats < 1) throw std::invalid_argument("SweepSpec: repeats must be >= 1");
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& base, SweepAxis axis, double value) {
    ExperimentConfig cfg = base;
    switch (axis) {
        case SweepAxis::budget: cfg.voting.initial_budget = value; break;
        case SweepAxis::theta: cfg.voting.theta = value; break;
        case SweepAxis::iota: cfg.iota = value; break;
        case SweepAxis::attacker_fraction: cfg.attack.malicious_fraction = value; break;
    }
    cfg.validate();
    return cfg;
}

std::uint64_t sweep_cell_seed(std::uint64_t base_seed, SweepAxis axis, double value, int repeat) {
    return derive_seed({base_seed, hash_bytes(sweep_axis_name(axis)), double_bits(value),
                        static_cast<std::uint64_t>(repeat)});
}

} // namespace fedqv
