#include "fedqv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fedqv/rng.hpp"

namespace fedqv {

TriggerPattern default_trigger(std::size_t feature_dim, int num_classes) {
    TriggerPattern trig;
    const std::size_t cols = static_cast<std::size_t>(std::ceil(std::sqrt(double(feature_dim))));
    const std::size_t block = 3;
    for (std::size_t r = 0; r < std::min(block, cols); ++r) {
        for (std::size_t c = 0; c < std::min(block, cols); ++c) {
            const std::size_t idx = r * cols + c;
            if (idx < feature_dim) trig.pixel_indices.push_back(idx);
        }
    }
    trig.pixel_value = 1.0;
    trig.target_label = std::min(5, num_classes - 1);
    return trig;
}

LabeledDataset synth_blobs(int num_classes, int dim, int samples_per_class, double spread,
                           std::uint64_t seed) {
    if (num_classes < 1 || dim < 1 || samples_per_class < 1 || spread < 0.0) {
        throw std::invalid_argument("synth_blobs: arguments must be positive");
    }
    auto rng = make_rng({seed, hash_bytes("blobs")});
    std::normal_distribution<double> noise(0.0, 1.0);

    LabeledDataset ds;
    ds.num_classes = num_classes;
    ds.features.reserve(static_cast<std::size_t>(num_classes) * samples_per_class);
    for (int k = 0; k < num_classes; ++k) {
        std::vector<double> mean(dim, 0.0);
        mean[k % dim] = 2.0 * (1.0 + static_cast<double>(k / dim));
        for (int s = 0; s < samples_per_class; ++s) {
            std::vector<double> row(mean);
            if (spread > 0.0) {
                for (double& x : row) x += spread * noise(rng);
            }
            ds.features.push_back(std::move(row));
            ds.labels.push_back(k);
        }
    }
    return ds;
}

namespace {

std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw std::runtime_error("load_idx: truncated header in " + path);
    }
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

} // namespace

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("load_idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("load_idx: cannot open " + labels_path);

    const std::uint32_t img_magic = read_u32_be(img, images_path);
    if (img_magic != 0x00000803u) {
        throw std::runtime_error("load_idx: bad image magic in " + images_path);
    }
    const std::uint32_t n_images = read_u32_be(img, images_path);
    const std::uint32_t rows = read_u32_be(img, images_path);
    const std::uint32_t cols = read_u32_be(img, images_path);

    const std::uint32_t lab_magic = read_u32_be(lab, labels_path);
    if (lab_magic != 0x00000801u) {
        throw std::runtime_error("load_idx: bad label magic in " + labels_path);
    }
    const std::uint32_t n_labels = read_u32_be(lab, labels_path);
    if (n_images != n_labels) {
        throw std::runtime_error("load_idx: image/label count mismatch (" + std::to_string(n_images) +
                                 " vs " + std::to_string(n_labels) + ")");
    }

    const std::size_t dim = std::size_t(rows) * cols;
    LabeledDataset ds;
    ds.num_classes = 10;
    ds.features.reserve(n_images);
    ds.labels.reserve(n_images);
    std::vector<unsigned char> buf(dim);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim))) {
            throw std::runtime_error("load_idx: truncated image data in " + images_path);
        }
        std::vector<double> row(dim);
        for (std::size_t j = 0; j < dim; ++j) row[j] = buf[j] / 255.0;
        ds.features.push_back(std::move(row));

        char l;
        if (!lab.read(&l, 1)) {
            throw std::runtime_error("load_idx: truncated label data in " + labels_path);
        }
        ds.labels.push_back(static_cast<unsigned char>(l));
    }
    return ds;
}

PartitionPlan dirichlet_partition(const LabeledDataset& ds, int num_parties, double iota,
                                  std::uint64_t seed) {
    if (num_parties < 1) throw std::invalid_argument("dirichlet_partition: num_parties must be >= 1");
    if (!(iota > 0.0)) throw std::invalid_argument("dirichlet_partition: iota must be > 0");
    if (ds.size() < static_cast<std::size_t>(num_parties)) {
        throw std::invalid_argument("dirichlet_partition: fewer samples than parties");
    }

    std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);

    auto rng = make_rng({seed, hash_bytes("dirichlet")});
    std::gamma_distribution<double> gamma(iota, 1.0);

    for (int attempt = 0; attempt < 100; ++attempt) {
        PartitionPlan plan;
        plan.concentration = iota;
        plan.assignments.assign(num_parties, {});
        for (auto& cls : by_class) {
            if (cls.empty()) continue;
            std::vector<std::size_t> order(cls);
            std::shuffle(order.begin(), order.end(), rng);

            std::vector<double> w(num_parties);
            double total = 0.0;
            for (double& x : w) {
                x = gamma(rng);
                total += x;
            }
            if (total <= 0.0) continue; // all-zero draw, retry whole attempt via emptiness check
            // slice the shuffled class by cumulative proportions
            double cum = 0.0;
            std::size_t start = 0;
            for (int p = 0; p < num_parties; ++p) {
                cum += w[p] / total;
                std::size_t end = (p + 1 == num_parties)
                                      ? order.size()
                                      : static_cast<std::size_t>(std::llround(cum * order.size()));
                end = std::min(end, order.size());
                end = std::max(end, start);
                for (std::size_t i = start; i < end; ++i) plan.assignments[p].push_back(order[i]);
                start = end;
            }
        }
        const bool all_nonempty = std::all_of(plan.assignments.begin(), plan.assignments.end(),
                                              [](const auto& a) { return !a.empty(); });
        if (all_nonempty) return plan;
    }
    throw std::runtime_error("dirichlet_partition: could not give every party a sample in 100 draws");
}

LabeledDataset flip_labels(const LabeledDataset& ds) {
    LabeledDataset out = ds;
    for (int& l : out.labels) l = ds.num_classes - l - 1;
    return out;
}

LabeledDataset inject_trigger(const LabeledDataset& ds, const TriggerPattern& trig, double fraction,
                              std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw std::invalid_argument("inject_trigger: fraction must be in [0,1]");
    }
    for (std::size_t idx : trig.pixel_indices) {
        if (idx >= ds.feature_dim()) throw std::invalid_argument("inject_trigger: pixel index out of range");
    }
    if (trig.target_label < 0 || trig.target_label >= ds.num_classes) {
        throw std::invalid_argument("inject_trigger: target label out of range");
    }

    LabeledDataset out = ds;
    const std::size_t count = static_cast<std::size_t>(std::ceil(fraction * double(ds.size())));
    if (count == 0) return out;

    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = make_rng({seed, hash_bytes("trigger")});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < count && i < order.size(); ++i) {
        auto& row = out.features[order[i]];
        for (std::size_t idx : trig.pixel_indices) row[idx] = trig.pixel_value;
        out.labels[order[i]] = trig.target_label;
    }
    return out;
}

} // namespace fedqv
