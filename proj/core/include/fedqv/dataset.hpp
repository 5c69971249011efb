#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedqv {

// Labelled classification dataset: one feature row per sample, labels in [0, num_classes).
struct LabeledDataset {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return features.size(); }
    std::size_t feature_dim() const { return features.empty() ? 0 : features.front().size(); }
};

// Per-party sample ownership produced by the Dirichlet split.
struct PartitionPlan {
    std::vector<std::vector<std::size_t>> assignments;
    double concentration = 0.0;
};

// Backdoor pattern: listed feature positions are overwritten with pixel_value
// and the sample relabelled to target_label.
struct TriggerPattern {
    std::vector<std::size_t> pixel_indices;
    double pixel_value = 1.0;
    int target_label = 5;
};

// 3x3 max-intensity block at the top-left corner, target label 5. Features
// are treated as a row-major ceil(sqrt(dim))-wide image, which recovers the
// true geometry for square images (e.g. 28x28) and picks a corner block of
// positions for flat feature vectors.
TriggerPattern default_trigger(std::size_t feature_dim, int num_classes);

// K isotropic Gaussian clusters, class means on a fixed lattice: class k has
// amplitude 2*(1 + k/dim) at coordinate k % dim and zero elsewhere. spread is
// the per-coordinate standard deviation. Deterministic in seed.
LabeledDataset synth_blobs(int num_classes, int dim, int samples_per_class, double spread,
                           std::uint64_t seed);

// IDX (big-endian) image/label pair; pixels scaled to [0,1].
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

// Per class, splits that class's samples across parties by a Dirichlet(iota,...)
// draw. Redraws (up to 100 times) until every party owns at least one sample.
PartitionPlan dirichlet_partition(const LabeledDataset& ds, int num_parties, double iota,
                                  std::uint64_t seed);

// label k -> K-k-1; involution.
LabeledDataset flip_labels(const LabeledDataset& ds);

// Poisons ceil(fraction * n) seeded-chosen samples with the trigger.
LabeledDataset inject_trigger(const LabeledDataset& ds, const TriggerPattern& trig, double fraction,
                              std::uint64_t seed);

} // namespace fedqv
