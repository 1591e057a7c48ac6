#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "entangle/complex_matrix.hpp"

namespace entangle {

enum class FeatureScheme { F, F1, F2, Pauli3, GhzMxMz };

std::size_t scheme_dim(FeatureScheme s);
std::string scheme_name(FeatureScheme s);
FeatureScheme scheme_from_name(const std::string& name);

enum class SampleSource { labeled, unlabeled, guess_labeled, augmented };

// Provenance of the quantum state behind a sample. Either the state is
// reconstructible from (family, n, p, theta) or the matrix itself is kept.
struct StateParams {
    std::string family;
    std::optional<int> n;
    std::optional<double> p;
    std::optional<double> theta;
    std::optional<int> truth;  // ground-truth class, for test-only audits
    std::optional<ComplexMatrix> rho;

    bool empty() const {
        return family.empty() && !n && !p && !theta && !truth && !rho;
    }
    bool operator==(const StateParams&) const = default;
};

struct Sample {
    std::vector<double> features;
    std::optional<int> label;
    SampleSource source = SampleSource::labeled;
    int parent = -1;  // parent sample index for augmented views
    StateParams params;

    std::vector<double> one_hot(int class_count) const;
    bool operator==(const Sample&) const = default;
};

struct DatasetMeta {
    std::string family = "none";
    std::uint64_t seed = 0;
    int augmentations = 0;  // K; 0 for raw sets (not serialized)
    bool operator==(const DatasetMeta&) const = default;
};

struct Dataset {
    std::vector<Sample> samples;
    std::size_t feature_dim = 0;
    int class_count = 0;
    DatasetMeta meta;

    std::size_t size() const { return samples.size(); }
    void check_consistent() const;
    bool operator==(const Dataset&) const = default;
};

// Line-oriented text format:
//   dataset-v1 feature_dim=<d> classes=<c> family=<tag> seed=<u64>
//   features=<floats>; label=<index or ->; source=<tag>; params=<kv,... or ->
// Floats carry 17 significant digits; encoding is bytewise deterministic.
std::string dataset_to_string(const Dataset& ds);
Dataset dataset_from_string(const std::string& text);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// 17-significant-digit decimal rendering used by every text format here.
std::string format_double(double v);

}  // namespace entangle
