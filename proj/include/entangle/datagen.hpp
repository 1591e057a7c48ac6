#pragma once

#include <span>
#include <utility>
#include <vector>

#include "entangle/dataset.hpp"
#include "entangle/qstate.hpp"
#include "entangle/rng.hpp"

namespace entangle::datagen {

std::vector<double> featurize(const qstate::DensityMatrix& rho, FeatureScheme scheme);

// l two-qubit Ginibre states, PPT-labeled, rejection-sampled to l/2 per class.
// Label 0 = separable, 1 = entangled.
Dataset gen_labeled_2q(int l, FeatureScheme scheme, Rng& rng);

// Convex mixture of 1..16 Haar-random pure product states with flat simplex
// weights; always PPT-separable.
qstate::DensityMatrix random_separable_2q(Rng& rng);

// Ginibre draws topped up to a 50/50 ground-truth mix with random separable
// states and convex mixes. Labels dropped, ground truth kept in params.
Dataset gen_unlabeled_2q(int u, FeatureScheme scheme, Rng& rng);

struct GhzTask {
    enum class Mode { three_class, binary_k, fuzzy_3sep };
    int n = 3;
    Mode mode = Mode::three_class;
    int k = 2;       // binary_k only
    double a = 0.0;  // fuzzy_3sep only
    int class_count() const { return mode == Mode::three_class ? 3 : 2; }
    void validate() const;
};

// (upper end of the 3-separable interval, lower end of the 3-nonseparable one).
std::pair<double, double> fuzzy_intervals(int n, double a);

int label_ghz(const GhzTask& task, double p);

// Labeled set with equal per-class counts (p uniform per class region) and an
// unlabeled set drawn uniformly on [0,1] then balanced with extra class-region
// draws plus convex mixes on the separable classes.
std::pair<Dataset, Dataset> gen_ghz_sets(const GhzTask& task, int l, int u, Rng& rng);

std::pair<Dataset, Dataset> gen_fuzzy_3sep(int n, double a, int l, int u, Rng& rng);

// Balanced plain noisy-GHZ test set for a task (size/C per class).
Dataset gen_ghz_test_plain(const GhzTask& task, int size, Rng& rng);

// Noisy three-qubit GHZ *class* states: each state conjugated once by random
// single-qubit unitaries before featurization.
Dataset ghz_class_test_set(int size, Rng& rng);

// Balanced rho_s family set (PPT ground truth); labels attached when `labeled`.
Dataset gen_rho_s_set(int count, bool labeled, FeatureScheme scheme, Rng& rng);

// (K+1) x |ds| samples: view 0 is the original, views 1..K are local-unitary
// conjugations (Haar single-qubit locals; random non-identity Pauli strings
// for n >= 4 GHZ families), re-featurized with labels copied verbatim.
Dataset augment_unitary(const Dataset& ds, int k, Rng& rng, FeatureScheme scheme);

// `count` pairwise convex mixes of ground-truth-separable states.
std::vector<qstate::DensityMatrix> augment_mix(std::span<const qstate::DensityMatrix> separables,
                                               int count, Rng& rng);

// One lossless label-preserving conjugation: Haar single-qubit locals for
// registers up to three qubits, a random non-identity Pauli string for n >= 4.
qstate::DensityMatrix conjugate_once(const qstate::DensityMatrix& state, Rng& rng);

// Conjugate every sample once and re-featurize (the "test states once" rule).
Dataset conjugate_dataset_once(const Dataset& ds, Rng& rng, FeatureScheme scheme);

// Rebuild the density matrix behind a sample (stored matrix or family params).
qstate::DensityMatrix reconstruct_state(const Sample& s);

}  // namespace entangle::datagen
