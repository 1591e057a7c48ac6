#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "entangle/datagen.hpp"
#include "entangle/mlp.hpp"

namespace entangle::ssl {

struct TrainConfig {
    double tau = 0.95;
    int T = 30;
    int k_labeled = 4;    // K1
    int k_unlabeled = 4;  // K2
    double schedule_a = -1.0;
    double schedule_b = 1.0;
    double lr = 0.003;
    int epochs_warm = 100;
    int epochs_update = 100;
    int batch = 64;
    std::uint64_t seed = 1;
    FeatureScheme scheme = FeatureScheme::F;
    int validation_size = 200;

    void validate() const;
};

// Layer dims for a feature scheme: the wide stack for the 16/9/6/64-input
// tasks, a small (2,64,32,C) net for the 2-input GHZ features.
std::vector<int> architecture(FeatureScheme scheme, int class_count);

// exp(-(t |a-b| / T)^2) / (2 pi), strictly decreasing over t = 1..T.
double lambda_u(int t, const TrainConfig& cfg);

// Arithmetic mean of the model outputs over K+1 augmented views.
std::vector<double> average_predict(const nn::Mlp& m,
                                    std::span<const std::vector<double>> views);

// Per parent group: keep all views with a one-hot label at the argmax of the
// averaged prediction when that maximum strictly exceeds tau; drop the parent
// otherwise. Ties break toward the smallest class index.
Dataset guess_labels(const nn::Mlp& m, const Dataset& unlabeled_aug, double tau,
                     int* retained_parents = nullptr);

// Supervised warm start on the augmented labeled set (lambda_u = 0).
nn::Mlp warm_start(const Dataset& labeled_aug, const TrainConfig& cfg);

struct SslRun {
    nn::Mlp warm_model;
    std::vector<nn::Mlp> models;              // model_1 .. model_T
    std::vector<double> validation_accuracy;  // per outer step
    std::vector<int> pseudo_counts;           // retained parents per step
    int selected = 0;                         // index into models
    std::vector<double> step_seconds;

    const nn::Mlp& selected_model() const { return models.at(selected); }
};

SslRun ssl_train(const Dataset& labeled, const Dataset& unlabeled, const Dataset& validation,
                 const TrainConfig& cfg);

// Supervised baselines at the same total epoch budget (epochs_warm +
// T * epochs_update): SLK trains on the augmented labeled set, SL on the raw
// one. Augmentation draws and init seeds match ssl_train for the same config.
nn::Mlp slk_train(const Dataset& labeled, const TrainConfig& cfg);
nn::Mlp sl_train(const Dataset& labeled, const TrainConfig& cfg);

}  // namespace entangle::ssl
