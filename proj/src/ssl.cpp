#include "entangle/ssl.hpp"

#include <chrono>
#include <cmath>

#include "entangle/errors.hpp"
#include "entangle/eval.hpp"

namespace entangle::ssl {

namespace {

// Substream ids for the per-run rng; slk/sl reuse the same ids so that the
// degenerate SSL loop (tau = 1, nothing retained) is bit-identical to the
// supervised continuation.
constexpr std::uint64_t kAugLabeledStream = 0xA1;
constexpr std::uint64_t kAugUnlabeledStream = 0xA2;
constexpr std::uint64_t kInitStream = 0xA3;
constexpr std::uint64_t kTrainStream = 0xA4;

nn::Mlp fresh_model(const Dataset& labeled, const TrainConfig& cfg, const Rng& root) {
    return nn::mlp_new(architecture(cfg.scheme, labeled.class_count),
                       root.substream(kInitStream).seed());
}

}  // namespace

void TrainConfig::validate() const {
    if (!(tau >= 0.9)) throw ConfigError("TrainConfig: tau must be >= 0.9");
    if (T < 1) throw ConfigError("TrainConfig: T must be >= 1");
    if (k_labeled < 0 || k_unlabeled < 0) throw ConfigError("TrainConfig: K must be >= 0");
    if (!(lr > 0.0)) throw ConfigError("TrainConfig: lr must be positive");
    if (epochs_warm < 1 || epochs_update < 1)
        throw ConfigError("TrainConfig: epochs must be >= 1");
    if (batch < 1) throw ConfigError("TrainConfig: batch must be >= 1");
}

std::vector<int> architecture(FeatureScheme scheme, int class_count) {
    if (class_count < 2) throw ConfigError("architecture: need at least two classes");
    const int in = static_cast<int>(scheme_dim(scheme));
    if (scheme == FeatureScheme::GhzMxMz) return {in, 64, 32, class_count};
    return {in, 512, 256, 128, 16, class_count};
}

double lambda_u(int t, const TrainConfig& cfg) {
    if (t < 1 || t > cfg.T) throw ConfigError("lambda_u: t must be in 1..T");
    const double s = static_cast<double>(t) * std::abs(cfg.schedule_a - cfg.schedule_b) /
                     static_cast<double>(cfg.T);
    return std::exp(-s * s) / (2.0 * M_PI);
}

std::vector<double> average_predict(const nn::Mlp& m,
                                    std::span<const std::vector<double>> views) {
    if (views.empty()) throw DataError("average_predict: no views");
    std::vector<double> mean(static_cast<std::size_t>(m.output_dim()), 0.0);
    for (const std::vector<double>& v : views) {
        std::vector<double> p = nn::forward(m, v);
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += p[j];
    }
    for (double& v : mean) v /= static_cast<double>(views.size());
    return mean;
}

Dataset guess_labels(const nn::Mlp& m, const Dataset& unlabeled_aug, double tau,
                     int* retained_parents) {
    const std::size_t group = static_cast<std::size_t>(unlabeled_aug.meta.augmentations) + 1;
    if (group == 0 || unlabeled_aug.size() % group != 0)
        throw DataError("guess_labels: incomplete view groups");
    const std::size_t parents = unlabeled_aug.size() / group;
    const std::size_t classes = static_cast<std::size_t>(unlabeled_aug.class_count);

    Dataset out;
    out.feature_dim = unlabeled_aug.feature_dim;
    out.class_count = unlabeled_aug.class_count;
    out.meta = unlabeled_aug.meta;
    int retained = 0;
    if (parents > 0) {
        nn::RealMatrix x(unlabeled_aug.size(), unlabeled_aug.feature_dim);
        for (std::size_t i = 0; i < unlabeled_aug.size(); ++i)
            std::copy(unlabeled_aug.samples[i].features.begin(),
                      unlabeled_aug.samples[i].features.end(), x.row(i));
        nn::RealMatrix probs = nn::forward_batch(m, x);
        for (std::size_t j = 0; j < parents; ++j) {
            std::vector<double> avg(classes, 0.0);
            for (std::size_t k = 0; k < group; ++k) {
                const double* p = probs.row(j * group + k);
                for (std::size_t c = 0; c < classes; ++c) avg[c] += p[c];
            }
            int best = 0;
            for (std::size_t c = 1; c < classes; ++c)
                if (avg[c] > avg[best]) best = static_cast<int>(c);
            const double confidence = avg[static_cast<std::size_t>(best)] /
                                      static_cast<double>(group);
            if (!(confidence > tau)) continue;  // strict comparison
            ++retained;
            for (std::size_t k = 0; k < group; ++k) {
                Sample s = unlabeled_aug.samples[j * group + k];
                s.label = best;
                s.source = SampleSource::guess_labeled;
                out.samples.push_back(std::move(s));
            }
        }
    }
    if (retained_parents) *retained_parents = retained;
    return out;
}

nn::Mlp warm_start(const Dataset& labeled_aug, const TrainConfig& cfg) {
    cfg.validate();
    Rng root(cfg.seed);
    nn::Mlp model = fresh_model(labeled_aug, cfg, root);
    Rng train_rng = root.substream(kTrainStream);
    return nn::train_epochs(std::move(model), labeled_aug, Dataset{}, 0.0, cfg.epochs_warm,
                            cfg.lr, cfg.batch, train_rng);
}

SslRun ssl_train(const Dataset& labeled, const Dataset& unlabeled, const Dataset& validation,
                 const TrainConfig& cfg) {
    cfg.validate();
    if (labeled.size() == 0) throw DataError("ssl_train: labeled set is empty");
    for (const Sample& s : validation.samples)
        if (!s.label) throw DataError("ssl_train: validation set must be labeled");

    Rng root(cfg.seed);
    Rng aug_lab = root.substream(kAugLabeledStream);
    Rng aug_unlab = root.substream(kAugUnlabeledStream);
    Dataset x_aug = datagen::augment_unitary(labeled, cfg.k_labeled, aug_lab, cfg.scheme);
    Dataset u_aug = datagen::augment_unitary(unlabeled, cfg.k_unlabeled, aug_unlab, cfg.scheme);

    nn::Mlp model = fresh_model(labeled, cfg, root);
    nn::AdamState adam = nn::AdamState::zeros_like(model);
    Rng train_rng = root.substream(kTrainStream);

    nn::TrainView lab_view = nn::pack_training_view(x_aug);
    nn::TrainView empty;
    empty.x = nn::RealMatrix(0, lab_view.x.cols);

    nn::train_epochs_inplace(model, adam, lab_view, empty, 0.0, cfg.epochs_warm, cfg.lr,
                             cfg.batch, train_rng);

    SslRun run;
    run.warm_model = model;
    for (int t = 1; t <= cfg.T; ++t) {
        auto start = std::chrono::steady_clock::now();
        int retained = 0;
        Dataset pseudo = guess_labels(model, u_aug, cfg.tau, &retained);
        nn::TrainView pseudo_view;
        if (pseudo.size() > 0) pseudo_view = nn::pack_training_view(pseudo);
        else pseudo_view.x = nn::RealMatrix(0, lab_view.x.cols);

        nn::train_epochs_inplace(model, adam, lab_view, pseudo_view, lambda_u(t, cfg),
                                 cfg.epochs_update, cfg.lr, cfg.batch, train_rng);

        run.models.push_back(model);
        run.pseudo_counts.push_back(retained);
        run.validation_accuracy.push_back(eval::accuracy(model, validation).overall);
        run.step_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    run.selected = 0;
    for (std::size_t t = 1; t < run.validation_accuracy.size(); ++t)
        if (run.validation_accuracy[t] >
            run.validation_accuracy[static_cast<std::size_t>(run.selected)])
            run.selected = static_cast<int>(t);
    return run;
}

namespace {

nn::Mlp supervised_train(const Dataset& train_set, const Dataset& raw_labeled,
                         const TrainConfig& cfg) {
    cfg.validate();
    Rng root(cfg.seed);
    nn::Mlp model = fresh_model(raw_labeled, cfg, root);
    nn::AdamState adam = nn::AdamState::zeros_like(model);
    Rng train_rng = root.substream(kTrainStream);
    nn::TrainView view = nn::pack_training_view(train_set);
    nn::TrainView empty;
    empty.x = nn::RealMatrix(0, view.x.cols);
    const int total_epochs = cfg.epochs_warm + cfg.T * cfg.epochs_update;
    nn::train_epochs_inplace(model, adam, view, empty, 0.0, total_epochs, cfg.lr, cfg.batch,
                             train_rng);
    return model;
}

}  // namespace

nn::Mlp slk_train(const Dataset& labeled, const TrainConfig& cfg) {
    Rng root(cfg.seed);
    Rng aug_lab = root.substream(kAugLabeledStream);
    Dataset x_aug = datagen::augment_unitary(labeled, cfg.k_labeled, aug_lab, cfg.scheme);
    return supervised_train(x_aug, labeled, cfg);
}

nn::Mlp sl_train(const Dataset& labeled, const TrainConfig& cfg) {
    return supervised_train(labeled, labeled, cfg);
}

}  // namespace entangle::ssl
