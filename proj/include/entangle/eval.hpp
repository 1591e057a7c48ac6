#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entangle/datagen.hpp"
#include "entangle/mlp.hpp"
#include "entangle/rng.hpp"

namespace entangle::eval {

struct Accuracy {
    double overall = 0.0;
    std::vector<double> per_class;
};

// Fraction with argmax(forward) equal to the label, overall and per true
// class. Argmax ties break toward the smallest index.
Accuracy accuracy(const nn::Mlp& m, const Dataset& test);

struct RocPoint {
    double alpha = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // anchored at (0,0) and (1,1)
    double auc = 0.0;
};

// Threshold sweep over the distinct scores (classify positive iff
// score > alpha), tied scores grouped into single steps, AUC by trapezoid.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

// Micro-averaged multi-class ROC: one-vs-rest (score, label) pairs pooled
// across all classes into a single curve.
RocCurve micro_roc(const nn::Mlp& m, const Dataset& test);

struct BoundEstimate {
    bool found = false;
    double b_hat = 0.0;
    int interval_index = -1;
    std::vector<int> counts;  // nonseparable predictions per 10-sample interval
    std::optional<double> reference;
    std::optional<double> rel_error;
};

using Classifier = std::function<int(std::span<const double>)>;

// Sweep p = h, 2h, ..., 1 over noisy n-qubit GHZ states, conjugate each test
// state once, classify, and set the bound at the midpoint of the first
// interval whose nonseparable count reaches 5 persistently (transient
// first-hit reading behind persistent=false). Reference bound is b_3(n) when
// available.
BoundEstimate estimate_bound_with(const Classifier& classify, int n, double h,
                                  FeatureScheme scheme, Rng& rng, bool persistent = true);
BoundEstimate estimate_bound(const nn::Mlp& m, int n, double h, FeatureScheme scheme, Rng& rng,
                             bool persistent = true);

// |b_hat - b_ref| / b_ref.
double relative_error(double b_hat, double b_ref);

std::string roc_csv(const RocCurve& curve);
std::string bound_csv(const BoundEstimate& est);

}  // namespace entangle::eval
