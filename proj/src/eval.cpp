#include "entangle/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "entangle/errors.hpp"
#include "entangle/qstate.hpp"

namespace entangle::eval {

namespace {

int argmax_smallest(const double* p, std::size_t n) {
    int best = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (p[j] > p[best]) best = static_cast<int>(j);
    return best;
}

nn::RealMatrix probabilities(const nn::Mlp& m, const Dataset& test) {
    nn::RealMatrix x(test.size(), test.feature_dim);
    for (std::size_t i = 0; i < test.size(); ++i)
        std::copy(test.samples[i].features.begin(), test.samples[i].features.end(), x.row(i));
    return nn::forward_batch(m, x);
}

}  // namespace

Accuracy accuracy(const nn::Mlp& m, const Dataset& test) {
    if (test.size() == 0) throw DataError("accuracy: empty test set");
    if (test.feature_dim != static_cast<std::size_t>(m.input_dim()))
        throw DataError("accuracy: feature dimension mismatch");
    const std::size_t classes = static_cast<std::size_t>(test.class_count);
    nn::RealMatrix probs = probabilities(m, test);
    std::vector<long> correct(classes, 0), count(classes, 0);
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (!test.samples[i].label) throw DataError("accuracy: unlabeled test sample");
        const int y = *test.samples[i].label;
        ++count[static_cast<std::size_t>(y)];
        if (argmax_smallest(probs.row(i), classes) == y) ++correct[static_cast<std::size_t>(y)];
    }
    Accuracy acc;
    long total_correct = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        total_correct += correct[c];
        acc.per_class.push_back(count[c] > 0 ? static_cast<double>(correct[c]) /
                                                   static_cast<double>(count[c])
                                             : 0.0);
    }
    acc.overall = static_cast<double>(total_correct) / static_cast<double>(test.size());
    return acc;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw DataError("roc_auc: scores/labels mismatch");
    long pos = 0, neg = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw DataError("roc_auc: labels must be 0/1");
        y == 1 ? ++pos : ++neg;
    }
    if (pos == 0 || neg == 0) throw DataError("roc_auc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    RocCurve curve;
    curve.points.push_back({scores[order[0]], 0.0, 0.0});
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        // Group tied scores into one threshold step.
        while (i < order.size() && scores[order[i]] == s) {
            labels[order[i]] == 1 ? ++tp : ++fp;
            ++i;
        }
        const double alpha =
            i < order.size() ? scores[order[i]] : -std::numeric_limits<double>::infinity();
        curve.points.push_back({alpha, static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos)});
    }
    double auc = 0.0;
    for (std::size_t j = 1; j < curve.points.size(); ++j)
        auc += (curve.points[j].fpr - curve.points[j - 1].fpr) *
               (curve.points[j].tpr + curve.points[j - 1].tpr) / 2.0;
    curve.auc = auc;
    return curve;
}

RocCurve micro_roc(const nn::Mlp& m, const Dataset& test) {
    if (test.size() == 0) throw DataError("micro_roc: empty test set");
    if (test.class_count < 2) throw DataError("micro_roc: need at least two classes");
    nn::RealMatrix probs = probabilities(m, test);
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(test.size() * static_cast<std::size_t>(test.class_count));
    labels.reserve(scores.capacity());
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (!test.samples[i].label) throw DataError("micro_roc: unlabeled test sample");
        for (int c = 0; c < test.class_count; ++c) {
            scores.push_back(probs(i, static_cast<std::size_t>(c)));
            labels.push_back(*test.samples[i].label == c ? 1 : 0);
        }
    }
    return roc_auc(scores, labels);
}

BoundEstimate estimate_bound_with(const Classifier& classify, int n, double h,
                                  FeatureScheme scheme, Rng& rng, bool persistent) {
    if (!(h > 0.0)) throw ConfigError("estimate_bound: h must be positive");
    const double steps_real = 1.0 / h;
    const long steps = std::lround(steps_real);
    if (std::abs(steps_real - static_cast<double>(steps)) > 1e-6 || steps % 10 != 0)
        throw ConfigError("estimate_bound: 1/h must be divisible by 10");
    const std::size_t intervals = static_cast<std::size_t>(steps / 10);

    BoundEstimate est;
    est.counts.assign(intervals, 0);
    for (long i = 1; i <= steps; ++i) {
        const double p = std::min(1.0, static_cast<double>(i) * h);
        Rng sub = rng.substream(static_cast<std::uint64_t>(i));
        qstate::DensityMatrix state =
            datagen::conjugate_once(qstate::ghz_noisy(n, p), sub);
        std::vector<double> f = datagen::featurize(state, scheme);
        if (classify(f) != 0) ++est.counts[static_cast<std::size_t>((i - 1) / 10)];
    }

    int n1 = -1;
    if (persistent) {
        // First interval from which every later interval also reaches 5.
        for (std::size_t j = intervals; j-- > 0;) {
            if (est.counts[j] >= 5) n1 = static_cast<int>(j);
            else break;
        }
    } else {
        for (std::size_t j = 0; j < intervals; ++j)
            if (est.counts[j] >= 5) {
                n1 = static_cast<int>(j);
                break;
            }
    }
    if (n1 < 0) return est;  // model never settles on nonseparable
    est.found = true;
    est.interval_index = n1;
    est.b_hat = (10.0 * n1 + 5.0) * h;
    try {
        est.reference = qstate::bound_k_separable(n, 3).value;
        est.rel_error = relative_error(est.b_hat, *est.reference);
    } catch (const DataError&) {
        // No analytic or tabulated b_3 for this n.
    }
    return est;
}

BoundEstimate estimate_bound(const nn::Mlp& m, int n, double h, FeatureScheme scheme, Rng& rng,
                             bool persistent) {
    Classifier cls = [&m](std::span<const double> f) {
        std::vector<double> p = nn::forward(m, f);
        return argmax_smallest(p.data(), p.size());
    };
    return estimate_bound_with(cls, n, h, scheme, rng, persistent);
}

double relative_error(double b_hat, double b_ref) {
    if (!(b_ref > 0.0)) throw DataError("relative_error: reference must be positive");
    return std::abs(b_hat - b_ref) / b_ref;
}

std::string roc_csv(const RocCurve& curve) {
    std::string out = "alpha,fpr,tpr\n";
    for (const RocPoint& p : curve.points)
        out += format_double(p.alpha) + "," + format_double(p.fpr) + "," +
               format_double(p.tpr) + "\n";
    return out;
}

std::string bound_csv(const BoundEstimate& est) {
    std::string out = "interval,count\n";
    for (std::size_t i = 0; i < est.counts.size(); ++i)
        out += std::to_string(i) + "," + std::to_string(est.counts[i]) + "\n";
    return out;
}

}  // namespace entangle::eval
