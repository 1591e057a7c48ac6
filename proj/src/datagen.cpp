#include "entangle/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "entangle/errors.hpp"

namespace entangle::datagen {

using qstate::DensityMatrix;

namespace {

constexpr long kRejectionCap = 10'000'000;

Sample make_state_sample(const DensityMatrix& rho, FeatureScheme scheme,
                         std::optional<int> label, SampleSource source, StateParams params) {
    Sample s;
    s.features = featurize(rho, scheme);
    s.label = label;
    s.source = source;
    s.params = std::move(params);
    return s;
}

// Per-class targets: uniform split with the remainder spread over the first
// classes.
std::vector<int> class_targets(int total, int classes) {
    std::vector<int> t(classes, total / classes);
    for (int c = 0; c < total % classes; ++c) ++t[c];
    return t;
}

}  // namespace

std::vector<double> featurize(const DensityMatrix& rho, FeatureScheme scheme) {
    switch (scheme) {
        case FeatureScheme::F: return qstate::features_pauli_full(rho, 2);
        case FeatureScheme::F1: return qstate::features_partial(rho, qstate::PartialScheme::F1);
        case FeatureScheme::F2: return qstate::features_partial(rho, qstate::PartialScheme::F2);
        case FeatureScheme::Pauli3: return qstate::features_pauli_full(rho, 3);
        case FeatureScheme::GhzMxMz:
            if (rho.nqubits < 3) throw DataError("featurize: GHZ features need a qubit register");
            return qstate::features_ghz(rho, rho.nqubits);
    }
    throw ConfigError("unknown feature scheme");
}

Dataset gen_labeled_2q(int l, FeatureScheme scheme, Rng& rng) {
    if (l < 2 || l % 2 != 0) throw DataError("gen_labeled_2q: l must be even and positive");
    Dataset ds;
    ds.feature_dim = scheme_dim(scheme);
    ds.class_count = 2;
    ds.meta = {"2q", rng.seed(), 0};

    int want[2] = {l / 2, l / 2};
    for (long attempt = 0; want[0] > 0 || want[1] > 0; ++attempt) {
        if (attempt >= kRejectionCap) throw DataError("gen_labeled_2q: rejection cap reached");
        Rng sub = rng.substream(1, static_cast<std::uint64_t>(attempt));
        DensityMatrix rho = qstate::random_ginibre_density(4, sub);
        int cls = qstate::is_ppt_entangled(rho) == qstate::PptVerdict::entangled ? 1 : 0;
        if (want[cls] == 0) continue;
        --want[cls];
        StateParams params;
        params.family = "2q";
        params.truth = cls;
        params.rho = rho.mat;
        ds.samples.push_back(make_state_sample(rho, scheme, cls, SampleSource::labeled,
                                               std::move(params)));
    }
    return ds;
}

DensityMatrix random_separable_2q(Rng& rng) {
    int m = 1 + static_cast<int>(rng.below(16));
    std::vector<double> weights(m);
    double sum = 0.0;
    for (double& w : weights) {
        w = -std::log(rng.uniform01());
        sum += w;
    }
    for (double& w : weights) w /= sum;

    ComplexMatrix acc(4, 4);
    for (int i = 0; i < m; ++i) {
        ComplexMatrix a = qstate::haar_pure_qubit(rng);
        ComplexMatrix b = qstate::haar_pure_qubit(rng);
        ComplexMatrix v = kron(a, b);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                acc(r, c) += weights[i] * v(r, 0) * std::conj(v(c, 0));
    }
    return DensityMatrix{std::move(acc), 2};
}

Dataset gen_unlabeled_2q(int u, FeatureScheme scheme, Rng& rng) {
    if (u < 2) throw DataError("gen_unlabeled_2q: u must be >= 2");
    Dataset ds;
    ds.feature_dim = scheme_dim(scheme);
    ds.class_count = 2;
    ds.meta = {"2q", rng.seed(), 0};

    const int target_sep = u / 2;
    const int target_ent = u - target_sep;
    int kept[2] = {0, 0};
    const int target[2] = {target_sep, target_ent};
    std::vector<DensityMatrix> sep_pool;

    auto push = [&](const DensityMatrix& rho, int truth, const char* family) {
        StateParams params;
        params.family = family;
        params.truth = truth;
        params.rho = rho.mat;
        ds.samples.push_back(make_state_sample(rho, scheme, std::nullopt,
                                               SampleSource::unlabeled, std::move(params)));
    };

    // Raw Ginibre draws, keeping only what each class quota still needs.
    long attempt = 0;
    for (; attempt < u; ++attempt) {
        Rng sub = rng.substream(2, static_cast<std::uint64_t>(attempt));
        DensityMatrix rho = qstate::random_ginibre_density(4, sub);
        int cls = qstate::is_ppt_entangled(rho) == qstate::PptVerdict::entangled ? 1 : 0;
        if (kept[cls] >= target[cls]) continue;
        ++kept[cls];
        if (cls == 0) sep_pool.push_back(rho);
        push(rho, cls, "2q");
    }
    // Entangled states are plentiful in the Ginibre ensemble; finish any
    // remainder by rejection.
    for (; kept[1] < target[1]; ++attempt) {
        if (attempt >= kRejectionCap) throw DataError("gen_unlabeled_2q: rejection cap reached");
        Rng sub = rng.substream(2, static_cast<std::uint64_t>(attempt));
        DensityMatrix rho = qstate::random_ginibre_density(4, sub);
        if (qstate::is_ppt_entangled(rho) != qstate::PptVerdict::entangled) continue;
        ++kept[1];
        push(rho, 1, "2q");
    }
    // Separable deficit: half fresh random separable states, half convex mixes.
    int deficit = target[0] - kept[0];
    int fresh = (deficit + 1) / 2;
    if (deficit > 0 && sep_pool.size() + static_cast<std::size_t>(fresh) < 2) fresh = deficit;
    for (int i = 0; i < fresh; ++i) {
        Rng sub = rng.substream(3, static_cast<std::uint64_t>(i));
        DensityMatrix rho = random_separable_2q(sub);
        sep_pool.push_back(rho);
        push(rho, 0, "2q-sep");
    }
    if (deficit > fresh) {
        Rng sub = rng.substream(4);
        std::vector<DensityMatrix> mixes = augment_mix(sep_pool, deficit - fresh, sub);
        for (const DensityMatrix& rho : mixes) push(rho, 0, "2q-mix");
    }
    return ds;
}

void GhzTask::validate() const {
    switch (mode) {
        case Mode::three_class:
            if (n != 3) throw ConfigError("GhzTask: three-class mode requires n = 3");
            break;
        case Mode::binary_k:
            if (n < 4) throw ConfigError("GhzTask: binary k-separability mode requires n >= 4");
            if (k < 2 || k > 4) throw ConfigError("GhzTask: k must be in {2,3,4}");
            (void)qstate::bound_k_separable(n, k);
            break;
        case Mode::fuzzy_3sep:
            if (n < 4 || n > 7) throw ConfigError("GhzTask: fuzzy mode requires n in {4..7}");
            if (!(a > 0.0 && a < 1.0)) throw ConfigError("GhzTask: fuzzy parameter a must be in (0,1)");
            break;
    }
}

std::pair<double, double> fuzzy_intervals(int n, double a) {
    if (!(a > 0.0 && a < 1.0)) throw DataError("fuzzy_intervals: a must be in (0,1)");
    const double b2 = qstate::bound_k_separable(n, 2).value;
    const double b4 = qstate::bound_k_separable(n, 4).value;
    const double sep_hi = b4 + a * (b2 - b4) / 4.0;
    const double nonsep_lo = b2 - a * 2.0 * (b2 - b4) / 3.0;
    if (sep_hi >= nonsep_lo) throw DataError("fuzzy_intervals: intervals overlap");
    return {sep_hi, nonsep_lo};
}

int label_ghz(const GhzTask& task, double p) {
    switch (task.mode) {
        case GhzTask::Mode::three_class: {
            const double b3 = qstate::bound_k_separable(3, 3).value;
            const double b2 = qstate::bound_k_separable(3, 2).value;
            if (p <= b3) return 0;
            if (p <= b2) return 1;
            return 2;
        }
        case GhzTask::Mode::binary_k:
            return p <= qstate::bound_k_separable(task.n, task.k).value ? 0 : 1;
        case GhzTask::Mode::fuzzy_3sep: {
            auto [sep_hi, nonsep_lo] = fuzzy_intervals(task.n, task.a);
            if (p <= sep_hi) return 0;
            if (p >= nonsep_lo) return 1;
            throw DataError("label_ghz: p falls in the fuzzy gap");
        }
    }
    throw ConfigError("label_ghz: unknown mode");
}

namespace {

// Uniform p inside the given class region of a task.
double draw_class_p(const GhzTask& task, int cls, Rng& rng) {
    double lo = 0.0, hi = 1.0;
    switch (task.mode) {
        case GhzTask::Mode::three_class: {
            const double b3 = qstate::bound_k_separable(3, 3).value;
            const double b2 = qstate::bound_k_separable(3, 2).value;
            if (cls == 0) hi = b3;
            else if (cls == 1) lo = b3, hi = b2;
            else lo = b2;
            break;
        }
        case GhzTask::Mode::binary_k: {
            const double bk = qstate::bound_k_separable(task.n, task.k).value;
            if (cls == 0) hi = bk;
            else lo = bk;
            break;
        }
        case GhzTask::Mode::fuzzy_3sep: {
            auto [sep_hi, nonsep_lo] = fuzzy_intervals(task.n, task.a);
            if (cls == 0) hi = sep_hi;
            else lo = nonsep_lo;
            break;
        }
    }
    return rng.uniform(lo, hi);
}

FeatureScheme task_scheme(const GhzTask& task) {
    return task.mode == GhzTask::Mode::three_class ? FeatureScheme::Pauli3
                                                   : FeatureScheme::GhzMxMz;
}

std::string task_family(const GhzTask& task) {
    switch (task.mode) {
        case GhzTask::Mode::three_class: return "ghz3";
        case GhzTask::Mode::binary_k: return "ghzN";
        case GhzTask::Mode::fuzzy_3sep: return "ghz-fuzzy";
    }
    return "ghz";
}

Sample ghz_sample(const GhzTask& task, double p, FeatureScheme scheme,
                  std::optional<int> label, SampleSource source) {
    DensityMatrix rho = qstate::ghz_noisy(task.n, p);
    StateParams params;
    params.family = "ghz";
    params.n = task.n;
    params.p = p;
    params.truth = label_ghz(task, p);
    return make_state_sample(rho, scheme, label, source, std::move(params));
}

// Shared labeled/unlabeled construction for the GHZ tasks (three-class,
// binary-k and fuzzy all follow the same balance recipe; they differ only in
// regions, labels and which classes may be balanced by convex mixes).
std::pair<Dataset, Dataset> gen_ghz_impl(const GhzTask& task, int l, int u, Rng& rng) {
    task.validate();
    const int classes = task.class_count();
    if (l <= 0 || l % classes != 0)
        throw DataError("ghz generation: l must be a positive multiple of the class count");
    const FeatureScheme scheme = task_scheme(task);

    Dataset labeled;
    labeled.feature_dim = scheme_dim(scheme);
    labeled.class_count = classes;
    labeled.meta = {task_family(task), rng.seed(), 0};
    for (int c = 0; c < classes; ++c) {
        for (int i = 0; i < l / classes; ++i) {
            Rng sub = rng.substream(1000 + static_cast<std::uint64_t>(c),
                                    static_cast<std::uint64_t>(i));
            double p = draw_class_p(task, c, sub);
            labeled.samples.push_back(ghz_sample(task, p, scheme, c, SampleSource::labeled));
        }
    }

    Dataset unlabeled;
    unlabeled.feature_dim = scheme_dim(scheme);
    unlabeled.class_count = classes;
    unlabeled.meta = {task_family(task), rng.seed(), 0};
    if (u > 0) {
        std::vector<int> target = class_targets(u, classes);
        std::vector<int> kept(classes, 0);
        std::vector<std::vector<double>> pool(classes);

        auto draw_raw_p = [&](Rng& sub) {
            if (task.mode != GhzTask::Mode::fuzzy_3sep) return sub.uniform01();
            // Fuzzy sets draw from the union of the two class intervals.
            auto [sep_hi, nonsep_lo] = fuzzy_intervals(task.n, task.a);
            double len0 = sep_hi, len1 = 1.0 - nonsep_lo;
            double x = sub.uniform01() * (len0 + len1);
            return x < len0 ? x : nonsep_lo + (x - len0);
        };

        for (int i = 0; i < u; ++i) {
            Rng sub = rng.substream(2000, static_cast<std::uint64_t>(i));
            double p = draw_raw_p(sub);
            int c = label_ghz(task, p);
            if (kept[c] >= target[c]) continue;
            ++kept[c];
            pool[c].push_back(p);
            unlabeled.samples.push_back(ghz_sample(task, p, scheme, std::nullopt,
                                                   SampleSource::unlabeled));
        }
        for (int c = 0; c < classes; ++c) {
            int deficit = target[c] - kept[c];
            if (deficit <= 0) continue;
            // Mixing is reserved for the separable classes; the fuzzy task
            // balances entirely by mixes on the 3-separable side.
            bool allow_mix = c < classes - 1;
            int mixes = 0;
            if (allow_mix && pool[c].size() >= 2)
                mixes = task.mode == GhzTask::Mode::fuzzy_3sep && c == 0 ? deficit : deficit / 2;
            for (int i = 0; i < mixes; ++i) {
                Rng sub = rng.substream(3000 + static_cast<std::uint64_t>(c),
                                        static_cast<std::uint64_t>(i));
                std::size_t ia = sub.below(pool[c].size());
                std::size_t ib = sub.below(pool[c].size() - 1);
                if (ib >= ia) ++ib;
                double lam = sub.uniform01();
                // A convex mix of two noisy GHZ states is the noisy GHZ state at
                // the mixed p, so the mix is generated in closed form.
                double p = lam * pool[c][ia] + (1.0 - lam) * pool[c][ib];
                unlabeled.samples.push_back(ghz_sample(task, p, scheme, std::nullopt,
                                                       SampleSource::unlabeled));
            }
            for (int i = 0; i < deficit - mixes; ++i) {
                Rng sub = rng.substream(4000 + static_cast<std::uint64_t>(c),
                                        static_cast<std::uint64_t>(i));
                double p = draw_class_p(task, c, sub);
                unlabeled.samples.push_back(ghz_sample(task, p, scheme, std::nullopt,
                                                       SampleSource::unlabeled));
            }
        }
    }
    return {std::move(labeled), std::move(unlabeled)};
}

}  // namespace

std::pair<Dataset, Dataset> gen_ghz_sets(const GhzTask& task, int l, int u, Rng& rng) {
    if (task.mode == GhzTask::Mode::fuzzy_3sep)
        throw ConfigError("gen_ghz_sets: use gen_fuzzy_3sep for the fuzzy task");
    return gen_ghz_impl(task, l, u, rng);
}

std::pair<Dataset, Dataset> gen_fuzzy_3sep(int n, double a, int l, int u, Rng& rng) {
    GhzTask task{n, GhzTask::Mode::fuzzy_3sep, 2, a};
    if (l % 2 != 0) throw DataError("gen_fuzzy_3sep: l must be even");
    return gen_ghz_impl(task, l, u, rng);
}

Dataset gen_ghz_test_plain(const GhzTask& task, int size, Rng& rng) {
    task.validate();
    const int classes = task.class_count();
    const FeatureScheme scheme = task_scheme(task);
    Dataset ds;
    ds.feature_dim = scheme_dim(scheme);
    ds.class_count = classes;
    ds.meta = {task_family(task), rng.seed(), 0};
    std::vector<int> target = class_targets(size, classes);
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < target[c]; ++i) {
            Rng sub = rng.substream(5000 + static_cast<std::uint64_t>(c),
                                    static_cast<std::uint64_t>(i));
            double p = draw_class_p(task, c, sub);
            ds.samples.push_back(ghz_sample(task, p, scheme, c, SampleSource::labeled));
        }
    return ds;
}

Dataset ghz_class_test_set(int size, Rng& rng) {
    GhzTask task{3, GhzTask::Mode::three_class, 2, 0.0};
    Dataset ds;
    ds.feature_dim = scheme_dim(FeatureScheme::Pauli3);
    ds.class_count = 3;
    ds.meta = {"ghz3-class", rng.seed(), 0};
    std::vector<int> target = class_targets(size, 3);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < target[c]; ++i) {
            Rng sub = rng.substream(6000 + static_cast<std::uint64_t>(c),
                                    static_cast<std::uint64_t>(i));
            double p = draw_class_p(task, c, sub);
            DensityMatrix rho = qstate::ghz_noisy(3, p);
            std::vector<ComplexMatrix> locals;
            for (int q = 0; q < 3; ++q) locals.push_back(qstate::random_unitary(2, sub));
            std::vector<std::size_t> dims(3, 2);
            DensityMatrix conj = qstate::local_unitary_conjugate(rho, locals, dims);
            StateParams params;
            params.family = "ghz-class";
            params.n = 3;
            params.p = p;
            params.truth = label_ghz(task, p);
            ds.samples.push_back(make_state_sample(conj, FeatureScheme::Pauli3, label_ghz(task, p),
                                                   SampleSource::labeled, std::move(params)));
        }
    return ds;
}

Dataset gen_rho_s_set(int count, bool labeled, FeatureScheme scheme, Rng& rng) {
    if (count < 2) throw DataError("gen_rho_s_set: count must be >= 2");
    Dataset ds;
    ds.feature_dim = scheme_dim(scheme);
    ds.class_count = 2;
    ds.meta = {"rho-s", rng.seed(), 0};
    int want[2] = {count - count / 2, count / 2};
    for (long attempt = 0; want[0] > 0 || want[1] > 0; ++attempt) {
        if (attempt >= kRejectionCap) throw DataError("gen_rho_s_set: rejection cap reached");
        Rng sub = rng.substream(7000, static_cast<std::uint64_t>(attempt));
        double p = sub.uniform01();
        DensityMatrix rho = qstate::rho_s(p);
        int cls = qstate::is_ppt_entangled(rho) == qstate::PptVerdict::entangled ? 1 : 0;
        if (want[cls] == 0) continue;
        --want[cls];
        StateParams params;
        params.family = "rho-s";
        params.p = p;
        params.theta = M_PI / 8.0;
        params.truth = cls;
        ds.samples.push_back(make_state_sample(rho, scheme,
                                               labeled ? std::optional<int>(cls) : std::nullopt,
                                               labeled ? SampleSource::labeled
                                                       : SampleSource::unlabeled,
                                               std::move(params)));
    }
    return ds;
}

DensityMatrix conjugate_once(const DensityMatrix& state, Rng& rng) {
    const int n = state.nqubits;
    if (n < 1) throw DataError("conjugate_once: state is not a qubit register");
    if (n <= 3) {
        std::vector<ComplexMatrix> locals;
        for (int q = 0; q < n; ++q) locals.push_back(qstate::random_unitary(2, rng));
        std::vector<std::size_t> dims(static_cast<std::size_t>(n), 2);
        return qstate::local_unitary_conjugate(state, locals, dims);
    }
    // Uniformly random non-identity Pauli string.
    std::uint64_t strings = (std::uint64_t(1) << (2 * n)) - 1;
    std::uint64_t w = 1 + rng.below(strings);
    std::vector<int> word(n);
    for (int s = 0; s < n; ++s) word[s] = static_cast<int>((w >> (2 * (n - 1 - s))) & 3);
    return qstate::pauli_string_conjugate(state, word);
}

Dataset conjugate_dataset_once(const Dataset& ds, Rng& rng, FeatureScheme scheme) {
    Dataset out = ds;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        Sample& s = out.samples[i];
        DensityMatrix conj = conjugate_once(reconstruct_state(s), rng);
        s.features = featurize(conj, scheme);
        if (s.params.rho) s.params.rho = conj.mat;
    }
    return out;
}

Dataset augment_unitary(const Dataset& ds, int k, Rng& rng, FeatureScheme scheme) {
    if (k < 0) throw DataError("augment_unitary: K must be >= 0");
    if (k == 0) return ds;
    Dataset out;
    out.feature_dim = scheme_dim(scheme);
    out.class_count = ds.class_count;
    out.meta = ds.meta;
    out.meta.augmentations = k;
    out.samples.reserve(ds.samples.size() * (k + 1));
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const Sample& parent = ds.samples[i];
        DensityMatrix state = reconstruct_state(parent);
        out.samples.push_back(parent);
        for (int view = 1; view <= k; ++view) {
            Rng sub = rng.substream(i, static_cast<std::uint64_t>(view));
            DensityMatrix conj = conjugate_once(state, sub);
            Sample s;
            s.features = featurize(conj, scheme);
            s.label = parent.label;
            s.source = SampleSource::augmented;
            s.parent = static_cast<int>(i);
            s.params.family = parent.params.family;
            s.params.n = parent.params.n;
            s.params.p = parent.params.p;
            s.params.theta = parent.params.theta;
            s.params.truth = parent.params.truth;
            if (conj.dim() <= 16) s.params.rho = conj.mat;
            out.samples.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<DensityMatrix> augment_mix(std::span<const DensityMatrix> separables, int count,
                                       Rng& rng) {
    if (separables.size() < 2) throw DataError("augment_mix: need at least two separable states");
    std::vector<DensityMatrix> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng sub = rng.substream(static_cast<std::uint64_t>(i));
        std::size_t a = sub.below(separables.size());
        std::size_t b = sub.below(separables.size() - 1);
        if (b >= a) ++b;
        double lam = sub.uniform01();
        const DensityMatrix pair[2] = {separables[a], separables[b]};
        const double weights[2] = {lam, 1.0 - lam};
        out.push_back(qstate::convex_mix(pair, weights));
    }
    return out;
}

DensityMatrix reconstruct_state(const Sample& s) {
    if (s.params.rho) {
        DensityMatrix rho{*s.params.rho, 0};
        std::size_t d = rho.dim();
        int n = 0;
        while ((std::size_t(1) << n) < d) ++n;
        if ((std::size_t(1) << n) == d) rho.nqubits = n;
        return rho;
    }
    if (s.params.family == "ghz" && s.params.n && s.params.p)
        return qstate::ghz_noisy(*s.params.n, *s.params.p);
    if (s.params.family == "rho-s" && s.params.p)
        return qstate::rho_s(*s.params.p, s.params.theta.value_or(M_PI / 8.0));
    throw DataError("reconstruct_state: sample is not reconstructible");
}

}  // namespace entangle::datagen
