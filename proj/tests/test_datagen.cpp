#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "entangle/datagen.hpp"
#include "entangle/errors.hpp"

using namespace entangle;
using namespace entangle::datagen;
using qstate::DensityMatrix;
using qstate::PptVerdict;

namespace {

int ppt_class(const DensityMatrix& rho) {
    return qstate::is_ppt_entangled(rho) == PptVerdict::entangled ? 1 : 0;
}

std::vector<int> class_counts(const Dataset& ds, bool use_truth) {
    std::vector<int> counts(ds.class_count, 0);
    for (const Sample& s : ds.samples) {
        int c = use_truth ? *s.params.truth : *s.label;
        ++counts[c];
    }
    return counts;
}

}  // namespace

TEST_CASE("gen_labeled_2q balance, PPT recheck and determinism") {
    Rng rng(101);
    Dataset ds = gen_labeled_2q(10, FeatureScheme::F, rng);
    REQUIRE(ds.size() == 10);
    std::vector<int> counts = class_counts(ds, false);
    CHECK(counts[0] == 5);
    CHECK(counts[1] == 5);
    for (const Sample& s : ds.samples) {
        DensityMatrix rho = reconstruct_state(s);
        CHECK(ppt_class(rho) == *s.label);
        CHECK(featurize(rho, FeatureScheme::F) == s.features);
    }
    Rng a(55), b(55);
    CHECK(gen_labeled_2q(10, FeatureScheme::F, a) == gen_labeled_2q(10, FeatureScheme::F, b));
    CHECK_THROWS_AS(gen_labeled_2q(7, FeatureScheme::F, rng), DataError);
}

TEST_CASE("raw Ginibre separable fraction near 0.24") {
    Rng rng(999);
    int sep = 0;
    const int draws = 20000;
    for (int i = 0; i < draws; ++i) {
        Rng sub = rng.substream(static_cast<std::uint64_t>(i));
        if (ppt_class(qstate::random_ginibre_density(4, sub)) == 0) ++sep;
    }
    CHECK(std::abs(static_cast<double>(sep) / draws - 0.24) <= 0.03);
}

TEST_CASE("random_separable_2q always passes the PPT audit") {
    Rng rng(4242);
    double purity_sum = 0.0;
    const int draws = 2000;
    for (int i = 0; i < draws; ++i) {
        Rng sub = rng.substream(static_cast<std::uint64_t>(i));
        DensityMatrix rho = random_separable_2q(sub);
        rho.validate();
        CHECK(ppt_class(rho) == 0);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) purity_sum += std::norm(rho.mat(r, c));
    }
    // Regression constant frozen from a 10k-draw Monte-Carlo run (0.4809).
    CHECK(std::abs(purity_sum / draws - 0.481) <= 0.02);
}

TEST_CASE("single-component separable draw is a pure product state") {
    // Find a substream whose first draw picks m = 1 components.
    Rng rng(31337);
    for (int i = 0;; ++i) {
        REQUIRE(i < 200);
        Rng probe = rng.substream(static_cast<std::uint64_t>(i));
        if (probe.below(16) != 0) continue;
        Rng sub = rng.substream(static_cast<std::uint64_t>(i));
        DensityMatrix rho = random_separable_2q(sub);
        double purity = 0.0;
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) purity += std::norm(rho.mat(r, c));
        CHECK(purity == doctest::Approx(1.0).epsilon(1e-10));
        std::vector<double> pt = hermitian_eigenvalues(qstate::partial_transpose(rho, 2, 2));
        CHECK(pt.front() >= -1e-12);
        break;
    }
}

TEST_CASE("gen_unlabeled_2q: exact 50/50 ground truth with audited top-ups") {
    Rng rng(88);
    Dataset ds = gen_unlabeled_2q(100, FeatureScheme::F, rng);
    REQUIRE(ds.size() == 100);
    std::vector<int> counts = class_counts(ds, true);
    CHECK(counts[0] == 50);
    CHECK(counts[1] == 50);
    bool has_mix = false, has_fresh = false;
    for (const Sample& s : ds.samples) {
        CHECK(!s.label.has_value());
        CHECK(ppt_class(reconstruct_state(s)) == *s.params.truth);
        has_mix = has_mix || s.params.family == "2q-mix";
        has_fresh = has_fresh || s.params.family == "2q-sep";
    }
    CHECK(has_mix);
    CHECK(has_fresh);
}

TEST_CASE("label_ghz thresholds") {
    GhzTask three{3, GhzTask::Mode::three_class, 2, 0.0};
    CHECK(label_ghz(three, 0.1) == 0);   // b_3 = 1/5
    CHECK(label_ghz(three, 0.3) == 1);   // between 1/5 and 3/7
    CHECK(label_ghz(three, 0.5) == 2);   // above b_2 = 3/7

    GhzTask k4{4, GhzTask::Mode::binary_k, 4, 0.0};
    CHECK(label_ghz(k4, 0.05) == 0);     // b_4 = 1/9
    CHECK(label_ghz(k4, 0.2) == 1);

    GhzTask k3n8{8, GhzTask::Mode::binary_k, 3, 0.0};
    CHECK_THROWS_AS(label_ghz(k3n8, 0.5), DataError);
}

TEST_CASE("fuzzy intervals evaluate the paper formulas and stay disjoint") {
    auto [sep_hi, nonsep_lo] = fuzzy_intervals(4, 7.0 / 8.0);
    // b_2 = 7/15, b_4 = 1/9 give 17/90 and 0.259259...
    CHECK(sep_hi == doctest::Approx(17.0 / 90.0).epsilon(1e-12));
    CHECK(nonsep_lo == doctest::Approx(7.0 / 15.0 - 7.0 / 12.0 * 16.0 / 45.0).epsilon(1e-12));
    CHECK(sep_hi < nonsep_lo);

    // a -> 0 degenerates to [0, b_4] vs [b_2, 1].
    auto [lo_a, hi_a] = fuzzy_intervals(4, 1e-9);
    CHECK(lo_a == doctest::Approx(1.0 / 9.0).epsilon(1e-6));
    CHECK(hi_a == doctest::Approx(7.0 / 15.0).epsilon(1e-6));

    for (int n = 4; n <= 7; ++n)
        for (double a : {0.5, 0.75, 0.875}) {
            auto [lo, hi] = fuzzy_intervals(n, a);
            CHECK(lo < hi);
        }
    CHECK_THROWS_AS(fuzzy_intervals(4, 1.5), DataError);
}

TEST_CASE("gen_ghz_sets: per-class balance, rederivable labels, determinism") {
    GhzTask task{3, GhzTask::Mode::three_class, 2, 0.0};
    Rng rng(7);
    auto [labeled, unlabeled] = gen_ghz_sets(task, 30, 999, rng);
    REQUIRE(labeled.size() == 30);
    std::vector<int> lc = class_counts(labeled, false);
    CHECK(lc == std::vector<int>{10, 10, 10});
    for (const Sample& s : labeled.samples) {
        CHECK(label_ghz(task, *s.params.p) == *s.label);
        CHECK(*s.params.truth == *s.label);
    }
    REQUIRE(unlabeled.size() == 999);
    std::vector<int> uc = class_counts(unlabeled, true);
    CHECK(uc == std::vector<int>{333, 333, 333});
    for (const Sample& s : unlabeled.samples)
        CHECK(label_ghz(task, *s.params.p) == *s.params.truth);

    Rng a(3), b(3);
    CHECK(gen_ghz_sets(task, 30, 100, a) == gen_ghz_sets(task, 30, 100, b));
    CHECK_THROWS_AS(gen_ghz_sets(task, 31, 100, rng), DataError);
}

TEST_CASE("convex mixes of noisy GHZ states are noisy GHZ states at the mixed p") {
    DensityMatrix a = qstate::ghz_noisy(4, 0.1);
    DensityMatrix b = qstate::ghz_noisy(4, 0.4);
    double lam = 0.3;
    const DensityMatrix pair[2] = {a, b};
    const double w[2] = {lam, 1.0 - lam};
    DensityMatrix mix = qstate::convex_mix(pair, w);
    DensityMatrix direct = qstate::ghz_noisy(4, lam * 0.1 + (1.0 - lam) * 0.4);
    CHECK(max_abs_diff(mix.mat, direct.mat) <= 1e-15);
}

TEST_CASE("gen_fuzzy_3sep: interval containment and balance") {
    Rng rng(505);
    auto [labeled, unlabeled] = gen_fuzzy_3sep(4, 7.0 / 8.0, 100, 500, rng);
    auto [sep_hi, nonsep_lo] = fuzzy_intervals(4, 7.0 / 8.0);
    REQUIRE(labeled.size() == 100);
    std::vector<int> lc = class_counts(labeled, false);
    CHECK(lc == std::vector<int>{50, 50});
    for (const Sample& s : labeled.samples) {
        double p = *s.params.p;
        if (*s.label == 0) CHECK(p <= sep_hi);
        else CHECK(p >= nonsep_lo);
    }
    std::vector<int> uc = class_counts(unlabeled, true);
    CHECK(uc == std::vector<int>{250, 250});
    for (const Sample& s : unlabeled.samples) {
        double p = *s.params.p;
        CHECK((p <= sep_hi || p >= nonsep_lo));
    }
    CHECK_THROWS_AS(gen_fuzzy_3sep(4, 0.875, 101, 10, rng), DataError);
}

TEST_CASE("ghz_class_test_set keeps labels under conjugation") {
    Rng rng(606);
    Dataset ds = ghz_class_test_set(60, rng);
    REQUIRE(ds.size() == 60);
    CHECK(class_counts(ds, false) == std::vector<int>{20, 20, 20});
    GhzTask task{3, GhzTask::Mode::three_class, 2, 0.0};
    for (const Sample& s : ds.samples) {
        CHECK(s.features.size() == 64);
        CHECK(s.features[0] == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(label_ghz(task, *s.params.p) == *s.label);
    }
}

TEST_CASE("gen_rho_s_set balance and PPT consistency") {
    Rng rng(707);
    Dataset ds = gen_rho_s_set(200, true, FeatureScheme::F, rng);
    REQUIRE(ds.size() == 200);
    CHECK(class_counts(ds, false) == std::vector<int>{100, 100});
    for (const Sample& s : ds.samples) {
        DensityMatrix rho = reconstruct_state(s);
        CHECK(ppt_class(rho) == *s.label);
        // PPT threshold for the rho_s family sits at p = 1/3.
        if (*s.params.p < 0.33) CHECK(*s.label == 0);
        if (*s.params.p > 0.34) CHECK(*s.label == 1);
    }
    Dataset unl = gen_rho_s_set(100, false, FeatureScheme::F2, rng);
    for (const Sample& s : unl.samples) CHECK(!s.label.has_value());
    CHECK(unl.feature_dim == 6);
}

TEST_CASE("augment_unitary: identity at K=0, sizes, label preservation") {
    Rng gen_rng(11);
    Dataset ds = gen_labeled_2q(8, FeatureScheme::F, gen_rng);
    Rng aug_rng(12);
    CHECK(augment_unitary(ds, 0, aug_rng, FeatureScheme::F) == ds);

    Dataset aug = augment_unitary(ds, 3, aug_rng, FeatureScheme::F);
    REQUIRE(aug.size() == 4 * ds.size());
    CHECK(aug.meta.augmentations == 3);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(aug.samples[4 * i] == ds.samples[i]);  // view 0 is the original
        for (int k = 1; k <= 3; ++k) {
            const Sample& view = aug.samples[4 * i + static_cast<std::size_t>(k)];
            CHECK(view.label == ds.samples[i].label);
            CHECK(view.parent == static_cast<int>(i));
            CHECK(view.source == SampleSource::augmented);
            // PPT ground truth of every augmented two-qubit view matches its
            // parent's.
            CHECK(ppt_class(reconstruct_state(view)) == *ds.samples[i].label);
        }
    }
    Rng r1(9), r2(9);
    CHECK(augment_unitary(ds, 2, r1, FeatureScheme::F) ==
          augment_unitary(ds, 2, r2, FeatureScheme::F));

    Dataset broken = ds;
    for (Sample& s : broken.samples) {
        s.params.rho.reset();
        s.params.family = "mystery";
    }
    Rng r3(1);
    CHECK_THROWS_AS(augment_unitary(broken, 1, r3, FeatureScheme::F), DataError);
}

TEST_CASE("pauli-string augmentation preserves |<Mx>| and the class") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        Rng sub = rng.substream(static_cast<std::uint64_t>(trial));
        double p = sub.uniform01();
        DensityMatrix rho = qstate::ghz_noisy(5, p);
        DensityMatrix conj = conjugate_once(rho, sub);
        std::vector<double> f = qstate::features_ghz(conj, 5);
        CHECK(std::abs(std::abs(f[0]) - p) <= 1e-12);
        std::vector<double> ea = hermitian_eigenvalues(rho.mat);
        std::vector<double> eb = hermitian_eigenvalues(conj.mat);
        for (std::size_t i = 0; i < ea.size(); ++i) CHECK(std::abs(ea[i] - eb[i]) <= 1e-10);
    }
}

TEST_CASE("augment_mix outputs stay separable with unit trace") {
    Rng rng(17);
    std::vector<DensityMatrix> pool;
    for (int i = 0; i < 10; ++i) {
        Rng sub = rng.substream(static_cast<std::uint64_t>(i));
        pool.push_back(random_separable_2q(sub));
    }
    Rng mix_rng(18);
    std::vector<DensityMatrix> mixes = augment_mix(pool, 1000, mix_rng);
    REQUIRE(mixes.size() == 1000);
    for (const DensityMatrix& rho : mixes) {
        CHECK(std::abs(rho.mat.trace().real() - 1.0) <= 1e-12);
        CHECK(ppt_class(rho) == 0);
    }
    std::vector<DensityMatrix> tiny = {pool[0]};
    CHECK_THROWS_AS(augment_mix(tiny, 5, mix_rng), DataError);

    // Mixing a state with itself (forced through convex_mix) returns it.
    const DensityMatrix pair[2] = {pool[0], pool[0]};
    const double w[2] = {0.37, 0.63};
    CHECK(max_abs_diff(qstate::convex_mix(pair, w).mat, pool[0].mat) <= 1e-14);
}
