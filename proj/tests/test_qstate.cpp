#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "entangle/errors.hpp"
#include "entangle/qstate.hpp"
#include "oracles.hpp"

using namespace entangle;
using namespace entangle::qstate;

namespace {

cxd det(const ComplexMatrix& m) {
    const std::size_t n = m.rows();
    if (n == 1) return m(0, 0);
    cxd sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        ComplexMatrix minor(n - 1, n - 1);
        for (std::size_t i = 1; i < n; ++i) {
            std::size_t jj = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == c) continue;
                minor(i - 1, jj++) = m(i, j);
            }
        }
        cxd term = m(0, c) * det(minor);
        sum += (c % 2 == 0) ? term : -term;
    }
    return sum;
}

DensityMatrix bell_phi_plus() {
    ComplexMatrix m(4, 4);
    m(0, 0) = m(0, 3) = m(3, 0) = m(3, 3) = 0.5;
    return DensityMatrix{m, 2};
}

DensityMatrix werner(double p) {
    ComplexMatrix m(4, 4);
    for (int i = 0; i < 4; ++i) m(i, i) = (1.0 - p) / 4.0;
    m(0, 0) += p / 2.0;
    m(3, 3) += p / 2.0;
    m(0, 3) += p / 2.0;
    m(3, 0) += p / 2.0;
    return DensityMatrix{m, 2};
}

}  // namespace

TEST_CASE("random_ginibre_density invariants and determinism") {
    Rng rng(1);
    DensityMatrix rho = random_ginibre_density(4, rng);
    rho.validate();
    CHECK(std::abs(rho.mat.trace().real() - 1.0) <= 1e-12);
    CHECK(hermitian_eigenvalues(rho.mat).front() >= -1e-10);

    Rng a(42), b(42);
    CHECK(random_ginibre_density(4, a).mat == random_ginibre_density(4, b).mat);
    CHECK_THROWS_AS(random_ginibre_density(1, rng), DataError);
}

TEST_CASE("ginibre purity matches the Hilbert-Schmidt ensemble mean") {
    // Monte-Carlo verified: the dim-4 mean purity is 2 dim/(dim^2+1) = 8/17.
    Rng rng(12345);
    double sum = 0.0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        Rng sub = rng.substream(static_cast<std::uint64_t>(i));
        DensityMatrix rho = random_ginibre_density(4, sub);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) sum += std::norm(rho.mat(r, c));
    }
    CHECK(std::abs(sum / draws - 8.0 / 17.0) <= 0.02);
}

TEST_CASE("random_unitary is unitary with Haar first-entry moment") {
    Rng rng(7);
    for (std::size_t dim : {2, 3, 4}) {
        ComplexMatrix u = random_unitary(dim, rng);
        CHECK(max_abs_diff(matmul(u, u.adjoint()), ComplexMatrix::identity(dim)) <= 1e-12);
        CHECK(std::abs(std::abs(det(u)) - 1.0) <= 1e-10);
    }
    Rng mc(777);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        Rng sub = mc.substream(static_cast<std::uint64_t>(i));
        sum += std::norm(random_unitary(2, sub)(0, 0));
    }
    CHECK(std::abs(sum / 10000.0 - 0.5) <= 0.02);
}

TEST_CASE("local_unitary_conjugate identity, trace and the sigma_x example") {
    Rng rng(3);
    DensityMatrix rho = random_ginibre_density(4, rng);
    std::vector<ComplexMatrix> ids = {ComplexMatrix::identity(2), ComplexMatrix::identity(2)};
    std::vector<std::size_t> dims = {2, 2};
    CHECK(max_abs_diff(local_unitary_conjugate(rho, ids, dims).mat, rho.mat) <= 1e-14);

    std::vector<ComplexMatrix> locals = {random_unitary(2, rng), random_unitary(2, rng)};
    DensityMatrix conj = local_unitary_conjugate(rho, locals, dims);
    CHECK(std::abs(conj.mat.trace().real() - 1.0) <= 1e-12);

    // (sigma_x x I) maps |Phi+> to |Psi+> = (|10> + |01>)/sqrt(2).
    std::vector<ComplexMatrix> flip = {pauli(1), ComplexMatrix::identity(2)};
    DensityMatrix psi = local_unitary_conjugate(bell_phi_plus(), flip, dims);
    ComplexMatrix expect(4, 4);
    expect(1, 1) = expect(1, 2) = expect(2, 1) = expect(2, 2) = 0.5;
    CHECK(max_abs_diff(psi.mat, expect) <= 1e-14);

    std::vector<std::size_t> bad_dims = {2, 3};
    CHECK_THROWS_AS(local_unitary_conjugate(rho, locals, bad_dims), DataError);
}

TEST_CASE("partial_transpose: diagonal fixed point, involution, Bell spectrum") {
    ComplexMatrix d(4, 4);
    d(0, 0) = 0.4;
    d(1, 1) = 0.3;
    d(2, 2) = 0.2;
    d(3, 3) = 0.1;
    DensityMatrix diag{d, 2};
    CHECK(max_abs_diff(partial_transpose(diag, 2, 2), d) == 0.0);

    Rng rng(11);
    DensityMatrix rho = random_ginibre_density(4, rng);
    ComplexMatrix pt = partial_transpose(rho, 2, 2);
    DensityMatrix wrapped{pt, 2};
    CHECK(max_abs_diff(partial_transpose(wrapped, 2, 2), rho.mat) <= 1e-14);
    CHECK(std::abs(pt.trace().real() - 1.0) <= 1e-12);

    std::vector<double> eig = oracles::qr_eigenvalues(partial_transpose(bell_phi_plus(), 2, 2));
    CHECK(eig[0] == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(eig[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(eig[2] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(eig[3] == doctest::Approx(0.5).epsilon(1e-9));

    CHECK_THROWS_AS(partial_transpose(rho, 3, 2), DataError);
}

TEST_CASE("is_ppt_entangled: maximally mixed, Bell and Werner states") {
    ComplexMatrix mixed(4, 4);
    for (int i = 0; i < 4; ++i) mixed(i, i) = 0.25;
    CHECK(is_ppt_entangled(DensityMatrix{mixed, 2}) == PptVerdict::separable);
    CHECK(is_ppt_entangled(bell_phi_plus()) == PptVerdict::entangled);

    // Werner threshold p = 1/3; PT minimum eigenvalue is (1-3p)/4.
    CHECK(is_ppt_entangled(werner(0.30)) == PptVerdict::separable);
    CHECK(is_ppt_entangled(werner(0.35)) == PptVerdict::entangled);
    for (double p : {0.30, 0.35}) {
        std::vector<double> eig = oracles::qr_eigenvalues(partial_transpose(werner(p), 2, 2));
        CHECK(eig.front() == doctest::Approx((1.0 - 3.0 * p) / 4.0).epsilon(1e-9));
    }

    Rng rng(5);
    DensityMatrix big = random_ginibre_density(8, rng);
    CHECK_THROWS_AS(is_ppt_entangled(big), DataError);
}

TEST_CASE("ghz_noisy spectra and range checks") {
    DensityMatrix mixed = ghz_noisy(3, 0.0);
    for (double v : hermitian_eigenvalues(mixed.mat))
        CHECK(v == doctest::Approx(0.125).epsilon(1e-12));

    DensityMatrix pure = ghz_noisy(3, 1.0);
    CHECK(std::abs(pure.mat.trace().real() - 1.0) <= 1e-12);
    std::vector<double> pure_eig = hermitian_eigenvalues(pure.mat);
    CHECK(pure_eig.back() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(pure_eig[pure_eig.size() - 2]) <= 1e-12);

    std::vector<double> eig = oracles::qr_eigenvalues(ghz_noisy(4, 0.5).mat);
    CHECK(eig.back() == doctest::Approx(0.5 + 0.5 / 16.0).epsilon(1e-9));
    for (std::size_t i = 0; i + 1 < eig.size(); ++i)
        CHECK(eig[i] == doctest::Approx(0.5 / 16.0).epsilon(1e-9));

    CHECK_THROWS_AS(ghz_noisy(2, 0.5), DataError);
    CHECK_THROWS_AS(ghz_noisy(13, 0.5), DataError);
    CHECK_THROWS_AS(ghz_noisy(4, 1.5), DataError);
    CHECK_THROWS_AS(ghz_noisy(4, -0.1), DataError);
}

TEST_CASE("rho_s endpoints") {
    DensityMatrix product = rho_s(0.0);
    product.validate();
    CHECK(is_ppt_entangled(product) == PptVerdict::separable);

    DensityMatrix pure = rho_s(1.0);
    pure.validate();
    CHECK(is_ppt_entangled(pure) == PptVerdict::entangled);

    for (double p : {0.2, 0.5, 0.8}) rho_s(p).validate();
    CHECK_THROWS_AS(rho_s(1.2), DataError);
}

TEST_CASE("bound_k_separable formulas and reference table") {
    CHECK(bound_k_separable(4, 3).value == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(bound_k_separable(4, 3).kind == BoundKind::formula);
    CHECK(std::abs(bound_k_separable(5, 3).value - 0.2381) <= 5e-5);
    CHECK(bound_k_separable(5, 3).value == doctest::Approx(1.0 / 4.2).epsilon(1e-12));
    CHECK(bound_k_separable(6, 3).value == 0.2195);
    CHECK(bound_k_separable(6, 3).kind == BoundKind::reference_table);
    CHECK(bound_k_separable(7, 3).value == 0.2147);
    CHECK(bound_k_separable(7, 3).kind == BoundKind::reference_table);

    // b_2 and the general b_k formula agree wherever both apply.
    CHECK(bound_k_separable(3, 2).value == doctest::Approx(3.0 / 7.0).epsilon(1e-12));
    const double direct = 1.0 / (1.0 + (2.0 * 2 - 3) / 3.0 * 4.0);
    CHECK(bound_k_separable(3, 2).value == doctest::Approx(direct).epsilon(1e-12));
    CHECK(bound_k_separable(4, 4).value == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    CHECK(bound_k_separable(3, 3).value == doctest::Approx(0.2).epsilon(1e-12));

    CHECK_THROWS_AS(bound_k_separable(8, 3), DataError);
    CHECK_THROWS_AS(bound_k_separable(3, 4), DataError);
    CHECK_THROWS_AS(bound_k_separable(10, 4), DataError);
}

TEST_CASE("features_pauli_full on known states") {
    ComplexMatrix mixed(4, 4);
    for (int i = 0; i < 4; ++i) mixed(i, i) = 0.25;
    std::vector<double> f = features_pauli_full(DensityMatrix{mixed, 2}, 2);
    REQUIRE(f.size() == 16);
    CHECK(f[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 1; i < 16; ++i) CHECK(std::abs(f[i]) <= 1e-12);

    std::vector<double> bell = features_pauli_full(bell_phi_plus(), 2);
    for (std::size_t i = 0; i < 16; ++i) {
        double expect = 0.0;
        if (i == 0 || i == 5 || i == 15) expect = 1.0;  // II, XX, ZZ
        if (i == 10) expect = -1.0;                     // YY
        CHECK(std::abs(bell[i] - expect) <= 1e-12);
    }
    CHECK(features_pauli_full(bell_phi_plus(), 2) == bell);  // bit-stable
}

TEST_CASE("features_partial F1/F2") {
    ComplexMatrix mixed(4, 4);
    for (int i = 0; i < 4; ++i) mixed(i, i) = 0.25;
    for (double v : features_partial(DensityMatrix{mixed, 2}, PartialScheme::F1))
        CHECK(std::abs(v) <= 1e-12);
    for (double v : features_partial(DensityMatrix{mixed, 2}, PartialScheme::F2))
        CHECK(std::abs(v) <= 1e-12);

    std::vector<double> f1 = features_partial(bell_phi_plus(), PartialScheme::F1);
    std::vector<double> expect = {1, 0, 0, 0, -1, 0, 0, 0, 1};
    REQUIRE(f1.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(f1[i] - expect[i]) <= 1e-12);

    // F2 entries are (F1(i,1) +/- F1(i,3)) / sqrt(2).
    Rng rng(17);
    DensityMatrix rho = random_ginibre_density(4, rng);
    std::vector<double> a = features_partial(rho, PartialScheme::F1);
    std::vector<double> b = features_partial(rho, PartialScheme::F2);
    const double s2 = std::sqrt(2.0);
    for (int i = 0; i < 3; ++i) {
        CHECK(b[2 * i] == doctest::Approx((a[3 * i] + a[3 * i + 2]) / s2).epsilon(1e-10));
        CHECK(b[2 * i + 1] == doctest::Approx((a[3 * i] - a[3 * i + 2]) / s2).epsilon(1e-10));
    }
}

TEST_CASE("features_ghz against the dense-observable oracle") {
    for (int n : {3, 4, 5}) {
        std::vector<double> top = features_ghz(ghz_noisy(n, 1.0), n);
        CHECK(top[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(top[1] == doctest::Approx(1.0).epsilon(1e-12));
        std::vector<double> bottom = features_ghz(ghz_noisy(n, 0.0), n);
        CHECK(std::abs(bottom[0]) <= 1e-12);
        CHECK(bottom[1] == doctest::Approx(std::pow(2.0, 1 - n)).epsilon(1e-12));
    }
    std::vector<double> mid = features_ghz(ghz_noisy(4, 0.5), 4);
    CHECK(mid[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mid[1] == doctest::Approx(0.5625).epsilon(1e-12));

    // Dense kron-built M_x trace as an independent route.
    DensityMatrix rho = ghz_noisy(4, 0.37);
    ComplexMatrix mx = kron(kron(pauli(1), pauli(1)), kron(pauli(1), pauli(1)));
    cxd tx = 0.0;
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 16; ++j) tx += mx(i, j) * rho.mat(j, i);
    std::vector<double> f = features_ghz(rho, 4);
    CHECK(f[0] == doctest::Approx(tx.real()).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx((rho.mat(0, 0) + rho.mat(15, 15)).real()).epsilon(1e-12));
}

TEST_CASE("local unitary conjugation preserves PT spectra over 500 states") {
    Rng rng(20251103);
    std::vector<std::size_t> dims = {2, 2};
    for (int trial = 0; trial < 500; ++trial) {
        Rng sub = rng.substream(static_cast<std::uint64_t>(trial));
        DensityMatrix rho = random_ginibre_density(4, sub);
        std::vector<ComplexMatrix> locals = {random_unitary(2, sub), random_unitary(2, sub)};
        DensityMatrix conj = local_unitary_conjugate(rho, locals, dims);

        std::vector<double> spec_a = hermitian_eigenvalues(rho.mat);
        std::vector<double> spec_b = hermitian_eigenvalues(conj.mat);
        std::vector<double> pt_a = hermitian_eigenvalues(partial_transpose(rho, 2, 2));
        std::vector<double> pt_b = hermitian_eigenvalues(partial_transpose(conj, 2, 2));
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(std::abs(spec_a[i] - spec_b[i]) <= 1e-10);
            CHECK(std::abs(pt_a[i] - pt_b[i]) <= 1e-9);
        }
        CHECK(is_ppt_entangled(rho) == is_ppt_entangled(conj));
    }
}

TEST_CASE("convex mixtures keep density-matrix invariants") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        Rng sub = rng.substream(static_cast<std::uint64_t>(trial));
        DensityMatrix a = random_ginibre_density(4, sub);
        DensityMatrix b = random_ginibre_density(4, sub);
        double lam = sub.uniform01();
        const DensityMatrix pair[2] = {a, b};
        const double w[2] = {lam, 1.0 - lam};
        convex_mix(pair, w).validate();
    }
    DensityMatrix a = random_ginibre_density(4, rng);
    const DensityMatrix one[1] = {a};
    const double bad_w[1] = {0.5};
    CHECK_THROWS_AS(convex_mix(one, bad_w), DataError);
}

TEST_CASE("features are linear in the state") {
    Rng rng(41);
    DensityMatrix r1 = random_ginibre_density(4, rng);
    DensityMatrix r2 = random_ginibre_density(4, rng);
    const double lam = 0.3;
    const DensityMatrix pair[2] = {r1, r2};
    const double w[2] = {lam, 1.0 - lam};
    DensityMatrix mix = convex_mix(pair, w);
    for (auto scheme : {PartialScheme::F1, PartialScheme::F2}) {
        std::vector<double> f1 = features_partial(r1, scheme);
        std::vector<double> f2 = features_partial(r2, scheme);
        std::vector<double> fm = features_partial(mix, scheme);
        for (std::size_t i = 0; i < fm.size(); ++i)
            CHECK(fm[i] == doctest::Approx(lam * f1[i] + (1 - lam) * f2[i]).epsilon(1e-10));
    }
    std::vector<double> f1 = features_pauli_full(r1, 2);
    std::vector<double> f2 = features_pauli_full(r2, 2);
    std::vector<double> fm = features_pauli_full(mix, 2);
    for (std::size_t i = 0; i < fm.size(); ++i)
        CHECK(fm[i] == doctest::Approx(lam * f1[i] + (1 - lam) * f2[i]).epsilon(1e-10));
}

TEST_CASE("partial_trace of the rho_s pure part") {
    const double theta = M_PI / 8.0;
    ComplexMatrix psi(4, 1);
    psi(0, 0) = std::cos(theta);
    psi(3, 0) = std::sin(theta);
    ComplexMatrix proj(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) proj(i, j) = psi(i, 0) * std::conj(psi(j, 0));
    ComplexMatrix rb = partial_trace(proj, 2, 2, 0);
    CHECK(rb(0, 0).real() == doctest::Approx(std::cos(theta) * std::cos(theta)).epsilon(1e-12));
    CHECK(rb(1, 1).real() == doctest::Approx(std::sin(theta) * std::sin(theta)).epsilon(1e-12));
    CHECK(std::abs(rb(0, 1)) <= 1e-12);
}
