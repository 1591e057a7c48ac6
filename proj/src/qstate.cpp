#include "entangle/qstate.hpp"

#include <array>
#include <cmath>
#include <string>

#include "entangle/errors.hpp"

namespace entangle::qstate {

namespace {

int log2_exact(std::size_t dim) {
    int n = 0;
    std::size_t d = dim;
    while (d > 1) {
        if (d % 2 != 0) return 0;
        d /= 2;
        ++n;
    }
    return n;
}

ComplexMatrix outer(const ComplexMatrix& v) {
    ComplexMatrix m(v.rows(), v.rows());
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < v.rows(); ++j)
            m(i, j) = v(i, 0) * std::conj(v(j, 0));
    return m;
}

// A <- (I x V_s x I) A, site s with `left` blocks before and `right` after.
void apply_site_left(ComplexMatrix& a, const ComplexMatrix& v, std::size_t left,
                     std::size_t d, std::size_t right) {
    const std::size_t dim = a.rows();
    std::vector<cxd> tmp(d);
    for (std::size_t col = 0; col < dim; ++col) {
        for (std::size_t pre = 0; pre < left; ++pre) {
            for (std::size_t post = 0; post < right; ++post) {
                for (std::size_t i = 0; i < d; ++i) {
                    cxd s = 0.0;
                    for (std::size_t j = 0; j < d; ++j)
                        s += v(i, j) * a((pre * d + j) * right + post, col);
                    tmp[i] = s;
                }
                for (std::size_t i = 0; i < d; ++i) a((pre * d + i) * right + post, col) = tmp[i];
            }
        }
    }
}

// A <- A (I x V_s^dagger x I).
void apply_site_right(ComplexMatrix& a, const ComplexMatrix& v, std::size_t left,
                      std::size_t d, std::size_t right) {
    const std::size_t dim = a.rows();
    std::vector<cxd> tmp(d);
    for (std::size_t row = 0; row < dim; ++row) {
        for (std::size_t pre = 0; pre < left; ++pre) {
            for (std::size_t post = 0; post < right; ++post) {
                for (std::size_t j = 0; j < d; ++j) {
                    cxd s = 0.0;
                    for (std::size_t i = 0; i < d; ++i)
                        s += a(row, (pre * d + i) * right + post) * std::conj(v(j, i));
                    tmp[j] = s;
                }
                for (std::size_t j = 0; j < d; ++j) a(row, (pre * d + j) * right + post) = tmp[j];
            }
        }
    }
}

}  // namespace

void DensityMatrix::validate(bool check_psd) const {
    if (!mat.square()) throw DataError("density matrix not square");
    if (!mat.all_finite()) throw NumericError("density matrix has non-finite entries");
    if (mat.hermiticity_defect() > 1e-12) throw DataError("density matrix not Hermitian");
    cxd tr = mat.trace();
    if (std::abs(tr.real() - 1.0) > 1e-12 || std::abs(tr.imag()) > 1e-12)
        throw DataError("density matrix trace differs from 1");
    if (check_psd && dim() <= 64) {
        std::vector<double> eig = hermitian_eigenvalues(mat);
        if (eig.front() < -1e-10) throw DataError("density matrix not positive semidefinite");
    }
}

DensityMatrix density_from_matrix(ComplexMatrix m) {
    DensityMatrix rho{std::move(m), 0};
    rho.nqubits = log2_exact(rho.mat.rows());
    rho.validate();
    return rho;
}

DensityMatrix random_ginibre_density(std::size_t dim, Rng& rng) {
    if (dim < 2) throw DataError("random_ginibre_density: dim must be >= 2");
    for (;;) {
        ComplexMatrix g(dim, dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) g(i, j) = cxd(rng.normal(), rng.normal());
        ComplexMatrix h(dim, dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) {
                cxd s = 0.0;
                for (std::size_t k = 0; k < dim; ++k) s += g(i, k) * std::conj(g(j, k));
                h(i, j) = s;
            }
        double tr = h.trace().real();
        if (tr < 1e-30) continue;
        h *= cxd(1.0 / tr, 0.0);
        DensityMatrix rho{std::move(h), log2_exact(dim)};
#ifndef NDEBUG
        rho.validate(false);
#endif
        return rho;
    }
}

ComplexMatrix random_unitary(std::size_t dim, Rng& rng) {
    if (dim < 2) throw DataError("random_unitary: dim must be >= 2");
    for (;;) {
        ComplexMatrix g(dim, dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) g(i, j) = cxd(rng.normal(), rng.normal());
        // Modified Gram-Schmidt with reorthogonalization. The R diagonal comes
        // out real positive, which is exactly the phase normalization the Haar
        // recipe requires.
        ComplexMatrix q(dim, dim);
        bool degenerate = false;
        for (std::size_t j = 0; j < dim && !degenerate; ++j) {
            std::vector<cxd> v(dim);
            for (std::size_t i = 0; i < dim; ++i) v[i] = g(i, j);
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t prev = 0; prev < j; ++prev) {
                    cxd r = 0.0;
                    for (std::size_t i = 0; i < dim; ++i) r += std::conj(q(i, prev)) * v[i];
                    for (std::size_t i = 0; i < dim; ++i) v[i] -= r * q(i, prev);
                }
            }
            double norm = 0.0;
            for (const cxd& x : v) norm += std::norm(x);
            norm = std::sqrt(norm);
            if (norm < 1e-150) {
                degenerate = true;
                break;
            }
            for (std::size_t i = 0; i < dim; ++i) q(i, j) = v[i] / norm;
        }
        if (!degenerate) return q;
    }
}

DensityMatrix local_unitary_conjugate(const DensityMatrix& rho,
                                      std::span<const ComplexMatrix> locals,
                                      std::span<const std::size_t> dims) {
    if (locals.size() != dims.size())
        throw DataError("local_unitary_conjugate: locals/dims size mismatch");
    std::size_t prod = 1;
    for (std::size_t d : dims) prod *= d;
    if (prod != rho.dim()) throw DataError("local_unitary_conjugate: dimension mismatch");
    for (std::size_t s = 0; s < locals.size(); ++s) {
        const ComplexMatrix& v = locals[s];
        if (v.rows() != dims[s] || v.cols() != dims[s])
            throw DataError("local_unitary_conjugate: local dimension mismatch at site " +
                            std::to_string(s));
        ComplexMatrix uu = matmul(v, v.adjoint());
        if (max_abs_diff(uu, ComplexMatrix::identity(dims[s])) > 1e-8)
            throw DataError("local_unitary_conjugate: local is not unitary");
    }

    ComplexMatrix a = rho.mat;
    std::size_t left = 1;
    for (std::size_t s = 0; s < locals.size(); ++s) {
        std::size_t right = rho.dim() / (left * dims[s]);
        apply_site_left(a, locals[s], left, dims[s], right);
        left *= dims[s];
    }
    left = 1;
    for (std::size_t s = 0; s < locals.size(); ++s) {
        std::size_t right = rho.dim() / (left * dims[s]);
        apply_site_right(a, locals[s], left, dims[s], right);
        left *= dims[s];
    }
    DensityMatrix out{std::move(a), rho.nqubits};
#ifndef NDEBUG
    out.validate(false);
#endif
    return out;
}

ComplexMatrix partial_transpose(const DensityMatrix& rho, std::size_t dim_a, std::size_t dim_b) {
    if (dim_a * dim_b != rho.dim()) throw DataError("partial_transpose: dimension mismatch");
    ComplexMatrix out(rho.dim(), rho.dim());
    for (std::size_t a = 0; a < dim_a; ++a)
        for (std::size_t ap = 0; ap < dim_a; ++ap)
            for (std::size_t b = 0; b < dim_b; ++b)
                for (std::size_t bp = 0; bp < dim_b; ++bp)
                    out(a * dim_b + bp, ap * dim_b + b) = rho.mat(a * dim_b + b, ap * dim_b + bp);
    return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& m, std::size_t dim_a, std::size_t dim_b, int which) {
    if (dim_a * dim_b != m.rows() || !m.square())
        throw DataError("partial_trace: dimension mismatch");
    if (which == 0) {
        ComplexMatrix out(dim_b, dim_b);
        for (std::size_t b = 0; b < dim_b; ++b)
            for (std::size_t bp = 0; bp < dim_b; ++bp) {
                cxd s = 0.0;
                for (std::size_t a = 0; a < dim_a; ++a) s += m(a * dim_b + b, a * dim_b + bp);
                out(b, bp) = s;
            }
        return out;
    }
    ComplexMatrix out(dim_a, dim_a);
    for (std::size_t a = 0; a < dim_a; ++a)
        for (std::size_t ap = 0; ap < dim_a; ++ap) {
            cxd s = 0.0;
            for (std::size_t b = 0; b < dim_b; ++b) s += m(a * dim_b + b, ap * dim_b + b);
            out(a, ap) = s;
        }
    return out;
}

PptVerdict is_ppt_entangled(const DensityMatrix& rho) {
    if (rho.dim() != 4)
        throw DataError("is_ppt_entangled: PPT labeling is only used for two-qubit states");
    std::vector<double> eig = hermitian_eigenvalues(partial_transpose(rho, 2, 2));
    return eig.front() < -1e-9 ? PptVerdict::entangled : PptVerdict::separable;
}

DensityMatrix ghz_noisy(int n, double p) {
    if (n < 3 || n > 12) throw DataError("ghz_noisy: n must be in [3, 12]");
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("ghz_noisy: p must be in [0, 1]");
    const std::size_t dim = std::size_t(1) << n;
    ComplexMatrix m(dim, dim);
    const double noise = (1.0 - p) / static_cast<double>(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = noise;
    m(0, 0) += p / 2.0;
    m(0, dim - 1) += p / 2.0;
    m(dim - 1, 0) += p / 2.0;
    m(dim - 1, dim - 1) += p / 2.0;
    return DensityMatrix{std::move(m), n};
}

DensityMatrix rho_s(double p, double theta) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("rho_s: p must be in [0, 1]");
    const double c = std::cos(theta), s = std::sin(theta);
    ComplexMatrix psi(4, 1);
    psi(0, 0) = c;
    psi(3, 0) = s;
    ComplexMatrix proj = outer(psi);
    ComplexMatrix rho_b = partial_trace(proj, 2, 2, 0);
    ComplexMatrix m = kron(ComplexMatrix::identity(2), rho_b);
    m *= cxd((1.0 - p) / 2.0, 0.0);
    proj *= cxd(p, 0.0);
    m += proj;
    DensityMatrix out{std::move(m), 2};
#ifndef NDEBUG
    out.validate();
#endif
    return out;
}

SeparabilityBound bound_k_separable(int n, int k) {
    if (n < 2 || k < 2 || k > n)
        throw DataError("bound_k_separable: no analytic bound for (n=" + std::to_string(n) +
                        ", k=" + std::to_string(k) + ")");
    const double half_dim = std::pow(2.0, n - 1);
    if (k == 2) {
        double value = (half_dim - 1.0) / (2.0 * half_dim - 1.0);
        return {n, k, BoundKind::formula, value};
    }
    if (2 * k >= n + 1) {
        double value = 1.0 / (1.0 + (2.0 * k - n) / n * half_dim);
        return {n, k, BoundKind::formula, value};
    }
    if (k == 3 && n == 6) return {n, k, BoundKind::reference_table, 0.2195};
    if (k == 3 && n == 7) return {n, k, BoundKind::reference_table, 0.2147};
    throw DataError("bound_k_separable: no analytic bound for (n=" + std::to_string(n) +
                    ", k=" + std::to_string(k) + ")");
}

const ComplexMatrix& pauli(int i) {
    static const std::array<ComplexMatrix, 4> sigma = [] {
        std::array<ComplexMatrix, 4> s{ComplexMatrix(2, 2), ComplexMatrix(2, 2),
                                       ComplexMatrix(2, 2), ComplexMatrix(2, 2)};
        s[0](0, 0) = 1.0;
        s[0](1, 1) = 1.0;
        s[1](0, 1) = 1.0;
        s[1](1, 0) = 1.0;
        s[2](0, 1) = cxd(0.0, -1.0);
        s[2](1, 0) = cxd(0.0, 1.0);
        s[3](0, 0) = 1.0;
        s[3](1, 1) = -1.0;
        return s;
    }();
    return sigma.at(i);
}

namespace {

double real_expectation(const ComplexMatrix& obs, const ComplexMatrix& rho) {
    cxd s = 0.0;
    for (std::size_t i = 0; i < obs.rows(); ++i)
        for (std::size_t j = 0; j < obs.cols(); ++j) s += obs(i, j) * rho(j, i);
    if (std::abs(s.imag()) > 1e-10)
        throw DataError("expectation value has imaginary part above 1e-10");
    return s.real();
}

const std::vector<ComplexMatrix>& pauli_products(int n) {
    static const std::vector<ComplexMatrix> two = [] {
        std::vector<ComplexMatrix> v;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) v.push_back(kron(pauli(i), pauli(j)));
        return v;
    }();
    static const std::vector<ComplexMatrix> three = [] {
        std::vector<ComplexMatrix> v;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k) v.push_back(kron(kron(pauli(i), pauli(j)), pauli(k)));
        return v;
    }();
    if (n == 2) return two;
    if (n == 3) return three;
    throw DataError("features_pauli_full: n must be 2 or 3");
}

}  // namespace

std::vector<double> features_pauli_full(const DensityMatrix& rho, int n) {
    const std::vector<ComplexMatrix>& prods = pauli_products(n);
    if (rho.dim() != (std::size_t(1) << n))
        throw DataError("features_pauli_full: state dimension mismatch");
    std::vector<double> f(prods.size());
    for (std::size_t i = 0; i < prods.size(); ++i) f[i] = real_expectation(prods[i], rho.mat);
    return f;
}

std::vector<double> features_partial(const DensityMatrix& rho, PartialScheme scheme) {
    if (rho.dim() != 4) throw DataError("features_partial: two-qubit state required");
    std::vector<double> f;
    if (scheme == PartialScheme::F1) {
        f.reserve(9);
        for (int i = 1; i <= 3; ++i)
            for (int j = 1; j <= 3; ++j)
                f.push_back(real_expectation(kron(pauli(i), pauli(j)), rho.mat));
        return f;
    }
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    ComplexMatrix b1 = pauli(1) + pauli(3);
    b1 *= cxd(inv_sqrt2, 0.0);
    ComplexMatrix b2 = pauli(1) - pauli(3);
    b2 *= cxd(inv_sqrt2, 0.0);
    f.reserve(6);
    for (int i = 1; i <= 3; ++i) {
        f.push_back(real_expectation(kron(pauli(i), b1), rho.mat));
        f.push_back(real_expectation(kron(pauli(i), b2), rho.mat));
    }
    return f;
}

std::vector<double> features_ghz(const DensityMatrix& rho, int n) {
    const std::size_t dim = std::size_t(1) << n;
    if (rho.dim() != dim) throw DataError("features_ghz: state dimension mismatch");
    // <M_x> = sum_i rho[~i, i]; <M_z> = rho[0,0] + rho[dim-1,dim-1].
    cxd mx = 0.0;
    for (std::size_t i = 0; i < dim; ++i) mx += rho.mat(dim - 1 - i, i);
    if (std::abs(mx.imag()) > 1e-10)
        throw DataError("features_ghz: <M_x> has imaginary part above 1e-10");
    cxd mz = rho.mat(0, 0) + rho.mat(dim - 1, dim - 1);
    if (std::abs(mz.imag()) > 1e-10)
        throw DataError("features_ghz: <M_z> has imaginary part above 1e-10");
    return {mx.real(), mz.real()};
}

DensityMatrix pauli_string_conjugate(const DensityMatrix& rho, std::span<const int> word) {
    std::vector<ComplexMatrix> locals;
    locals.reserve(word.size());
    for (int w : word) locals.push_back(pauli(w));
    std::vector<std::size_t> dims(word.size(), 2);
    return local_unitary_conjugate(rho, locals, dims);
}

ComplexMatrix haar_pure_qubit(Rng& rng) {
    for (;;) {
        cxd a(rng.normal(), rng.normal());
        cxd b(rng.normal(), rng.normal());
        double norm = std::sqrt(std::norm(a) + std::norm(b));
        if (norm < 1e-150) continue;
        ComplexMatrix v(2, 1);
        v(0, 0) = a / norm;
        v(1, 0) = b / norm;
        return v;
    }
}

DensityMatrix convex_mix(std::span<const DensityMatrix> states, std::span<const double> weights) {
    if (states.empty() || states.size() != weights.size())
        throw DataError("convex_mix: states/weights mismatch");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw DataError("convex_mix: negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("convex_mix: weights do not sum to 1");
    ComplexMatrix m(states[0].dim(), states[0].dim());
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i].dim() != m.rows()) throw DataError("convex_mix: dimension mismatch");
        ComplexMatrix term = states[i].mat;
        term *= cxd(weights[i], 0.0);
        m += term;
    }
    return DensityMatrix{std::move(m), states[0].nqubits};
}

}  // namespace entangle::qstate
