#pragma once

#include <span>
#include <vector>

#include "entangle/complex_matrix.hpp"
#include "entangle/rng.hpp"

namespace entangle::qstate {

// Hermitian, positive-semidefinite, unit-trace matrix. Builders in this
// module produce valid states by construction; validate() re-checks the
// invariants (the PSD check runs the eigensolver, so it is restricted to
// small dimensions on the hot construction path).
struct DensityMatrix {
    ComplexMatrix mat;
    int nqubits = 0;  // 0 when dim is not a power of two

    std::size_t dim() const { return mat.rows(); }
    void validate(bool check_psd = true) const;

    bool operator==(const DensityMatrix& o) const = default;
};

DensityMatrix density_from_matrix(ComplexMatrix m);

// rho = H / tr(H), H = (N1 + i N2)(N1 + i N2)^dagger with standard-normal
// entries. PSD and unit trace by construction.
DensityMatrix random_ginibre_density(std::size_t dim, Rng& rng);

// Haar-distributed unitary: QR of a complex Ginibre matrix with the R
// diagonal phase-normalized.
ComplexMatrix random_unitary(std::size_t dim, Rng& rng);

// (V_1 x ... x V_n) rho (V_1 x ... x V_n)^dagger, applied site by site.
DensityMatrix local_unitary_conjugate(const DensityMatrix& rho,
                                      std::span<const ComplexMatrix> locals,
                                      std::span<const std::size_t> dims);

// Transpose on the B factor: ((a,b),(a',b')) -> ((a,b'),(a',b)).
ComplexMatrix partial_transpose(const DensityMatrix& rho, std::size_t dim_a, std::size_t dim_b);

// Trace out subsystem A (which = 0) or B (which = 1) of an A x B system.
ComplexMatrix partial_trace(const ComplexMatrix& m, std::size_t dim_a, std::size_t dim_b, int which);

enum class PptVerdict { separable, entangled };

// Exact two-qubit criterion: entangled iff the partial transpose has an
// eigenvalue below -1e-9. Rejects dim != 4.
PptVerdict is_ppt_entangled(const DensityMatrix& rho);

// p |GHZ_n><GHZ_n| + (1-p) I / 2^n, 3 <= n <= 12.
DensityMatrix ghz_noisy(int n, double p);

// (1-p)/2 I_2 x rho_B + p |psi><psi|, |psi> = cos(theta)|00> + sin(theta)|11>.
DensityMatrix rho_s(double p, double theta = M_PI / 8.0);

enum class BoundKind { formula, reference_table };

struct SeparabilityBound {
    int n = 0;
    int k = 0;
    BoundKind kind = BoundKind::formula;
    double value = 0.0;
};

// White-noise tolerance b_k of the noisy n-qubit GHZ state:
//   b_2 = (2^{n-1}-1)/(2^n-1)
//   b_k = 1/(1 + ((2k-n)/n) 2^{n-1})   for k >= (n+1)/2 (b_n is the k=n case)
// (6,3) and (7,3) are served from a reference table.
SeparabilityBound bound_k_separable(int n, int k);

// All 4^n Pauli-product expectation values in lexicographic order
// (identity first), n in {2,3}. Entry 0 is tr(rho) = 1.
std::vector<double> features_pauli_full(const DensityMatrix& rho, int n);

enum class PartialScheme { F1, F2 };

// F1: <sigma_i x sigma_j>, i,j in {1,2,3} row-major (9 entries).
// F2: <sigma_i x B_j>, B_1 = (sigma_1+sigma_3)/sqrt(2),
//     B_2 = (sigma_1-sigma_3)/sqrt(2) (6 entries).
std::vector<double> features_partial(const DensityMatrix& rho, PartialScheme scheme);

// (<M_x>, <M_z>) with M_x = sigma_x^{x n}, M_z = |0..0><0..0| + |1..1><1..1|.
std::vector<double> features_ghz(const DensityMatrix& rho, int n);

// sigma_0 .. sigma_3.
const ComplexMatrix& pauli(int i);

// Conjugation by the Pauli string sigma_{word[0]} x ... x sigma_{word[n-1]}.
DensityMatrix pauli_string_conjugate(const DensityMatrix& rho, std::span<const int> word);

// Haar-random single-qubit pure state as a 2-vector (2x1 matrix).
ComplexMatrix haar_pure_qubit(Rng& rng);

// Convex combination; weights must be nonnegative and sum to 1 within 1e-9.
DensityMatrix convex_mix(std::span<const DensityMatrix> states, std::span<const double> weights);

}  // namespace entangle::qstate
