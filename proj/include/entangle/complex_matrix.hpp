#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace entangle {

using cxd = std::complex<double>;

// Dense row-major complex matrix, 64-bit components throughout.
class ComplexMatrix {
public:
    ComplexMatrix() : rows_(0), cols_(0) {}
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, cxd(0.0, 0.0)) {}

    static ComplexMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    cxd& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cxd& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    cxd* data() { return data_.data(); }
    const cxd* data() const { return data_.data(); }

    ComplexMatrix adjoint() const;
    ComplexMatrix transpose() const;
    cxd trace() const;
    double frobenius_norm() const;
    double max_abs() const;
    bool all_finite() const;

    // max |M - M^dagger| entry; requires square.
    double hermiticity_defect() const;

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(cxd s);

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(cxd s, ComplexMatrix a) { return a *= s; }

    bool operator==(const ComplexMatrix& o) const = default;

private:
    std::size_t rows_, cols_;
    std::vector<cxd> data_;
};

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

// All eigenvalues of a Hermitian matrix, ascending, via cyclic Jacobi
// rotations. Accuracy contract: each value within 1e-10 of the true one.
// Rejects inputs whose hermiticity defect exceeds 1e-10.
std::vector<double> hermitian_eigenvalues(const ComplexMatrix& m);

}  // namespace entangle
