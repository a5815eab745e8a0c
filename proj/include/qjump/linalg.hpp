#pragma once

// Dense complex linear algebra for small matrices (dims up to a few dozen):
// products, Kronecker products, eigendecomposition of non-normal matrices,
// linear solves with condition estimation, matrix exponentials, partial traces.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qjump {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tolerances used by the numerical kernels. Defaults follow the module
// contracts; callers may pass adjusted copies.
struct LinalgConfig {
    double eig_residual = 1e-9;     // relative to ||m||_F
    double solve_residual = 1e-10;  // relative residual bound
    double cond_limit = 1e12;       // solve_linear rejects beyond this
    double expm_norm_limit = 1e3;   // overflow guard on ||m||_1
    std::size_t eig_max_dim = 32;
    std::size_t expm_max_dim = 32;
};

class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols) {}

    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix zero(std::size_t rows, std::size_t cols);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return a_.empty(); }

    Complex& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    std::vector<Complex>& data() { return a_; }
    const std::vector<Complex>& data() const { return a_; }

    ComplexMatrix adjoint() const;
    ComplexMatrix transpose() const;
    ComplexMatrix conjugate() const;
    Complex trace() const;
    double frobenius_norm() const;
    double one_norm() const;  // max column sum
    double max_abs() const;
    bool is_hermitian(double tol) const;

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(Complex s);

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }
    friend ComplexMatrix operator*(ComplexMatrix a, Complex s) { return a *= s; }
    friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

    // out = this * v; out may not alias v
    void apply(const ComplexVector& v, ComplexVector& out) const;
    ComplexVector apply(const ComplexVector& v) const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Complex> a_;
};

// vector helpers
double norm2(const ComplexVector& v);          // sum |v_i|^2
double vec_norm(const ComplexVector& v);       // sqrt(norm2)
Complex dot(const ComplexVector& a, const ComplexVector& b);  // conj(a).b
void normalize(ComplexVector& v);
ComplexVector normalized(ComplexVector v);
ComplexVector& axpy(ComplexVector& y, Complex alpha, const ComplexVector& x);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

struct EigResult {
    ComplexVector values;     // sorted by (Re desc, Im desc)
    ComplexMatrix vectors;    // right eigenvectors as columns, unit norm
    bool defective = false;   // repeated eigenvalue without independent vectors
    double max_residual = 0;  // max_k ||m v_k - lambda_k v_k||
};

// Schur-based eigensolver for general (non-normal) complex matrices:
// Householder Hessenberg reduction, shifted QR with deflation, eigenvectors
// by back-substitution on the triangular factor. Throws NumericalError on
// non-convergence.
EigResult eig_general(const ComplexMatrix& m, const LinalgConfig& cfg = {});

// LU solve with partial pivoting and one step of iterative refinement.
// Throws NumericalError when singular or the 1-norm condition estimate
// exceeds cfg.cond_limit.
ComplexVector solve_linear(const ComplexMatrix& m, const ComplexVector& rhs,
                           const LinalgConfig& cfg = {});
ComplexMatrix invert(const ComplexMatrix& m, const LinalgConfig& cfg = {});
double condition_estimate(const ComplexMatrix& m);

// Matrix exponential by scaling and squaring with a Taylor kernel.
ComplexMatrix expm(const ComplexMatrix& m, const LinalgConfig& cfg = {});

// Partial trace over all factors except `keep`. factor_dims lists the tensor
// factors in kron order; their product must equal the matrix dimension.
ComplexMatrix partial_trace(const ComplexMatrix& m, const std::vector<std::size_t>& factor_dims,
                            std::size_t keep);

}  // namespace qjump
