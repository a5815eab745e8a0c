#include "qjump/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qjump {

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::zero(std::size_t rows, std::size_t cols) {
    return ComplexMatrix(rows, cols);
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
}

ComplexMatrix ComplexMatrix::transpose() const {
    ComplexMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
}

ComplexMatrix ComplexMatrix::conjugate() const {
    ComplexMatrix r(rows_, cols_);
    for (std::size_t k = 0; k < a_.size(); ++k) r.a_[k] = std::conj(a_[k]);
    return r;
}

Complex ComplexMatrix::trace() const {
    Complex t = 0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
}

double ComplexMatrix::frobenius_norm() const {
    double s = 0;
    for (const auto& z : a_) s += std::norm(z);
    return std::sqrt(s);
}

double ComplexMatrix::one_norm() const {
    double best = 0;
    for (std::size_t j = 0; j < cols_; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < rows_; ++i) s += std::abs((*this)(i, j));
        best = std::max(best, s);
    }
    return best;
}

double ComplexMatrix::max_abs() const {
    double best = 0;
    for (const auto& z : a_) best = std::max(best, std::abs(z));
    return best;
}

bool ComplexMatrix::is_hermitian(double tol) const {
    if (rows_ != cols_) return false;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i; j < cols_; ++j)
            if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
    return true;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw NumericalError("matrix add: shape mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw NumericalError("matrix sub: shape mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
    for (auto& z : a_) z *= s;
    return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw NumericalError("matrix mul: shape mismatch");
    ComplexMatrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const Complex aik = a(i, k);
            if (aik == Complex(0)) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
        }
    }
    return r;
}

void ComplexMatrix::apply(const ComplexVector& v, ComplexVector& out) const {
    if (v.size() != cols_) throw NumericalError("matvec: shape mismatch");
    out.assign(rows_, Complex(0));
    for (std::size_t i = 0; i < rows_; ++i) {
        Complex s = 0;
        const Complex* row = a_.data() + i * cols_;
        for (std::size_t j = 0; j < cols_; ++j) s += row[j] * v[j];
        out[i] = s;
    }
}

ComplexVector ComplexMatrix::apply(const ComplexVector& v) const {
    ComplexVector out;
    apply(v, out);
    return out;
}

double norm2(const ComplexVector& v) {
    double s = 0;
    for (const auto& z : v) s += std::norm(z);
    return s;
}

double vec_norm(const ComplexVector& v) { return std::sqrt(norm2(v)); }

Complex dot(const ComplexVector& a, const ComplexVector& b) {
    if (a.size() != b.size()) throw NumericalError("dot: size mismatch");
    Complex s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

void normalize(ComplexVector& v) {
    double n = vec_norm(v);
    if (n < 1e-300) throw NumericalError("normalize: vanishing norm");
    for (auto& z : v) z /= n;
}

ComplexVector normalized(ComplexVector v) {
    normalize(v);
    return v;
}

ComplexVector& axpy(ComplexVector& y, Complex alpha, const ComplexVector& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
    return y;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.empty() || b.empty()) throw NumericalError("kron: empty operand");
    ComplexMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const Complex aij = a(i, j);
            if (aij == Complex(0)) continue;
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    r(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
        }
    return r;
}

// ---------------------------------------------------------------------------
// Eigendecomposition: Hessenberg reduction + shifted QR + back-substitution.

namespace {

void check_square(const ComplexMatrix& m, const char* who) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw NumericalError(std::string(who) + ": square matrix required");
}

// Householder reduction to upper Hessenberg form, Q accumulated so that
// m = Q H Q^dagger.
void hessenberg(ComplexMatrix& h, ComplexMatrix& q) {
    const std::size_t n = h.rows();
    q = ComplexMatrix::identity(n);
    if (n < 3) return;
    ComplexVector v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double xnorm2 = 0;
        for (std::size_t i = k + 1; i < n; ++i) xnorm2 += std::norm(h(i, k));
        double xnorm = std::sqrt(xnorm2);
        if (xnorm < 1e-300) continue;
        Complex x0 = h(k + 1, k);
        Complex phase = (std::abs(x0) > 0) ? x0 / std::abs(x0) : Complex(1);
        Complex alpha = -phase * xnorm;
        // v = x - alpha e1, normalized
        double vnorm2 = 0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = h(i, k);
            if (i == k + 1) v[i] -= alpha;
            vnorm2 += std::norm(v[i]);
        }
        if (vnorm2 < 1e-300) continue;
        double vnorm = std::sqrt(vnorm2);
        for (std::size_t i = k + 1; i < n; ++i) v[i] /= vnorm;
        // left: rows k+1..n-1, H <- (1 - 2 v v^+) H
        for (std::size_t j = k; j < n; ++j) {
            Complex c = 0;
            for (std::size_t i = k + 1; i < n; ++i) c += std::conj(v[i]) * h(i, j);
            c *= 2.0;
            for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= c * v[i];
        }
        // right: cols k+1..n-1, H <- H (1 - 2 v v^+)
        for (std::size_t i = 0; i < n; ++i) {
            Complex c = 0;
            for (std::size_t j = k + 1; j < n; ++j) c += h(i, j) * v[j];
            c *= 2.0;
            for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= c * std::conj(v[j]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            Complex c = 0;
            for (std::size_t j = k + 1; j < n; ++j) c += q(i, j) * v[j];
            c *= 2.0;
            for (std::size_t j = k + 1; j < n; ++j) q(i, j) -= c * std::conj(v[j]);
        }
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0;
    }
}

struct Givens {
    double c;
    Complex s;
};

// Rotation with [c, s; -conj(s), c] [a; b] = [r; 0], c real.
Givens make_givens(Complex a, Complex b) {
    double na = std::abs(a), nb = std::abs(b);
    if (nb == 0) return {1.0, Complex(0)};
    if (na == 0) return {0.0, Complex(1)};
    double r = std::hypot(na, nb);
    return {na / r, (a / na) * std::conj(b) / r};
}

// Shifted QR on the Hessenberg matrix; returns upper triangular T and
// accumulates z so that input = z T z^dagger.
void schur_qr(ComplexMatrix& h, ComplexMatrix& z, double scale) {
    const std::size_t n = h.rows();
    const double eps = 2.3e-16;
    std::vector<Givens> rot(n);
    std::size_t hi = n - 1;
    std::size_t iters_here = 0;
    while (true) {
        // deflate converged subdiagonals
        while (hi > 0) {
            double small = eps * (std::abs(h(hi - 1, hi - 1)) + std::abs(h(hi, hi))) + 1e-300 * scale;
            if (std::abs(h(hi, hi - 1)) <= small) {
                h(hi, hi - 1) = 0;
                --hi;
                iters_here = 0;
            } else {
                break;
            }
        }
        if (hi == 0) break;
        // active block [lo, hi]
        std::size_t lo = hi;
        while (lo > 0) {
            double small = eps * (std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo))) + 1e-300 * scale;
            if (std::abs(h(lo, lo - 1)) <= small) {
                h(lo, lo - 1) = 0;
                break;
            }
            --lo;
        }
        if (++iters_here > 60) throw NumericalError("eig_general: QR iteration failed to converge");
        // Wilkinson shift from trailing 2x2 of the block
        Complex mu;
        {
            Complex a = h(hi - 1, hi - 1), b = h(hi - 1, hi), c = h(hi, hi - 1), d = h(hi, hi);
            if (iters_here % 20 == 0) {
                mu = d + Complex(0.75 * std::abs(c), 0);  // exceptional shift
            } else {
                Complex tr2 = 0.5 * (a + d);
                Complex disc = std::sqrt(tr2 * tr2 - (a * d - b * c));
                Complex m1 = tr2 + disc, m2 = tr2 - disc;
                mu = (std::abs(m1 - d) < std::abs(m2 - d)) ? m1 : m2;
            }
        }
        for (std::size_t i = lo; i <= hi; ++i) h(i, i) -= mu;
        // QR sweep: left rotations zero the subdiagonal
        for (std::size_t i = lo; i < hi; ++i) {
            Givens g = make_givens(h(i, i), h(i + 1, i));
            rot[i] = g;
            for (std::size_t j = i; j < n; ++j) {
                Complex t1 = h(i, j), t2 = h(i + 1, j);
                h(i, j) = g.c * t1 + g.s * t2;
                h(i + 1, j) = -std::conj(g.s) * t1 + g.c * t2;
            }
        }
        // RQ: apply adjoints on the right, accumulate z
        for (std::size_t i = lo; i < hi; ++i) {
            const Givens& g = rot[i];
            std::size_t top = std::min(i + 2, hi + 1);
            for (std::size_t k = 0; k < top; ++k) {
                Complex t1 = h(k, i), t2 = h(k, i + 1);
                h(k, i) = g.c * t1 + std::conj(g.s) * t2;
                h(k, i + 1) = -g.s * t1 + g.c * t2;
            }
            for (std::size_t k = 0; k < n; ++k) {
                Complex t1 = z(k, i), t2 = z(k, i + 1);
                z(k, i) = g.c * t1 + std::conj(g.s) * t2;
                z(k, i + 1) = -g.s * t1 + g.c * t2;
            }
        }
        for (std::size_t i = lo; i <= hi; ++i) h(i, i) += mu;
    }
}

}  // namespace

EigResult eig_general(const ComplexMatrix& m, const LinalgConfig& cfg) {
    check_square(m, "eig_general");
    const std::size_t n = m.rows();
    if (n > cfg.eig_max_dim) throw NumericalError("eig_general: dimension exceeds configured maximum");

    ComplexMatrix t = m, z;
    double scale = std::max(m.frobenius_norm(), 1e-300);
    hessenberg(t, z);
    schur_qr(t, z, scale);

    EigResult res;
    res.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.values[i] = t(i, i);

    // eigenvectors of T by back-substitution, mapped through z
    res.vectors = ComplexMatrix(n, n);
    ComplexVector y(n), vfull(n);
    bool tiny_pivot = false;
    for (std::size_t k = 0; k < n; ++k) {
        std::fill(y.begin(), y.end(), Complex(0));
        y[k] = 1.0;
        for (std::size_t ii = k; ii-- > 0;) {
            Complex s = 0;
            for (std::size_t j = ii + 1; j <= k; ++j) s += t(ii, j) * y[j];
            Complex d = t(ii, ii) - t(k, k);
            if (std::abs(d) < 1e-13 * scale) {
                d = Complex(1e-13 * scale, 0);
                if (std::abs(s) > 1e-13 * scale) tiny_pivot = true;
            }
            y[ii] = -s / d;
        }
        double yn = vec_norm(y);
        for (auto& c : y) c /= yn;
        for (std::size_t i = 0; i < n; ++i) {
            Complex s = 0;
            for (std::size_t j = 0; j <= k; ++j) s += z(i, j) * y[j];
            vfull[i] = s;
        }
        double vn = vec_norm(vfull);
        for (std::size_t i = 0; i < n; ++i) res.vectors(i, k) = vfull[i] / vn;
    }

    // sort by (Re desc, Im desc)
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (res.values[a].real() != res.values[b].real())
            return res.values[a].real() > res.values[b].real();
        return res.values[a].imag() > res.values[b].imag();
    });
    EigResult sorted;
    sorted.values.resize(n);
    sorted.vectors = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        sorted.values[k] = res.values[order[k]];
        for (std::size_t i = 0; i < n; ++i) sorted.vectors(i, k) = res.vectors(i, order[k]);
    }
    sorted.defective = tiny_pivot;

    // residuals, and parallel-vector check for near-degenerate pairs
    ComplexVector col(n), mv;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) col[i] = sorted.vectors(i, k);
        m.apply(col, mv);
        axpy(mv, -sorted.values[k], col);
        sorted.max_residual = std::max(sorted.max_residual, vec_norm(mv));
    }
    for (std::size_t a = 0; a < n && !sorted.defective; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            if (std::abs(sorted.values[a] - sorted.values[b]) > 1e-8 * scale) continue;
            Complex ov = 0;
            for (std::size_t i = 0; i < n; ++i)
                ov += std::conj(sorted.vectors(i, a)) * sorted.vectors(i, b);
            if (std::abs(ov) > 1.0 - 1e-8) {
                sorted.defective = true;
                break;
            }
        }
    return sorted;
}

// ---------------------------------------------------------------------------
// LU solve

namespace {

struct Lu {
    ComplexMatrix lu;
    std::vector<std::size_t> piv;
    bool singular = false;
};

Lu lu_factor(const ComplexMatrix& m) {
    const std::size_t n = m.rows();
    Lu f{m, std::vector<std::size_t>(n), false};
    for (std::size_t i = 0; i < n; ++i) f.piv[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(f.lu(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = std::abs(f.lu(i, k));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (best < 1e-300) {
            f.singular = true;
            return f;
        }
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(p, j));
            std::swap(f.piv[k], f.piv[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            Complex l = f.lu(i, k) / f.lu(k, k);
            f.lu(i, k) = l;
            for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= l * f.lu(k, j);
        }
    }
    return f;
}

void lu_solve(const Lu& f, const ComplexVector& b, ComplexVector& x) {
    const std::size_t n = f.piv.size();
    x.resize(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[f.piv[i]];
    for (std::size_t i = 1; i < n; ++i) {
        Complex s = x[i];
        for (std::size_t j = 0; j < i; ++j) s -= f.lu(i, j) * x[j];
        x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        Complex s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= f.lu(i, j) * x[j];
        x[i] = s / f.lu(i, i);
    }
}

}  // namespace

double condition_estimate(const ComplexMatrix& m) {
    check_square(m, "condition_estimate");
    Lu f = lu_factor(m);
    if (f.singular) return std::numeric_limits<double>::infinity();
    const std::size_t n = m.rows();
    // exact 1-norm of the inverse (dims here are small)
    double inv_norm = 0;
    ComplexVector e(n), x;
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), Complex(0));
        e[j] = 1.0;
        lu_solve(f, e, x);
        double s = 0;
        for (const auto& z : x) s += std::abs(z);
        inv_norm = std::max(inv_norm, s);
    }
    return m.one_norm() * inv_norm;
}

ComplexVector solve_linear(const ComplexMatrix& m, const ComplexVector& rhs,
                           const LinalgConfig& cfg) {
    check_square(m, "solve_linear");
    if (rhs.size() != m.rows()) throw NumericalError("solve_linear: rhs size mismatch");
    Lu f = lu_factor(m);
    if (f.singular) throw NumericalError("solve_linear: singular matrix");
    double cond = condition_estimate(m);
    if (cond > cfg.cond_limit)
        throw NumericalError("solve_linear: condition estimate " + std::to_string(cond) +
                             " exceeds limit");
    ComplexVector x, r(rhs.size()), dx;
    lu_solve(f, rhs, x);
    // one refinement step
    ComplexVector mx = m.apply(x);
    for (std::size_t i = 0; i < rhs.size(); ++i) r[i] = rhs[i] - mx[i];
    lu_solve(f, r, dx);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
    return x;
}

ComplexMatrix invert(const ComplexMatrix& m, const LinalgConfig& cfg) {
    check_square(m, "invert");
    const std::size_t n = m.rows();
    Lu f = lu_factor(m);
    if (f.singular) throw NumericalError("invert: singular matrix");
    (void)cfg;
    ComplexMatrix inv(n, n);
    ComplexVector e(n), x;
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), Complex(0));
        e[j] = 1.0;
        lu_solve(f, e, x);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = x[i];
    }
    return inv;
}

ComplexMatrix expm(const ComplexMatrix& m, const LinalgConfig& cfg) {
    check_square(m, "expm");
    if (m.rows() > cfg.expm_max_dim) throw NumericalError("expm: dimension exceeds configured maximum");
    double nrm = m.one_norm();
    if (nrm > cfg.expm_norm_limit) throw NumericalError("expm: norm exceeds overflow guard");
    int s = 0;
    if (nrm > 0.25) s = static_cast<int>(std::ceil(std::log2(nrm / 0.25)));
    double f = std::ldexp(1.0, -s);
    ComplexMatrix a = m;
    a *= Complex(f, 0);
    // Taylor series; after scaling ||a|| <= 0.25 so ~20 terms reach eps
    ComplexMatrix result = ComplexMatrix::identity(m.rows());
    ComplexMatrix term = ComplexMatrix::identity(m.rows());
    for (int k = 1; k <= 30; ++k) {
        term = term * a;
        term *= Complex(1.0 / k, 0);
        result += term;
        if (term.frobenius_norm() < 1e-18 * result.frobenius_norm()) break;
    }
    for (int k = 0; k < s; ++k) result = result * result;
    return result;
}

ComplexMatrix partial_trace(const ComplexMatrix& m, const std::vector<std::size_t>& factor_dims,
                            std::size_t keep) {
    check_square(m, "partial_trace");
    std::size_t prod = 1;
    for (auto d : factor_dims) prod *= d;
    if (prod != m.rows() || keep >= factor_dims.size())
        throw NumericalError("partial_trace: factor dims mismatch");
    const std::size_t dk = factor_dims[keep];
    // strides of each factor in the flattened index
    std::vector<std::size_t> stride(factor_dims.size(), 1);
    for (std::size_t f = factor_dims.size(); f-- > 1;)
        stride[f - 1] = stride[f] * factor_dims[f];
    std::size_t rest = prod / dk;
    ComplexMatrix out(dk, dk);
    // enumerate the traced multi-index
    std::vector<std::size_t> idx(factor_dims.size(), 0);
    for (std::size_t r = 0; r < rest; ++r) {
        std::size_t base = 0, tmp = r;
        for (std::size_t f = factor_dims.size(); f-- > 0;) {
            if (f == keep) continue;
            idx[f] = tmp % factor_dims[f];
            tmp /= factor_dims[f];
            base += idx[f] * stride[f];
        }
        for (std::size_t i = 0; i < dk; ++i)
            for (std::size_t j = 0; j < dk; ++j)
                out(i, j) += m(base + i * stride[keep], base + j * stride[keep]);
    }
    return out;
}

}  // namespace qjump
