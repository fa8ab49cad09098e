// SPDX-License-Identifier: Apache-2.0

#include "stir/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stir {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw DimensionMismatch(msg);
}

void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
    }
}

} // namespace

Vector::Vector(std::vector<double> data) : data_(std::move(data)) {
    if (data_.empty()) throw std::invalid_argument("Vector: length must be >= 1");
    check_finite(data_, "Vector");
}

Vector Vector::zeros(std::size_t n) {
    Vector v;
    v.data_.assign(n, 0.0);
    return v;
}

Vector Vector::ones(std::size_t n) {
    Vector v;
    v.data_.assign(n, 1.0);
    return v;
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows_ * cols_ != data_.size())
        throw std::invalid_argument("DenseMatrix: rows*cols != data length");
    check_finite(data_, "DenseMatrix");
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

SparseCsr::SparseCsr(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                     std::vector<std::size_t> col_idx, std::vector<double> vals)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
      vals_(std::move(vals)) {
    if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != vals_.size() ||
        col_idx_.size() != vals_.size())
        throw std::invalid_argument("SparseCsr: inconsistent structure");
    for (std::size_t i = 0; i < rows_; ++i) {
        if (row_ptr_[i] > row_ptr_[i + 1]) throw std::invalid_argument("SparseCsr: row_ptr not monotone");
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            if (col_idx_[p] >= cols_) throw std::invalid_argument("SparseCsr: column index out of range");
            if (p > row_ptr_[i] && col_idx_[p] <= col_idx_[p - 1])
                throw std::invalid_argument("SparseCsr: column indices not strictly increasing");
        }
    }
    check_finite(vals_, "SparseCsr");
}

SparseCsr SparseCsr::from_triplets(std::size_t rows, std::size_t cols,
                                   const std::vector<std::size_t>& is,
                                   const std::vector<std::size_t>& js,
                                   const std::vector<double>& vs) {
    if (is.size() != js.size() || is.size() != vs.size())
        throw std::invalid_argument("from_triplets: length mismatch");
    std::vector<std::size_t> order(is.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (is[a] != is[b]) return is[a] < is[b];
        return js[a] < js[b];
    });
    std::vector<std::size_t> rp(rows + 1, 0), ci;
    std::vector<double> vv;
    std::size_t last_row = static_cast<std::size_t>(-1);
    for (std::size_t t : order) {
        if (is[t] >= rows || js[t] >= cols)
            throw std::invalid_argument("from_triplets: index out of range");
        const bool dup = !ci.empty() && last_row == is[t] && ci.back() == js[t];
        if (dup) {
            vv.back() += vs[t];
        } else {
            ci.push_back(js[t]);
            vv.push_back(vs[t]);
            last_row = is[t];
        }
        rp[is[t] + 1] = ci.size();
    }
    for (std::size_t i = 1; i <= rows; ++i) rp[i] = std::max(rp[i], rp[i - 1]);
    return SparseCsr(rows, cols, std::move(rp), std::move(ci), std::move(vv));
}

DenseMatrix SparseCsr::to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(i, col_idx_[p]) = vals_[p];
    return d;
}

Vector matvec(const DenseMatrix& a, const Vector& x) {
    require(a.cols() == x.size(), "matvec: A.cols != x.len");
    Vector y = Vector::zeros(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        const double* row = a.data().data() + i * a.cols();
        for (std::size_t j = 0; j < a.cols(); ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

Vector matvec(const SparseCsr& a, const Vector& x) {
    require(a.cols() == x.size(), "matvec: A.cols != x.len");
    Vector y = Vector::zeros(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p)
            acc += a.vals()[p] * x[a.col_idx()[p]];
        y[i] = acc;
    }
    return y;
}

Vector matvec_transpose(const DenseMatrix& a, const Vector& x) {
    require(a.rows() == x.size(), "matvec_transpose: A.rows != x.len");
    Vector y = Vector::zeros(a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * x[i];
    return y;
}

double dot(const Vector& x, const Vector& y) {
    require(x.size() == y.size(), "dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

double norm2(const Vector& x) { return std::sqrt(dot(x, x)); }

double norm_inf(const Vector& x) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i]));
    return m;
}

void axpy(double alpha, const Vector& x, Vector& y) {
    require(x.size() == y.size(), "axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector scaled(const Vector& x, double alpha) {
    Vector y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= alpha;
    return y;
}

Vector vadd(const Vector& x, const Vector& y) {
    require(x.size() == y.size(), "vadd: length mismatch");
    Vector z = x;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += y[i];
    return z;
}

Vector vsub(const Vector& x, const Vector& y) {
    require(x.size() == y.size(), "vsub: length mismatch");
    Vector z = x;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] -= y[i];
    return z;
}

double norm_inf(const DenseMatrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += std::abs(a(i, j));
        m = std::max(m, s);
    }
    return m;
}

double norm_inf(const SparseCsr& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) s += std::abs(a.vals()[p]);
        m = std::max(m, s);
    }
    return m;
}

DenseLu dense_lu(const DenseMatrix& a) {
    require(a.rows() == a.cols(), "dense_lu: matrix must be square");
    const std::size_t n = a.rows();
    DenseLu fac{a, std::vector<std::size_t>(n)};
    std::iota(fac.piv.begin(), fac.piv.end(), 0);
    DenseMatrix& lu = fac.lu;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
        if (std::abs(lu(p, k)) < 1e-300) throw SingularMatrix("dense_lu: pivot below 1e-300");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(p, j), lu(k, j));
            std::swap(fac.piv[p], fac.piv[k]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            lu(i, k) /= lu(k, k);
            const double lik = lu(i, k);
            for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= lik * lu(k, j);
        }
    }
    return fac;
}

Vector lu_apply(const DenseLu& fac, const Vector& b) {
    const std::size_t n = fac.lu.rows();
    require(b.size() == n, "lu_apply: length mismatch");
    Vector x = Vector::zeros(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[fac.piv[i]];
    for (std::size_t i = 1; i < n; ++i) {
        double acc = x[i];
        for (std::size_t j = 0; j < i; ++j) acc -= fac.lu(i, j) * x[j];
        x[i] = acc;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double acc = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j) acc -= fac.lu(ii, j) * x[j];
        x[ii] = acc / fac.lu(ii, ii);
    }
    return x;
}

Vector dense_solve(const DenseMatrix& a, const Vector& b) { return lu_apply(dense_lu(a), b); }

namespace {

// Plain Cholesky, returns false on a nonpositive or tiny diagonal.
bool cholesky(const DenseMatrix& g, DenseMatrix& l) {
    const std::size_t n = g.rows();
    l = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = g(i, j);
            for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            if (i == j) {
                if (acc <= 0.0 || !std::isfinite(acc)) return false;
                l(i, i) = std::sqrt(acc);
            } else {
                l(i, j) = acc / l(j, j);
            }
        }
    }
    return true;
}

} // namespace

void symmetric_eig(const DenseMatrix& a, std::vector<double>& eigvals, DenseMatrix& eigvecs) {
    require(a.rows() == a.cols(), "symmetric_eig: matrix must be square");
    const std::size_t n = a.rows();
    DenseMatrix d = a;
    eigvecs = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) eigvecs(i, i) = 1.0;
    // cyclic Jacobi sweeps
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += d(p, q) * d(p, q);
        if (off < 1e-30 * std::max(1.0, norm_inf(a) * norm_inf(a))) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (d(p, q) == 0.0) continue;
                const double theta = (d(q, q) - d(p, p)) / (2.0 * d(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double dkp = d(k, p), dkq = d(k, q);
                    d(k, p) = c * dkp - s * dkq;
                    d(k, q) = s * dkp + c * dkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double dpk = d(p, k), dqk = d(q, k);
                    d(p, k) = c * dpk - s * dqk;
                    d(q, k) = s * dpk + c * dqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = eigvecs(k, p), vkq = eigvecs(k, q);
                    eigvecs(k, p) = c * vkp - s * vkq;
                    eigvecs(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    eigvals.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigvals[i] = d(i, i);
    // sort ascending, permuting eigenvector columns alongside
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return eigvals[x] < eigvals[y]; });
    std::vector<double> ev(n);
    DenseMatrix vv(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        ev[j] = eigvals[order[j]];
        for (std::size_t i = 0; i < n; ++i) vv(i, j) = eigvecs(i, order[j]);
    }
    eigvals = std::move(ev);
    eigvecs = std::move(vv);
}

Vector spd_solve_small(const DenseMatrix& g, const Vector& rhs) {
    require(g.rows() == g.cols(), "spd_solve_small: matrix must be square");
    require(g.rows() == rhs.size(), "spd_solve_small: rhs length mismatch");
    if (g.rows() > 64) throw std::invalid_argument("spd_solve_small: k must be <= 64");
    const std::size_t n = g.rows();
    DenseMatrix l;
    if (cholesky(g, l)) {
        Vector y = Vector::zeros(n);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = rhs[i];
            for (std::size_t j = 0; j < i; ++j) acc -= l(i, j) * y[j];
            y[i] = acc / l(i, i);
        }
        Vector x = Vector::zeros(n);
        for (std::size_t ii = n; ii-- > 0;) {
            double acc = y[ii];
            for (std::size_t j = ii + 1; j < n; ++j) acc -= l(j, ii) * x[j];
            x[ii] = acc / l(ii, ii);
        }
        return x;
    }
    // pseudoinverse fallback via symmetric eigendecomposition
    std::vector<double> ev;
    DenseMatrix v;
    symmetric_eig(g, ev, v);
    double lmax = 0.0;
    for (double e : ev) lmax = std::max(lmax, std::abs(e));
    const double cutoff = 1e-12 * lmax;
    Vector x = Vector::zeros(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(ev[j]) <= cutoff) continue;
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += v(i, j) * rhs[i];
        const double coef = proj / ev[j];
        for (std::size_t i = 0; i < n; ++i) x[i] += coef * v(i, j);
    }
    return x;
}

double sigma_max_estimate(const DenseMatrix& a) {
    const std::size_t n = a.cols();
    Vector v = Vector::zeros(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
    double s = norm2(v);
    for (std::size_t i = 0; i < n; ++i) v[i] /= s;
    double sigma = 0.0;
    for (int it = 0; it < 200; ++it) {
        Vector av = matvec(a, v);
        Vector w = matvec_transpose(a, av);
        const double wn = norm2(w);
        if (wn < 1e-300) return 0.0;
        const double next = std::sqrt(wn);
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
        if (it > 4 && std::abs(next - sigma) <= 1e-6 * next) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    return sigma;
}

double cond_estimate(const DenseMatrix& a) {
    require(a.rows() == a.cols(), "cond_estimate: matrix must be square");
    if (a.rows() > 4096) throw std::invalid_argument("cond_estimate: n must be <= 4096");
    const double smax = sigma_max_estimate(a);
    if (smax < 1e-300) throw SingularMatrix("cond_estimate: sigma_max underflow");
    // sigma_min via inverse power iteration on A^T A, i.e. repeated solves
    DenseLu fac;
    try {
        fac = dense_lu(a);
    } catch (const SingularMatrix&) {
        throw SingularMatrix("cond_estimate: sigma_min underflow (singular factor)");
    }
    const DenseMatrix at = a.transposed();
    DenseLu fac_t = dense_lu(at);
    const std::size_t n = a.rows();
    Vector v = Vector::zeros(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * static_cast<double>((i * 3) % 5);
    double nv = norm2(v);
    for (std::size_t i = 0; i < n; ++i) v[i] /= nv;
    double inv_sigma = 0.0;
    for (int it = 0; it < 200; ++it) {
        // w = A^{-T} A^{-1} v grows like sigma_min^{-2}
        Vector w = lu_apply(fac_t, lu_apply(fac, v));
        const double wn = norm2(w);
        if (!std::isfinite(wn) || wn < 1e-300)
            throw SingularMatrix("cond_estimate: sigma_min underflow");
        const double next = std::sqrt(wn);
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
        if (it > 4 && std::abs(next - inv_sigma) <= 1e-6 * next) {
            inv_sigma = next;
            break;
        }
        inv_sigma = next;
    }
    return smax * inv_sigma;
}

} // namespace stir
