#ifndef MACROQ_LINALG_HPP
#define MACROQ_LINALG_HPP

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace macroq {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

/// Compensated (Kahan) accumulator for complex sums whose terms span many
/// orders of magnitude.
class KahanSum {
  public:
    void add(cplx v) {
        cplx y = v - comp_;
        cplx t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    cplx value() const { return sum_; }

  private:
    cplx sum_{0.0, 0.0};
    cplx comp_{0.0, 0.0};
};

/// 2x2 complex matrix, row-major.
struct Mat2 {
    std::array<cplx, 4> a{};

    Mat2() = default;
    Mat2(cplx m00, cplx m01, cplx m10, cplx m11) : a{m00, m01, m10, m11} {}

    cplx& operator()(int r, int c) { return a[2 * r + c]; }
    cplx operator()(int r, int c) const { return a[2 * r + c]; }

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    Mat2 adjoint() const {
        return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])};
    }
    cplx trace() const { return a[0] + a[3]; }

    friend Mat2 operator*(const Mat2& x, const Mat2& y) {
        return {x.a[0] * y.a[0] + x.a[1] * y.a[2], x.a[0] * y.a[1] + x.a[1] * y.a[3],
                x.a[2] * y.a[0] + x.a[3] * y.a[2], x.a[2] * y.a[1] + x.a[3] * y.a[3]};
    }
    friend Mat2 operator+(const Mat2& x, const Mat2& y) {
        return {x.a[0] + y.a[0], x.a[1] + y.a[1], x.a[2] + y.a[2], x.a[3] + y.a[3]};
    }
    friend Mat2 operator-(const Mat2& x, const Mat2& y) {
        return {x.a[0] - y.a[0], x.a[1] - y.a[1], x.a[2] - y.a[2], x.a[3] - y.a[3]};
    }
    friend Mat2 operator*(cplx s, const Mat2& x) {
        return {s * x.a[0], s * x.a[1], s * x.a[2], s * x.a[3]};
    }

    double max_abs() const {
        double m = 0.0;
        for (int i = 0; i < 4; ++i) m = std::max(m, std::abs(a[i]));
        return m;
    }
    double max_abs_diff(const Mat2& other) const {
        double m = 0.0;
        for (int i = 0; i < 4; ++i) m = std::max(m, std::abs(a[i] - other.a[i]));
        return m;
    }
    bool is_hermitian(double tol) const { return max_abs_diff(adjoint()) <= tol; }
};

inline Mat2 pauli_x() { return {0.0, 1.0, 1.0, 0.0}; }
inline Mat2 pauli_y() { return {0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0}; }
inline Mat2 pauli_z() { return {1.0, 0.0, 0.0, -1.0}; }

/// A = cos(phi) sigma_x + sin(phi) sigma_y; the workhorse observable family.
inline Mat2 xy_observable(double phi) {
    return {0.0, std::polar(1.0, -phi), std::polar(1.0, phi), 0.0};
}

/// Dense complex matrix with value semantics. Sized for the small Fock
/// truncations and 2^N qubit blocks used here, not for large-scale work.
class CMatrix {
  public:
    CMatrix() = default;
    CMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(size_t(rows) * cols) {}

    static CMatrix identity(int n) {
        CMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    cplx& operator()(int r, int c) { return a_[size_t(r) * cols_ + c]; }
    cplx operator()(int r, int c) const { return a_[size_t(r) * cols_ + c]; }

    cplx trace() const {
        cplx t = 0.0;
        for (int i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
        return t;
    }

    CMatrix adjoint() const {
        CMatrix m(cols_, rows_);
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c) m(c, r) = std::conj((*this)(r, c));
        return m;
    }

    friend CMatrix operator*(const CMatrix& x, const CMatrix& y) {
        if (x.cols_ != y.rows_) throw std::invalid_argument("CMatrix: shape mismatch in product");
        CMatrix m(x.rows_, y.cols_);
        for (int r = 0; r < x.rows_; ++r)
            for (int k = 0; k < x.cols_; ++k) {
                cplx v = x(r, k);
                if (v == cplx(0.0, 0.0)) continue;
                for (int c = 0; c < y.cols_; ++c) m(r, c) += v * y(k, c);
            }
        return m;
    }
    friend CMatrix operator+(const CMatrix& x, const CMatrix& y) {
        if (x.rows_ != y.rows_ || x.cols_ != y.cols_)
            throw std::invalid_argument("CMatrix: shape mismatch in sum");
        CMatrix m(x.rows_, x.cols_);
        for (size_t i = 0; i < x.a_.size(); ++i) m.a_[i] = x.a_[i] + y.a_[i];
        return m;
    }
    friend CMatrix operator-(const CMatrix& x, const CMatrix& y) {
        if (x.rows_ != y.rows_ || x.cols_ != y.cols_)
            throw std::invalid_argument("CMatrix: shape mismatch in difference");
        CMatrix m(x.rows_, x.cols_);
        for (size_t i = 0; i < x.a_.size(); ++i) m.a_[i] = x.a_[i] - y.a_[i];
        return m;
    }
    friend CMatrix operator*(cplx s, const CMatrix& x) {
        CMatrix m(x.rows_, x.cols_);
        for (size_t i = 0; i < x.a_.size(); ++i) m.a_[i] = s * x.a_[i];
        return m;
    }

    double max_abs() const {
        double m = 0.0;
        for (const cplx& v : a_) m = std::max(m, std::abs(v));
        return m;
    }
    double max_abs_diff(const CMatrix& other) const {
        double m = 0.0;
        for (size_t i = 0; i < a_.size(); ++i) m = std::max(m, std::abs(a_[i] - other.a_[i]));
        return m;
    }
    bool is_hermitian(double tol) const {
        if (rows_ != cols_) return false;
        for (int r = 0; r < rows_; ++r)
            for (int c = r; c < cols_; ++c)
                if (std::abs((*this)(r, c) - std::conj((*this)(c, r))) > tol) return false;
        return true;
    }

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<cplx> a_;
};

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// returned ascending. Adequate for the small dimensions used in state
/// validation.
inline std::vector<double> hermitian_eigenvalues(CMatrix m, double tol = 1e-14) {
    if (m.rows() != m.cols()) throw std::invalid_argument("hermitian_eigenvalues: not square");
    const int n = m.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += std::norm(m(p, q));
        if (off < tol * tol) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                cplx apq = m(p, q);
                double r = std::abs(apq);
                if (r < 1e-300) continue;
                double app = std::real(m(p, p));
                double aqq = std::real(m(q, q));
                // U = [[c, -s e^{ia}], [s e^{-ia}, c]] with a = arg(apq)
                // zeroes (p,q) of U^dag M U when tan(2t) = 2r / (app - aqq)
                double theta = 0.5 * std::atan2(2.0 * r, app - aqq);
                cplx phase = apq / r;
                double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < n; ++k) {  // M <- M U
                    cplx mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp + s * std::conj(phase) * mkq;
                    m(k, q) = -s * phase * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {  // M <- U^dag M
                    cplx mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk + s * phase * mqk;
                    m(q, k) = -s * std::conj(phase) * mpk + c * mqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = std::real(m(i, i));
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace macroq

#endif
