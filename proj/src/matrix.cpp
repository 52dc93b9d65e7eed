#include "pseudotherm/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "pseudotherm/errors.hpp"
#include "pseudotherm/kernels.hpp"

namespace pt {

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows)
    : n_(rows.size()), a_(rows.size() * rows.size()) {
    std::size_t i = 0;
    for (const auto& r : rows) {
        if (r.size() != n_) throw InvalidArgument("matrix literal is not square");
        std::copy(r.begin(), r.end(), a_.begin() + i * n_);
        ++i;
    }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(const CVector& d) {
    ComplexMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix r(n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
}

CVector ComplexMatrix::column(std::size_t j) const {
    CVector v(n_);
    for (std::size_t i = 0; i < n_; ++i) v[i] = (*this)(i, j);
    return v;
}

void ComplexMatrix::set_column(std::size_t j, const CVector& v) {
    for (std::size_t i = 0; i < n_; ++i) (*this)(i, j) = v[i];
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    add_scaled(1.0, o);
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    add_scaled(-1.0, o);
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
    for (auto& x : a_) x *= s;
    return *this;
}

void ComplexMatrix::add_scaled(cplx s, const ComplexMatrix& o) {
    if (o.n_ != n_) throw InvalidArgument("dimension mismatch");
    kernels::active().axpy(s, o.a_.data(), a_.data(), a_.size());
}

double ComplexMatrix::frobenius_norm() const {
    double s = 0;
    for (const auto& x : a_) s += std::norm(x);
    return std::sqrt(s);
}

double ComplexMatrix::max_abs() const {
    double m = 0;
    for (const auto& x : a_) m = std::max(m, std::abs(x));
    return m;
}

double ComplexMatrix::norm1() const {
    double m = 0;
    for (std::size_t j = 0; j < n_; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < n_; ++i) s += std::abs((*this)(i, j));
        m = std::max(m, s);
    }
    return m;
}

bool ComplexMatrix::all_finite() const {
    return std::all_of(a_.begin(), a_.end(),
                       [](const cplx& x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
}

cplx ComplexMatrix::trace() const {
    cplx s{};
    for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
    return s;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.dim() != b.dim()) throw InvalidArgument("dimension mismatch in product");
    ComplexMatrix c(a.dim());
    kernels::active().matmul(a.data(), b.data(), c.data(), a.dim());
    return c;
}

ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }

CVector operator*(const ComplexMatrix& a, const CVector& v) {
    const std::size_t n = a.dim();
    if (v.size() != n) throw InvalidArgument("dimension mismatch in matrix-vector product");
    CVector r(n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx s{};
        for (std::size_t j = 0; j < n; ++j) s += a(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

ComplexMatrix outer(const CVector& u, const CVector& v) {
    ComplexMatrix m(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = u[i] * std::conj(v[j]);
    return m;
}

cplx dotc(const CVector& u, const CVector& v) {
    if (u.size() != v.size()) throw InvalidArgument("dimension mismatch in inner product");
    return kernels::active().dotc(u.data(), v.data(), u.size());
}

double norm2(const CVector& v) {
    double s = 0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

}  // namespace pt
