#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace pt {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

// Dense square complex matrix, row-major.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(std::size_t n) : n_(n), a_(n * n) {}
    ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix diagonal(const CVector& d);

    std::size_t dim() const { return n_; }
    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    cplx* data() { return a_.data(); }
    const cplx* data() const { return a_.data(); }

    ComplexMatrix adjoint() const;
    CVector column(std::size_t j) const;
    void set_column(std::size_t j, const CVector& v);

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(cplx s);
    // this += s * o
    void add_scaled(cplx s, const ComplexMatrix& o);

    double frobenius_norm() const;
    double max_abs() const;
    double norm1() const;  // max column sum
    bool all_finite() const;
    cplx trace() const;

private:
    std::size_t n_ = 0;
    std::vector<cplx> a_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(cplx s, ComplexMatrix a);
CVector operator*(const ComplexMatrix& a, const CVector& v);

// u v^dagger
ComplexMatrix outer(const CVector& u, const CVector& v);
cplx dotc(const CVector& u, const CVector& v);
double norm2(const CVector& v);

}  // namespace pt
