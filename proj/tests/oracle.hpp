#pragma once

#include <Eigen/Dense>
#include <random>

#include "pseudotherm/matrix.hpp"

// Independent reference implementations used only by the tests.
namespace oracle {

using EM = Eigen::MatrixXcd;

inline EM to_eigen(const pt::ComplexMatrix& m) {
    EM e(m.dim(), m.dim());
    for (std::size_t i = 0; i < m.dim(); ++i)
        for (std::size_t j = 0; j < m.dim(); ++j) e(i, j) = m(i, j);
    return e;
}

inline pt::ComplexMatrix from_eigen(const EM& e) {
    pt::ComplexMatrix m(e.rows());
    for (Eigen::Index i = 0; i < e.rows(); ++i)
        for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
    return m;
}

inline double max_diff(const pt::ComplexMatrix& a, const pt::ComplexMatrix& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

inline pt::ComplexMatrix random_matrix(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd;
    pt::ComplexMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = scale * pt::cplx(nd(rng), nd(rng));
    return m;
}

}  // namespace oracle
