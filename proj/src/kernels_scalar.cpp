#include "pseudotherm/kernels.hpp"

#include <algorithm>

namespace pt::kernels {
namespace {

void matmul_ref(const cplx* a, const cplx* b, cplx* c, std::size_t n) {
    std::fill(c, c + n * n, cplx{});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const cplx aik = a[i * n + k];
            if (aik == cplx{}) continue;
            const cplx* brow = b + k * n;
            cplx* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
}

void axpy_ref(cplx alpha, const cplx* x, cplx* y, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) y[i] += alpha * x[i];
}

cplx dotc_ref(const cplx* x, const cplx* y, std::size_t len) {
    cplx s{};
    for (std::size_t i = 0; i < len; ++i) s += std::conj(x[i]) * y[i];
    return s;
}

}  // namespace

const Table& scalar() {
    static const Table t{"scalar", matmul_ref, axpy_ref, dotc_ref};
    return t;
}

}  // namespace pt::kernels
