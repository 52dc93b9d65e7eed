#pragma once

#include <complex>
#include <cstddef>

// Hot loops of the dense complex algebra. Every entry point has a portable
// scalar reference; an AVX2/FMA table is picked at runtime when the CPU has it.
namespace pt::kernels {

using cplx = std::complex<double>;

struct Table {
    const char* name;
    // c = a * b, all n x n row-major
    void (*matmul)(const cplx* a, const cplx* b, cplx* c, std::size_t n);
    // y += alpha * x
    void (*axpy)(cplx alpha, const cplx* x, cplx* y, std::size_t len);
    // sum_i conj(x_i) y_i
    cplx (*dotc)(const cplx* x, const cplx* y, std::size_t len);
};

const Table& scalar();
// nullptr when the build target or the running CPU lacks AVX2+FMA
const Table* avx2();
// PSEUDOTHERM_KERNELS=scalar forces the reference path
const Table& active();

}  // namespace pt::kernels
