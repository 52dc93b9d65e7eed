#include "pseudotherm/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#include <immintrin.h>
#define PT_HAVE_AVX2_TU 1
#endif

namespace pt::kernels {

#ifdef PT_HAVE_AVX2_TU
namespace {

// (ar + i ai) * (b0, b1) packed as re,im,re,im
#define PT_AVX2 __attribute__((target("avx2,fma")))

PT_AVX2 inline __m256d cmul_bcast(__m256d ar, __m256d ai, __m256d b) {
    __m256d bswap = _mm256_permute_pd(b, 0x5);
    return _mm256_fmaddsub_pd(ar, b, _mm256_mul_pd(ai, bswap));
}

PT_AVX2 void matmul_avx2(const cplx* a, const cplx* b, cplx* c, std::size_t n) {
    std::fill(c, c + n * n, cplx{});
    const std::size_t n2 = n & ~std::size_t(1);
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = reinterpret_cast<double*>(c + i * n);
        for (std::size_t k = 0; k < n; ++k) {
            const cplx aik = a[i * n + k];
            if (aik == cplx{}) continue;
            const __m256d ar = _mm256_set1_pd(aik.real());
            const __m256d ai = _mm256_set1_pd(aik.imag());
            const double* brow = reinterpret_cast<const double*>(b + k * n);
            std::size_t j = 0;
            for (; j < n2; j += 2) {
                __m256d bv = _mm256_loadu_pd(brow + 2 * j);
                __m256d cv = _mm256_loadu_pd(crow + 2 * j);
                _mm256_storeu_pd(crow + 2 * j, _mm256_add_pd(cv, cmul_bcast(ar, ai, bv)));
            }
            if (j < n) c[i * n + j] += aik * b[k * n + j];
        }
    }
}

PT_AVX2 void axpy_avx2(cplx alpha, const cplx* x, cplx* y, std::size_t len) {
    const __m256d ar = _mm256_set1_pd(alpha.real());
    const __m256d ai = _mm256_set1_pd(alpha.imag());
    const double* xd = reinterpret_cast<const double*>(x);
    double* yd = reinterpret_cast<double*>(y);
    std::size_t i = 0;
    for (; i + 2 <= len; i += 2) {
        __m256d xv = _mm256_loadu_pd(xd + 2 * i);
        __m256d yv = _mm256_loadu_pd(yd + 2 * i);
        _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(yv, cmul_bcast(ar, ai, xv)));
    }
    if (i < len) y[i] += alpha * x[i];
}

PT_AVX2 cplx dotc_avx2(const cplx* x, const cplx* y, std::size_t len) {
    // conj(x) y: re = xr yr + xi yi, im = xr yi - xi yr
    __m256d acc_re = _mm256_setzero_pd();
    __m256d acc_im = _mm256_setzero_pd();
    const double* xd = reinterpret_cast<const double*>(x);
    const double* yd = reinterpret_cast<const double*>(y);
    std::size_t i = 0;
    for (; i + 2 <= len; i += 2) {
        __m256d xv = _mm256_loadu_pd(xd + 2 * i);
        __m256d yv = _mm256_loadu_pd(yd + 2 * i);
        acc_re = _mm256_fmadd_pd(xv, yv, acc_re);
        acc_im = _mm256_fmadd_pd(xv, _mm256_permute_pd(yv, 0x5), acc_im);
    }
    alignas(32) double r[4], m[4];
    _mm256_store_pd(r, acc_re);
    _mm256_store_pd(m, acc_im);
    // acc_im lanes hold xr*yi (even) and xi*yr (odd)
    cplx s(r[0] + r[1] + r[2] + r[3], (m[0] - m[1]) + (m[2] - m[3]));
    if (i < len) s += std::conj(x[i]) * y[i];
    return s;
}

#undef PT_AVX2

}  // namespace

const Table* avx2() {
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    static const Table t{"avx2", matmul_avx2, axpy_avx2, dotc_avx2};
    return ok ? &t : nullptr;
}

#else

const Table* avx2() { return nullptr; }

#endif

const Table& active() {
    static const Table* chosen = [] {
        const char* env = std::getenv("PSEUDOTHERM_KERNELS");
        if (env && std::strcmp(env, "scalar") == 0) return &scalar();
        if (const Table* t = avx2()) return t;
        return &scalar();
    }();
    return *chosen;
}

}  // namespace pt::kernels
