#include <immintrin.h>

#include "cgpnas/kernels.hpp"

// Compiled with -mavx2 only (no -mfma): products and sums stay separately
// rounded to match the scalar reference.

namespace cgpnas::kernels::avx2 {

namespace {

inline double fold(__m256d acc) {
    const __m128d lo = _mm256_castpd256_pd128(acc);     // l0 l1
    const __m128d hi = _mm256_extractf128_pd(acc, 1);   // l2 l3
    const __m128d pair = _mm_add_pd(lo, hi);             // l0+l2, l1+l3
    const __m128d swapped = _mm_unpackhi_pd(pair, pair);
    return _mm_cvtsd_f64(_mm_add_sd(pair, swapped));
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    double r = fold(acc);
    for (; i < n; ++i) {
        r += a[i] * b[i];
    }
    return r;
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    }
    double r = fold(acc);
    for (; i < n; ++i) {
        r += x[i];
    }
    return r;
}

void axpy(double* y, double alpha, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
    }
    for (; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void add(double* y, const double* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) {
        y[i] += x[i];
    }
}

void scale(double* y, double alpha, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), va));
    }
    for (; i < n; ++i) {
        y[i] *= alpha;
    }
}

void mul_add(double* y, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) {
        y[i] += a[i] * b[i];
    }
}

} // namespace

extern const KernelTable table;
const KernelTable table = {dot, sum, axpy, add, scale, mul_add};

} // namespace cgpnas::kernels::avx2
