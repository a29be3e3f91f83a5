// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <immintrin.h>

#include <algorithm>

#include "drivegaze/simd/kernels.hpp"

namespace drivegaze::simd {
namespace {

inline double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d m = _mm_max_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

double sum(const double* x, std::size_t n)
{
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
        a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
    }
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) {
        acc += x[i];
    }
    return acc;
}

double max(const double* x, std::size_t n)
{
    if (n < 4) {
        double best = n ? x[0] : 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            best = std::max(best, x[i]);
        }
        return best;
    }
    __m256d m = _mm256_loadu_pd(x);
    std::size_t i = 4;
    for (; i + 4 <= n; i += 4) {
        m = _mm256_max_pd(m, _mm256_loadu_pd(x + i));
    }
    double best = hmax(m);
    for (; i < n; ++i) {
        best = std::max(best, x[i]);
    }
    return best;
}

double centered_sumsq(const double* x, std::size_t n, double mean)
{
    const __m256d vm = _mm256_set1_pd(mean);
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), vm);
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), vm);
        a0 = _mm256_fmadd_pd(d0, d0, a0);
        a1 = _mm256_fmadd_pd(d1, d1, a1);
    }
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) {
        const double d = x[i] - mean;
        acc += d * d;
    }
    return acc;
}

double centered_dot(const double* a, const double* b, std::size_t n, double ma, double mb)
{
    const __m256d vma = _mm256_set1_pd(ma);
    const __m256d vmb = _mm256_set1_pd(mb);
    __m256d acc4 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d da = _mm256_sub_pd(_mm256_loadu_pd(a + i), vma);
        const __m256d db = _mm256_sub_pd(_mm256_loadu_pd(b + i), vmb);
        acc4 = _mm256_fmadd_pd(da, db, acc4);
    }
    double acc = hsum(acc4);
    for (; i < n; ++i) {
        acc += (a[i] - ma) * (b[i] - mb);
    }
    return acc;
}

double scaled_min_sum(const double* a, const double* b, std::size_t n, double sa, double sb)
{
    const __m256d vsa = _mm256_set1_pd(sa);
    const __m256d vsb = _mm256_set1_pd(sb);
    __m256d acc4 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_mul_pd(_mm256_loadu_pd(a + i), vsa);
        const __m256d vb = _mm256_mul_pd(_mm256_loadu_pd(b + i), vsb);
        acc4 = _mm256_add_pd(acc4, _mm256_min_pd(va, vb));
    }
    double acc = hsum(acc4);
    for (; i < n; ++i) {
        acc += std::min(sa * a[i], sb * b[i]);
    }
    return acc;
}

void divide(double* x, std::size_t n, double d)
{
    const __m256d vd = _mm256_set1_pd(d);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_div_pd(_mm256_loadu_pd(x + i), vd));
    }
    for (; i < n; ++i) {
        x[i] /= d;
    }
}

void correlate(const double* padded, const double* taps, std::size_t ntaps, double* out, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        for (std::size_t k = 0; k < ntaps; ++k) {
            const __m256d t = _mm256_broadcast_sd(taps + k);
            acc0 = _mm256_fmadd_pd(t, _mm256_loadu_pd(padded + i + k), acc0);
            acc1 = _mm256_fmadd_pd(t, _mm256_loadu_pd(padded + i + k + 4), acc1);
        }
        _mm256_storeu_pd(out + i, acc0);
        _mm256_storeu_pd(out + i + 4, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t k = 0; k < ntaps; ++k) {
            acc = _mm256_fmadd_pd(_mm256_broadcast_sd(taps + k), _mm256_loadu_pd(padded + i + k), acc);
        }
        _mm256_storeu_pd(out + i, acc);
    }
    for (; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < ntaps; ++k) {
            acc += taps[k] * padded[i + k];
        }
        out[i] = acc;
    }
}

void axpy(double a, const double* x, double* y, std::size_t n)
{
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) {
        y[i] += a * x[i];
    }
}

}  // namespace

const Kernels& avx2_kernel_table() noexcept
{
    static constexpr Kernels table{
        Isa::avx2, "avx2", &sum, &max, &centered_sumsq, &centered_dot, &scaled_min_sum, &divide, &correlate, &axpy,
    };
    return table;
}

}  // namespace drivegaze::simd
