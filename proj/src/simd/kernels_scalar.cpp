#include <algorithm>

#include "drivegaze/simd/kernels.hpp"

namespace drivegaze::simd {
namespace {

double sum(const double* x, std::size_t n)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i];
    }
    return acc;
}

double max(const double* x, std::size_t n)
{
    double best = n ? x[0] : 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        best = std::max(best, x[i]);
    }
    return best;
}

double centered_sumsq(const double* x, std::size_t n, double mean)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        acc += d * d;
    }
    return acc;
}

double centered_dot(const double* a, const double* b, std::size_t n, double ma, double mb)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += (a[i] - ma) * (b[i] - mb);
    }
    return acc;
}

double scaled_min_sum(const double* a, const double* b, std::size_t n, double sa, double sb)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += std::min(sa * a[i], sb * b[i]);
    }
    return acc;
}

void divide(double* x, std::size_t n, double d)
{
    for (std::size_t i = 0; i < n; ++i) {
        x[i] /= d;
    }
}

void correlate(const double* padded, const double* taps, std::size_t ntaps, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < ntaps; ++k) {
            acc += taps[k] * padded[i + k];
        }
        out[i] = acc;
    }
}

void axpy(double a, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += a * x[i];
    }
}

}  // namespace

const Kernels& scalar_kernels() noexcept
{
    static constexpr Kernels table{
        Isa::scalar, "scalar", &sum, &max, &centered_sumsq, &centered_dot, &scaled_min_sum, &divide, &correlate, &axpy,
    };
    return table;
}

}  // namespace drivegaze::simd
