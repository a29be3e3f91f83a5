#pragma once

// Data-parallel inner loops shared by the blur and the saliency metrics.
//
// Every kernel has a portable scalar reference implementation and, on x86-64, an
// AVX2/FMA variant compiled into its own translation unit. The active table is
// chosen once at first use from CPUID; DRIVEGAZE_SIMD=scalar in the environment
// (or select_isa()) forces the reference path. The two tables agree to rounding
// error, not bit-for-bit: results are reproducible for a fixed ISA only.

#include <cstddef>
#include <string_view>

namespace drivegaze::simd {

enum class Isa { scalar, avx2 };

struct Kernels {
    Isa isa;
    const char* name;

    double (*sum)(const double* x, std::size_t n);
    double (*max)(const double* x, std::size_t n);
    /// Σ (x_i − mean)²
    double (*centered_sumsq)(const double* x, std::size_t n, double mean);
    /// Σ (a_i − ma)(b_i − mb)
    double (*centered_dot)(const double* a, const double* b, std::size_t n, double ma, double mb);
    /// Σ min(sa·a_i, sb·b_i)
    double (*scaled_min_sum)(const double* a, const double* b, std::size_t n, double sa, double sb);
    /// x_i /= d (exact IEEE division, so both tables agree bit-for-bit)
    void (*divide)(double* x, std::size_t n, double d);
    /// out[i] = Σ_k taps[k] · padded[i + k], for i in [0, n). `padded` holds n + ntaps − 1 values.
    void (*correlate)(const double* padded, const double* taps, std::size_t ntaps, double* out, std::size_t n);
    /// y_i += a · x_i
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
};

const Kernels& scalar_kernels() noexcept;

/// nullptr when the library was built without AVX2 support or the CPU lacks AVX2+FMA.
const Kernels* avx2_kernels() noexcept;

const Kernels& active() noexcept;

/// Forces a kernel table; returns false (and leaves the selection unchanged) if unavailable.
bool select_isa(Isa isa) noexcept;

std::string_view isa_name(Isa isa) noexcept;

}  // namespace drivegaze::simd
