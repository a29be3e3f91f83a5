#pragma once

// Straightforward re-derivations used to check the library. Nothing here calls
// into drivegaze beyond plain data types; keep it that way.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

using Mat3 = std::array<double, 9>;

inline std::array<double, 2> project(const Mat3& h, double x, double y)
{
    const double w = h[6] * x + h[7] * y + h[8];
    return {(h[0] * x + h[1] * y + h[2]) / w, (h[3] * x + h[4] * y + h[5]) / w};
}

/// Bilinear interpolation written as an explicit four-corner weighted sum.
/// `field(x, y)` returns the sample at an integer pixel.
template <typename F>
double bilinear(F&& field, int w, int h, double x, double y)
{
    const int x0 = std::min(static_cast<int>(std::floor(x)), w - 1);
    const int y0 = std::min(static_cast<int>(std::floor(y)), h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    return (1 - fx) * (1 - fy) * field(x0, y0) + fx * (1 - fy) * field(x1, y0) + (1 - fx) * fy * field(x0, y1) +
           fx * fy * field(x1, y1);
}

/// Brute-force 2-D Gaussian splat: every output pixel sums the contributions of
/// every point whose Chebyshev distance is within `radius`, then peak-normalizes.
inline std::vector<double> gaussian_splat(int w, int h, const std::vector<std::array<int, 2>>& pts, double sigma,
                                          int radius)
{
    std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (const auto& p : pts) {
                const int dx = x - p[0];
                const int dy = y - p[1];
                if (std::abs(dx) <= radius && std::abs(dy) <= radius) {
                    acc += std::exp(-(dx * dx) / (2 * sigma * sigma)) * std::exp(-(dy * dy) / (2 * sigma * sigma));
                }
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    const double peak = *std::max_element(out.begin(), out.end());
    if (peak > 0) {
        for (auto& v : out) {
            v /= peak;
        }
    }
    return out;
}

// ---- saliency metrics, long-hand with long double accumulators ----

inline double kld_stable(const std::vector<double>& pred, const std::vector<double>& gt, double eps)
{
    const long double n = static_cast<long double>(gt.size());
    long double sp = 0, sg = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        sp += pred[i];
        sg += gt[i];
    }
    long double acc = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const long double r = n * gt[i] / sg + eps;
        const long double s = n * pred[i] / sp + eps;
        acc += r * std::log(r / s);
    }
    return static_cast<double>(acc / (n * (1 + eps)));
}

inline double kld_legacy(const std::vector<double>& pred, const std::vector<double>& gt, double eps)
{
    long double sp = 0, sg = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        sp += pred[i];
        sg += gt[i];
    }
    long double acc = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const long double g = gt[i] / sg;
        const long double p = pred[i] / sp;
        if (g > 0) {
            acc += g * std::log(eps + g / (eps + p));
        }
    }
    return static_cast<double>(acc);
}

inline double cc(const std::vector<double>& a, const std::vector<double>& b)
{
    const long double n = static_cast<long double>(a.size());
    long double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    long double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return static_cast<double>(sab / std::sqrt(saa * sbb));
}

inline double nss(const std::vector<double>& pred, const std::vector<std::uint8_t>& fix)
{
    const long double n = static_cast<long double>(pred.size());
    long double m = 0;
    for (double v : pred) {
        m += v;
    }
    m /= n;
    long double var = 0;
    for (double v : pred) {
        var += (v - m) * (v - m);
    }
    const long double sd = std::sqrt(var / n);
    long double acc = 0;
    long double count = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (fix[i]) {
            acc += (pred[i] - m) / sd;
            count += 1;
        }
    }
    return static_cast<double>(acc / count);
}

inline double sim(const std::vector<double>& a, const std::vector<double>& b)
{
    long double sa = 0, sb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
    }
    long double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += std::min<long double>(a[i] / sa, b[i] / sb);
    }
    return static_cast<double>(acc);
}

/// Great-circle distance on a 6371 km sphere via the spherical law of cosines
/// (a different formula from the haversine used in the library).
inline double great_circle_m(double lat1, double lon1, double lat2, double lon2)
{
    constexpr double kDeg = 3.14159265358979323846 / 180.0;
    const long double c = std::sin(lat1 * kDeg) * std::sin(lat2 * kDeg) +
                          std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) * std::cos((lon2 - lon1) * kDeg);
    return static_cast<double>(6371000.0L * std::acos(std::clamp<long double>(c, -1, 1)));
}

}  // namespace oracle
