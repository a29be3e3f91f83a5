#include "drivegaze/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drivegaze/error.hpp"
#include "drivegaze/io_util.hpp"
#include "drivegaze/simd/kernels.hpp"

namespace drivegaze::metrics {

std::string_view to_string(KldMode m) noexcept
{
    return m == KldMode::stable ? "stable" : "legacy_dreyeve";
}

KldMode parse_kld_mode(std::string_view token)
{
    if (token == "stable") {
        return KldMode::stable;
    }
    if (token == "legacy_dreyeve" || token == "legacy") {
        return KldMode::legacy_dreyeve;
    }
    throw Error(Errc::UnknownEnum, "unknown KLD mode '" + std::string(token) + "'");
}

double parse_epsilon(std::string_view token)
{
    if (token == "matlab") {
        return epsilon::matlab;
    }
    if (token == "numpy") {
        return epsilon::numpy;
    }
    if (token == "small") {
        return epsilon::small;
    }
    const auto v = io::to_double(token);
    if (!v || !(*v > 0.0) || !std::isfinite(*v)) {
        throw Error(Errc::InvalidConfig, "epsilon must be a preset name or a positive number, got '" +
                                             std::string(token) + "'");
    }
    return *v;
}

void validate(const MetricConfig& cfg)
{
    if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) {
        throw Error(Errc::InvalidConfig, "epsilon must be positive and finite");
    }
}

namespace {

/// False for a constant map: the summed mean of equal values carries rounding error,
/// so the centred sum of squares is compared with the mean's own resolution.
bool varies(double centered_sumsq, double mean, std::size_t n)
{
    const double sd = std::sqrt(centered_sumsq / static_cast<double>(n));
    return sd > 1e-12 * std::abs(mean);
}

/// Sum of a map that must be a valid (unnormalized) distribution.
double checked_mass(const SaliencyMap& map)
{
    const auto v = map.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw Error(Errc::InvalidValue, "non-finite saliency value", static_cast<std::int64_t>(i));
        }
        if (v[i] < 0.0) {
            throw Error(Errc::NegativeValue, "negative saliency value", static_cast<std::int64_t>(i));
        }
    }
    const double total = simd::active().sum(v.data(), v.size());
    if (!(total > 0.0)) {
        throw Error(Errc::NonPositiveMass, "saliency map has no mass");
    }
    return total;
}

void check_finite(const SaliencyMap& map)
{
    const auto v = map.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw Error(Errc::InvalidValue, "non-finite saliency value", static_cast<std::int64_t>(i));
        }
    }
}

}  // namespace

SaliencyMap to_distribution(const SaliencyMap& map)
{
    const double total = checked_mass(map);
    SaliencyMap out = map;
    simd::active().divide(out.values().data(), out.size(), total);
    return out;
}

double kld(const SaliencyMap& gt, const SaliencyMap& pred, const MetricConfig& cfg)
{
    validate(cfg);
    require_same_shape(gt, pred, "kld");
    const double sg = checked_mass(gt);
    const double sp = checked_mass(pred);
    const auto g = gt.values();
    const auto p = pred.values();
    const double eps = cfg.epsilon;
    double total = 0.0;
    if (cfg.kld_mode == KldMode::stable) {
        const auto n = static_cast<double>(g.size());
        const double ag = n / sg;
        const double ap = n / sp;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double r = ag * g[i] + eps;
            const double s = ap * p[i] + eps;
            total += r * std::log(r / s);
        }
        return total / (n * (1.0 + eps));
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double gi = g[i] / sg;
        if (gi == 0.0) {
            continue;
        }
        total += gi * std::log(eps + gi / (eps + p[i] / sp));
    }
    return total;
}

double cc(const SaliencyMap& gt, const SaliencyMap& pred)
{
    require_same_shape(gt, pred, "cc");
    check_finite(gt);
    check_finite(pred);
    const auto& k = simd::active();
    const auto a = gt.values();
    const auto b = pred.values();
    const std::size_t n = a.size();
    if (n == 0) {
        throw Error(Errc::ZeroVariance, "empty raster");
    }
    const double ma = k.sum(a.data(), n) / static_cast<double>(n);
    const double mb = k.sum(b.data(), n) / static_cast<double>(n);
    const double va = k.centered_sumsq(a.data(), n, ma);
    const double vb = k.centered_sumsq(b.data(), n, mb);
    if (!varies(va, ma, n) || !varies(vb, mb, n)) {
        throw Error(Errc::ZeroVariance, "cc needs both maps to vary");
    }
    const double r = k.centered_dot(a.data(), b.data(), n, ma, mb) / std::sqrt(va * vb);
    return std::clamp(r, -1.0, 1.0);
}

double nss(const FixationMap& fixations, const SaliencyMap& pred)
{
    require_same_shape(fixations, pred, "nss");
    check_finite(pred);
    const auto& k = simd::active();
    const auto p = pred.values();
    const auto f = fixations.values();
    const std::size_t n = p.size();
    std::size_t count = 0;
    double fixated = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (f[i] != 0) {
            fixated += p[i];
            ++count;
        }
    }
    if (count == 0) {
        throw Error(Errc::NoFixations, "fixation map is empty");
    }
    const double mean = k.sum(p.data(), n) / static_cast<double>(n);
    const double ss = k.centered_sumsq(p.data(), n, mean);
    if (!varies(ss, mean, n)) {
        throw Error(Errc::ZeroVariance, "prediction is constant");
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    return (fixated / static_cast<double>(count) - mean) / sd;
}

double sim(const SaliencyMap& gt, const SaliencyMap& pred)
{
    require_same_shape(gt, pred, "sim");
    const double sg = checked_mass(gt);
    const double sp = checked_mass(pred);
    const auto a = gt.values();
    const auto b = pred.values();
    const double s = simd::active().scaled_min_sum(a.data(), b.data(), a.size(), 1.0 / sg, 1.0 / sp);
    return std::clamp(s, 0.0, 1.0);
}

}  // namespace drivegaze::metrics
