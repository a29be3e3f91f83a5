#pragma once

// Saliency metrics: KLD (two implementation regimes), CC, NSS and SIM.

#include <string_view>

#include "drivegaze/raster.hpp"

namespace drivegaze::metrics {

enum class KldMode { stable, legacy_dreyeve };

std::string_view to_string(KldMode m) noexcept;
KldMode parse_kld_mode(std::string_view token);

namespace epsilon {
inline constexpr double matlab = 1.1920929e-7;
inline constexpr double numpy = 2.220446049250313e-16;
inline constexpr double small = 1e-4;
}  // namespace epsilon

/// Accepts "matlab", "numpy", "small" or a positive decimal literal.
double parse_epsilon(std::string_view token);

struct MetricConfig {
    KldMode kld_mode = KldMode::stable;
    double epsilon = epsilon::numpy;
};

void validate(const MetricConfig& cfg);

/// Values divided by their sum. Throws NegativeValue (position = pixel index),
/// NonPositiveMass, or InvalidValue for non-finite cells.
SaliencyMap to_distribution(const SaliencyMap& map);

/// stable: KL divergence between the ε-smoothed distributions r = N·G + ε and
/// s = N·P + ε (each renormalized), which is exactly 0 for identical inputs.
/// legacy_dreyeve: Σ G·ln(ε + G/(ε + P)), the variant that goes negative on
/// identical maps.
double kld(const SaliencyMap& gt, const SaliencyMap& pred, const MetricConfig& cfg = {});

/// Pearson correlation. Throws ZeroVariance.
double cc(const SaliencyMap& gt, const SaliencyMap& pred);

/// Mean z-score (population σ) of pred over fixated pixels. Throws NoFixations or ZeroVariance.
double nss(const FixationMap& fixations, const SaliencyMap& pred);

/// Histogram intersection of the two normalized maps.
double sim(const SaliencyMap& gt, const SaliencyMap& pred);

}  // namespace drivegaze::metrics
