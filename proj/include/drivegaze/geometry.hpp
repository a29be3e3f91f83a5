#pragma once

// Projective mapping of gaze from the driver-view camera into the rooftop view:
// Hartley-normalized DLT, seeded RANSAC, point projection and the edge-push rule
// for gaze that lands outside the scene raster.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace drivegaze::geometry {

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct Correspondence {
    PixelPoint src;  // ETG
    PixelPoint dst;  // GAR
};

/// 3×3 projective map, row-major. Always stored normalized: m[2][2] = 1 when
/// |m[2][2]| > 1e−12, otherwise unit Frobenius norm.
class Homography {
public:
    using Matrix = std::array<double, 9>;

    Homography() : Homography(identity()) {}

    /// Normalizes and validates; throws DegenerateConfiguration when rank-deficient.
    static Homography from_matrix(const Matrix& m);
    static Homography identity() noexcept;
    static Homography translation(double tx, double ty) noexcept;

    const Matrix& matrix() const noexcept { return m_; }
    double operator()(int row, int col) const noexcept { return m_[static_cast<std::size_t>(row * 3 + col)]; }

    double determinant() const noexcept;
    /// Inverse via the adjugate.
    Homography inverse() const;

    /// (a * b)(p) = a(b(p))
    friend Homography operator*(const Homography& a, const Homography& b);

private:
    explicit Homography(const Matrix& m) noexcept : m_(m) {}

    Matrix m_;
};

struct RansacConfig {
    double inlier_threshold_px = 3.0;
    double confidence = 0.995;
    int max_iters = 2000;
    std::uint64_t seed = 0;
};

void validate(const RansacConfig& cfg);

/// Throws InsufficientPoints (< 4) or DegenerateConfiguration.
Homography estimate_homography_dlt(std::span<const Correspondence> corrs);

struct RansacResult {
    Homography homography;
    std::vector<bool> inliers;
    std::size_t inlier_count = 0;
    int iterations = 0;
};

/// Deterministic for a fixed seed and input order. Throws InsufficientPoints or NoModelFound.
RansacResult estimate_homography_ransac(std::span<const Correspondence> corrs, const RansacConfig& cfg);

/// Throws PointAtInfinity when the projective denominator vanishes.
PixelPoint project_point(const Homography& h, PixelPoint p);

/// RMS of the forward and backward transfer distances (px); +inf if either projection fails.
double symmetric_transfer_error(const Homography& h, const Homography& h_inv, const Correspondence& c) noexcept;

struct ClampResult {
    PixelPoint point;
    bool was_clamped = false;
};

/// Per-axis clamp into [0, width−1] × [0, height−1]: a point beyond the right edge
/// keeps its row, a point above the top keeps its column.
ClampResult clamp_to_frame(PixelPoint p, int width, int height);

// Correspondence CSV: src_x,src_y,dst_x,dst_y
std::vector<Correspondence> parse_correspondences(std::string_view text);
std::vector<Correspondence> read_correspondences(const std::filesystem::path& path);
std::string format_correspondences(std::span<const Correspondence> corrs);

// Homography file: one line, nine %.12g values, row-major.
std::string format_homography(const Homography& h);
Homography parse_homography(std::string_view text);
Homography read_homography(const std::filesystem::path& path);

}  // namespace drivegaze::geometry
