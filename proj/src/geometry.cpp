#include "drivegaze/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "drivegaze/error.hpp"
#include "drivegaze/io_util.hpp"

namespace drivegaze::geometry {
namespace {

constexpr double kTiny = 1e-12;
constexpr double kCollinearArea = 1e-6;

Homography::Matrix normalized(Homography::Matrix m)
{
    if (std::abs(m[8]) > kTiny) {
        const double inv = 1.0 / m[8];
        for (double& v : m) {
            v *= inv;
        }
        m[8] = 1.0;
    } else {
        double norm = 0.0;
        for (double v : m) {
            norm += v * v;
        }
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (double& v : m) {
                v /= norm;
            }
        }
    }
    return m;
}

double det3(const Homography::Matrix& m)
{
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

/// Similarity taking the centroid to the origin and the mean radius to √2.
struct Normalizer {
    double scale = 1.0;
    double cx = 0.0;
    double cy = 0.0;

    PixelPoint apply(PixelPoint p) const { return {scale * (p.x - cx), scale * (p.y - cy)}; }
};

Normalizer make_normalizer(std::span<const PixelPoint> pts)
{
    Normalizer n;
    for (const PixelPoint& p : pts) {
        n.cx += p.x;
        n.cy += p.y;
    }
    n.cx /= static_cast<double>(pts.size());
    n.cy /= static_cast<double>(pts.size());
    double mean_r = 0.0;
    for (const PixelPoint& p : pts) {
        mean_r += std::hypot(p.x - n.cx, p.y - n.cy);
    }
    mean_r /= static_cast<double>(pts.size());
    if (!(mean_r > kTiny)) {
        throw Error(Errc::DegenerateConfiguration, "coincident points");
    }
    n.scale = std::sqrt(2.0) / mean_r;
    return n;
}

double triangle_area(PixelPoint a, PixelPoint b, PixelPoint c)
{
    return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

bool has_collinear_triple(std::span<const PixelPoint> pts)
{
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            for (std::size_t k = j + 1; k < pts.size(); ++k) {
                if (triangle_area(pts[i], pts[j], pts[k]) < kCollinearArea) {
                    return true;
                }
            }
        }
    }
    return false;
}

/// Whole set on (nearly) one line: smaller principal variance vanishes.
bool all_collinear(std::span<const PixelPoint> pts)
{
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (const PixelPoint& p : pts) {
        sxx += p.x * p.x;
        syy += p.y * p.y;
        sxy += p.x * p.y;
    }
    const double n = static_cast<double>(pts.size());
    sxx /= n;
    syy /= n;
    sxy /= n;
    const double tr = sxx + syy;
    const double det = sxx * syy - sxy * sxy;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double lmin = tr / 2.0 - disc;
    return lmin < kCollinearArea * kCollinearArea;
}

Homography::Matrix to_array(const Eigen::Matrix3d& m)
{
    Homography::Matrix out{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            out[static_cast<std::size_t>(r * 3 + c)] = m(r, c);
        }
    }
    return out;
}

Eigen::Matrix3d to_eigen(const Homography& h)
{
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            m(r, c) = h(r, c);
        }
    }
    return m;
}

/// Unbiased index in [0, n) from a 64-bit generator; platform independent, unlike
/// std::uniform_int_distribution.
std::size_t draw_index(std::mt19937_64& rng, std::size_t n)
{
    const std::uint64_t bound = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r = rng();
    while (r >= limit) {
        r = rng();
    }
    return static_cast<std::size_t>(r % bound);
}

std::size_t count_inliers(const Homography& h, std::span<const Correspondence> corrs, double threshold,
                          std::vector<bool>& mask)
{
    const Homography inv = h.inverse();
    mask.assign(corrs.size(), false);
    std::size_t count = 0;
    for (std::size_t i = 0; i < corrs.size(); ++i) {
        if (symmetric_transfer_error(h, inv, corrs[i]) < threshold) {
            mask[i] = true;
            ++count;
        }
    }
    return count;
}

}  // namespace

Homography Homography::from_matrix(const Matrix& m)
{
    for (double v : m) {
        if (!std::isfinite(v)) {
            throw Error(Errc::DegenerateConfiguration, "non-finite homography entry");
        }
    }
    const Matrix n = normalized(m);
    if (!(std::abs(det3(n)) > kTiny)) {
        throw Error(Errc::DegenerateConfiguration, "homography is rank deficient");
    }
    return Homography(n);
}

Homography Homography::identity() noexcept { return Homography(Matrix{1, 0, 0, 0, 1, 0, 0, 0, 1}); }

Homography Homography::translation(double tx, double ty) noexcept
{
    return Homography(Matrix{1, 0, tx, 0, 1, ty, 0, 0, 1});
}

double Homography::determinant() const noexcept { return det3(m_); }

Homography Homography::inverse() const
{
    const Matrix& m = m_;
    const Matrix adj{
        m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8], m[1] * m[5] - m[2] * m[4],
        m[5] * m[6] - m[3] * m[8], m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
        m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7], m[0] * m[4] - m[1] * m[3],
    };
    // The adjugate equals det · m⁻¹; the scale is irrelevant for a projective map.
    return from_matrix(adj);
}

Homography operator*(const Homography& a, const Homography& b)
{
    Homography::Matrix out{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) {
                acc += a(r, k) * b(k, c);
            }
            out[static_cast<std::size_t>(r * 3 + c)] = acc;
        }
    }
    return Homography::from_matrix(out);
}

void validate(const RansacConfig& cfg)
{
    if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) {
        throw Error(Errc::InvalidConfig, "RANSAC confidence must lie in (0, 1)");
    }
    if (!(cfg.inlier_threshold_px > 0.0)) {
        throw Error(Errc::InvalidConfig, "RANSAC inlier threshold must be positive");
    }
    if (cfg.max_iters <= 0) {
        throw Error(Errc::InvalidConfig, "RANSAC max_iters must be positive");
    }
}

Homography estimate_homography_dlt(std::span<const Correspondence> corrs)
{
    if (corrs.size() < 4) {
        throw Error(Errc::InsufficientPoints, "need at least 4 correspondences, got " + std::to_string(corrs.size()));
    }
    std::vector<PixelPoint> src(corrs.size());
    std::vector<PixelPoint> dst(corrs.size());
    for (std::size_t i = 0; i < corrs.size(); ++i) {
        if (!std::isfinite(corrs[i].src.x) || !std::isfinite(corrs[i].src.y) || !std::isfinite(corrs[i].dst.x) ||
            !std::isfinite(corrs[i].dst.y)) {
            throw Error(Errc::InvalidValue, "non-finite correspondence", static_cast<std::int64_t>(i));
        }
        src[i] = corrs[i].src;
        dst[i] = corrs[i].dst;
    }
    const Normalizer ns = make_normalizer(src);
    const Normalizer nd = make_normalizer(dst);
    for (std::size_t i = 0; i < corrs.size(); ++i) {
        src[i] = ns.apply(src[i]);
        dst[i] = nd.apply(dst[i]);
    }
    if (corrs.size() == 4 ? (has_collinear_triple(src) || has_collinear_triple(dst))
                          : (all_collinear(src) || all_collinear(dst))) {
        throw Error(Errc::DegenerateConfiguration, "collinear points");
    }

    // Normal matrix AᵀA of the 2n×9 DLT system, accumulated row pair by row pair.
    Eigen::Matrix<double, 9, 9> ata = Eigen::Matrix<double, 9, 9>::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double x = src[i].x;
        const double y = src[i].y;
        const double u = dst[i].x;
        const double v = dst[i].y;
        Eigen::Matrix<double, 9, 1> r1;
        Eigen::Matrix<double, 9, 1> r2;
        r1 << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        r2 << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
        ata.selfadjointView<Eigen::Lower>().rankUpdate(r1);
        ata.selfadjointView<Eigen::Lower>().rankUpdate(r2);
    }
    // Only the lower triangle of `ata` is populated, which is all the solver reads.
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> solver(ata);
    if (solver.info() != Eigen::Success) {
        throw Error(Errc::DegenerateConfiguration, "eigen decomposition failed");
    }
    const auto& evals = solver.eigenvalues();
    // A second (near-)null direction means the solution is not unique.
    if (evals(1) <= kTiny * std::max(1.0, evals(8))) {
        throw Error(Errc::DegenerateConfiguration, "DLT system has a multi-dimensional null space");
    }
    const Eigen::Matrix<double, 9, 1> h = solver.eigenvectors().col(0);

    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    Eigen::Matrix3d ts;
    ts << ns.scale, 0, -ns.scale * ns.cx, 0, ns.scale, -ns.scale * ns.cy, 0, 0, 1;
    Eigen::Matrix3d td_inv;
    td_inv << 1.0 / nd.scale, 0, nd.cx, 0, 1.0 / nd.scale, nd.cy, 0, 0, 1;
    return Homography::from_matrix(to_array(td_inv * hn * ts));
}

RansacResult estimate_homography_ransac(std::span<const Correspondence> corrs, const RansacConfig& cfg)
{
    validate(cfg);
    const std::size_t n = corrs.size();
    if (n < 4) {
        throw Error(Errc::InsufficientPoints, "need at least 4 correspondences, got " + std::to_string(n));
    }

    std::mt19937_64 rng(cfg.seed);
    RansacResult best;
    std::vector<bool> mask;
    long long needed = cfg.max_iters;
    int iter = 0;
    std::array<Correspondence, 4> sample{};
    while (iter < cfg.max_iters && iter < needed) {
        ++iter;
        std::array<std::size_t, 4> idx{};
        for (std::size_t k = 0; k < 4; ++k) {
            bool fresh = false;
            while (!fresh) {
                idx[k] = draw_index(rng, n);
                fresh = std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx[k]) ==
                        idx.begin() + static_cast<std::ptrdiff_t>(k);
            }
            sample[k] = corrs[idx[k]];
        }
        Homography h;
        try {
            h = estimate_homography_dlt(sample);
        } catch (const Error&) {
            continue;
        }
        const std::size_t count = count_inliers(h, corrs, cfg.inlier_threshold_px, mask);
        if (count > best.inlier_count) {
            best.homography = h;
            best.inliers = mask;
            best.inlier_count = count;
            const double w = static_cast<double>(count) / static_cast<double>(n);
            const double miss = 1.0 - std::pow(w, 4.0);
            if (miss <= 0.0) {
                needed = iter;
            } else {
                const double want = std::ceil(std::log(1.0 - cfg.confidence) / std::log(miss));
                needed = static_cast<long long>(std::min<double>(want, cfg.max_iters));
            }
        }
    }
    best.iterations = iter;
    if (best.inlier_count < 4) {
        throw Error(Errc::NoModelFound, "best model has " + std::to_string(best.inlier_count) + " inliers");
    }

    std::vector<Correspondence> inlier_set;
    inlier_set.reserve(best.inlier_count);
    for (std::size_t i = 0; i < n; ++i) {
        if (best.inliers[i]) {
            inlier_set.push_back(corrs[i]);
        }
    }
    try {
        const Homography refit = estimate_homography_dlt(inlier_set);
        const std::size_t count = count_inliers(refit, corrs, cfg.inlier_threshold_px, mask);
        if (count >= best.inlier_count) {
            best.homography = refit;
            best.inliers = mask;
            best.inlier_count = count;
        }
    } catch (const Error&) {
        // keep the minimal-sample model
    }
    return best;
}

PixelPoint project_point(const Homography& h, PixelPoint p)
{
    const double w = h(2, 0) * p.x + h(2, 1) * p.y + h(2, 2);
    if (!(std::abs(w) > kTiny)) {
        throw Error(Errc::PointAtInfinity, "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
    }
    return {(h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2)) / w, (h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2)) / w};
}

double symmetric_transfer_error(const Homography& h, const Homography& h_inv, const Correspondence& c) noexcept
{
    const auto project = [](const Homography& m, PixelPoint p, PixelPoint& out) {
        const double w = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
        if (!(std::abs(w) > kTiny)) {
            return false;
        }
        out = {(m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2)) / w, (m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)) / w};
        return true;
    };
    PixelPoint fwd;
    PixelPoint bwd;
    if (!project(h, c.src, fwd) || !project(h_inv, c.dst, bwd)) {
        return std::numeric_limits<double>::infinity();
    }
    const double d1 = (fwd.x - c.dst.x) * (fwd.x - c.dst.x) + (fwd.y - c.dst.y) * (fwd.y - c.dst.y);
    const double d2 = (bwd.x - c.src.x) * (bwd.x - c.src.x) + (bwd.y - c.src.y) * (bwd.y - c.src.y);
    return std::sqrt(0.5 * (d1 + d2));
}

ClampResult clamp_to_frame(PixelPoint p, int width, int height)
{
    if (width <= 0 || height <= 0) {
        throw Error(Errc::InvalidValue, "frame dimensions must be positive");
    }
    const PixelPoint q{std::clamp(p.x, 0.0, static_cast<double>(width - 1)),
                       std::clamp(p.y, 0.0, static_cast<double>(height - 1))};
    return {q, q.x != p.x || q.y != p.y};
}

std::vector<Correspondence> parse_correspondences(std::string_view text)
{
    io::LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || line != "src_x,src_y,dst_x,dst_y") {
        throw Error(Errc::BadHeader, "expected 'src_x,src_y,dst_x,dst_y'", 1);
    }
    std::vector<Correspondence> out;
    while (reader.next(line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = io::split_fields(line);
        std::array<double, 4> v{};
        bool ok = fields.size() == 4;
        for (std::size_t i = 0; ok && i < 4; ++i) {
            const auto d = io::to_double(fields[i]);
            ok = d.has_value() && std::isfinite(*d);
            if (ok) {
                v[i] = *d;
            }
        }
        if (!ok) {
            throw Error(Errc::MalformedRow, "expected four finite numbers", reader.line_number());
        }
        out.push_back({{v[0], v[1]}, {v[2], v[3]}});
    }
    return out;
}

std::vector<Correspondence> read_correspondences(const std::filesystem::path& path)
{
    return parse_correspondences(io::read_file(path));
}

std::string format_correspondences(std::span<const Correspondence> corrs)
{
    std::string out = "src_x,src_y,dst_x,dst_y\n";
    char buf[160];
    for (const Correspondence& c : corrs) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", c.src.x, c.src.y, c.dst.x, c.dst.y);
        out += buf;
    }
    return out;
}

std::string format_homography(const Homography& h)
{
    std::string out;
    char buf[40];
    for (std::size_t i = 0; i < 9; ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", h.matrix()[i]);
        if (i > 0) {
            out += ' ';
        }
        out += buf;
    }
    out += '\n';
    return out;
}

Homography parse_homography(std::string_view text)
{
    std::istringstream in{std::string(text)};
    Homography::Matrix m{};
    for (double& v : m) {
        if (!(in >> v)) {
            throw Error(Errc::MalformedRow, "homography file must hold nine numbers", 1);
        }
    }
    std::string extra;
    if (in >> extra) {
        throw Error(Errc::MalformedRow, "trailing data after nine homography values", 1);
    }
    return Homography::from_matrix(m);
}

Homography read_homography(const std::filesystem::path& path) { return parse_homography(io::read_file(path)); }

}  // namespace drivegaze::geometry
