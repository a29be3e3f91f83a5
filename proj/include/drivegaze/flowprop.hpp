#pragma once

// Dense optical flow I/O and the tracing of fixation locations through it.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "drivegaze/geometry.hpp"
#include "drivegaze/raster.hpp"

namespace drivegaze::flowprop {

using geometry::PixelPoint;

/// Per-pixel displacement in pixels, u and v interleaved row-major as in Middlebury .flo.
class FlowField {
public:
    FlowField() = default;
    FlowField(int width, int height, float u = 0.0f, float v = 0.0f);
    FlowField(int width, int height, std::vector<float> interleaved_uv);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    float u(int x, int y) const noexcept { return uv_[offset(x, y)]; }
    float v(int x, int y) const noexcept { return uv_[offset(x, y) + 1]; }
    void set(int x, int y, float u, float v) noexcept
    {
        uv_[offset(x, y)] = u;
        uv_[offset(x, y) + 1] = v;
    }

    std::span<const float> interleaved() const noexcept { return uv_; }

    friend bool operator==(const FlowField&, const FlowField&) = default;

private:
    std::size_t offset(int x, int y) const noexcept
    {
        return 2 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x));
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> uv_;
};

inline constexpr float kFloMagic = 202021.25f;

/// Throws BadMagic, TruncatedFile, or InvalidValue (non-finite entries / trailing bytes).
FlowField decode_flo(std::span<const std::byte> bytes);
std::vector<std::byte> encode_flo(const FlowField& flow);
FlowField read_flo(const std::filesystem::path& path);
void write_flo(const std::filesystem::path& path, const FlowField& flow);

struct Displacement {
    double du = 0.0;
    double dv = 0.0;
};

/// Bilinear interpolation. Throws OutOfRaster unless 0 ≤ x ≤ w−1 and 0 ≤ y ≤ h−1.
Displacement sample_flow(const FlowField& flow, PixelPoint p);

/// Source of per-step flow between consecutive GAR frames. Implementations must be
/// safe to query concurrently.
class FlowProvider {
public:
    virtual ~FlowProvider() = default;
    /// Flow from frame k to k+1, or nullptr if unavailable.
    virtual std::shared_ptr<const FlowField> forward(std::int64_t k) const = 0;
    /// Flow from frame k to k−1, or nullptr if unavailable.
    virtual std::shared_ptr<const FlowField> backward(std::int64_t k) const = 0;
};

class MemoryFlowProvider final : public FlowProvider {
public:
    void set_forward(std::int64_t k, FlowField f);
    void set_backward(std::int64_t k, FlowField f);

    std::shared_ptr<const FlowField> forward(std::int64_t k) const override;
    std::shared_ptr<const FlowField> backward(std::int64_t k) const override;

private:
    std::map<std::int64_t, std::shared_ptr<const FlowField>> fwd_;
    std::map<std::int64_t, std::shared_ptr<const FlowField>> bwd_;
};

/// Lazily loads flow_fwd_%06d.flo / flow_bwd_%06d.flo from a directory and caches them.
class DirectoryFlowProvider final : public FlowProvider {
public:
    explicit DirectoryFlowProvider(std::filesystem::path dir);

    std::shared_ptr<const FlowField> forward(std::int64_t k) const override;
    std::shared_ptr<const FlowField> backward(std::int64_t k) const override;

    static std::string forward_name(std::int64_t k);
    static std::string backward_name(std::int64_t k);

private:
    std::shared_ptr<const FlowField> load(std::int64_t k, bool forward) const;

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<std::int64_t, bool>, std::shared_ptr<const FlowField>> cache_;
};

struct TraceResult {
    PixelPoint point;
    /// Some intermediate position left the raster and was clamped back onto its border.
    bool exited = false;
    /// Backward steps that had to use the negated forward flow.
    int fallback_steps = 0;
};

/// Iterates p ← p + flow(p) one frame at a time from `source_frame` to `key_frame`:
/// forward flow for past sources, backward flow for future ones. Throws MissingFlow
/// when a step has no usable flow and OutOfRange when the frames are more than
/// `max_steps` apart.
TraceResult trace_to_key(PixelPoint p, std::int64_t source_frame, std::int64_t key_frame, const FlowProvider& flows,
                         int max_steps = 12);

/// Exhaustive SAD block matching with integer displacements in [−radius, radius]²;
/// a test-fixture stand-in for a learned flow estimator.
FlowField block_match_flow(const GrayFrame& a, const GrayFrame& b, int block = 8, int radius = 4);

/// Fits a frame-to-frame homography to a flow field by RANSAC over a regular grid of
/// flow vectors.
geometry::Homography homography_from_flow(const FlowField& flow, int stride, const geometry::RansacConfig& cfg);

}  // namespace drivegaze::flowprop
