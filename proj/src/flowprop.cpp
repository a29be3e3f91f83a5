#include "drivegaze/flowprop.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>

#include "drivegaze/error.hpp"
#include "drivegaze/ingest.hpp"
#include "drivegaze/io_util.hpp"

namespace drivegaze::flowprop {
namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

template <typename T>
T load_le(const std::byte* p) noexcept
{
    std::uint32_t raw = 0;
    std::memcpy(&raw, p, 4);
    if constexpr (std::endian::native == std::endian::big) {
        raw = __builtin_bswap32(raw);
    }
    return std::bit_cast<T>(raw);
}

template <typename T>
void store_le(std::byte* p, T value) noexcept
{
    auto raw = std::bit_cast<std::uint32_t>(value);
    if constexpr (std::endian::native == std::endian::big) {
        raw = __builtin_bswap32(raw);
    }
    std::memcpy(p, &raw, 4);
}

bool inside(const FlowField& f, PixelPoint p) noexcept
{
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= f.width() - 1 && p.y <= f.height() - 1;
}

}  // namespace

FlowField::FlowField(int width, int height, float u, float v)
    : width_(width), height_(height)
{
    if (width <= 0 || height <= 0) {
        throw Error(Errc::DimensionMismatch, "flow dimensions must be positive");
    }
    uv_.resize(2 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (std::size_t i = 0; i < uv_.size(); i += 2) {
        uv_[i] = u;
        uv_[i + 1] = v;
    }
}

FlowField::FlowField(int width, int height, std::vector<float> interleaved_uv)
    : width_(width), height_(height), uv_(std::move(interleaved_uv))
{
    if (width <= 0 || height <= 0 ||
        uv_.size() != 2 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(Errc::DimensionMismatch, "flow buffer does not match its dimensions");
    }
}

FlowField decode_flo(std::span<const std::byte> bytes)
{
    if (bytes.size() < 4) {
        throw Error(Errc::TruncatedFile, "missing .flo magic");
    }
    if (load_le<float>(bytes.data()) != kFloMagic) {
        throw Error(Errc::BadMagic, "not a Middlebury .flo file");
    }
    if (bytes.size() < 12) {
        throw Error(Errc::TruncatedFile, "missing .flo dimensions");
    }
    const auto width = load_le<std::int32_t>(bytes.data() + 4);
    const auto height = load_le<std::int32_t>(bytes.data() + 8);
    if (width <= 0 || height <= 0 || width > (1 << 16) || height > (1 << 16)) {
        throw Error(Errc::InvalidValue, "implausible .flo dimensions " + std::to_string(width) + "x" +
                                            std::to_string(height));
    }
    const std::size_t count = 2 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    const std::size_t expected = 12 + 4 * count;
    if (bytes.size() < expected) {
        throw Error(Errc::TruncatedFile, "expected " + std::to_string(expected) + " bytes, got " +
                                             std::to_string(bytes.size()));
    }
    if (bytes.size() > expected) {
        throw Error(Errc::InvalidValue, "trailing bytes after flow payload");
    }
    std::vector<float> uv(count);
    for (std::size_t i = 0; i < count; ++i) {
        uv[i] = load_le<float>(bytes.data() + 12 + 4 * i);
        if (!std::isfinite(uv[i])) {
            throw Error(Errc::InvalidValue, "non-finite flow value", static_cast<std::int64_t>(i / 2));
        }
    }
    return FlowField(width, height, std::move(uv));
}

std::vector<std::byte> encode_flo(const FlowField& flow)
{
    const auto uv = flow.interleaved();
    std::vector<std::byte> out(12 + 4 * uv.size());
    store_le(out.data(), kFloMagic);
    store_le(out.data() + 4, static_cast<std::int32_t>(flow.width()));
    store_le(out.data() + 8, static_cast<std::int32_t>(flow.height()));
    for (std::size_t i = 0; i < uv.size(); ++i) {
        store_le(out.data() + 12 + 4 * i, uv[i]);
    }
    return out;
}

FlowField read_flo(const std::filesystem::path& path)
{
    const std::string raw = io::read_file(path);
    return decode_flo(std::as_bytes(std::span<const char>(raw.data(), raw.size())));
}

void write_flo(const std::filesystem::path& path, const FlowField& flow)
{
    const auto bytes = encode_flo(flow);
    io::write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Displacement sample_flow(const FlowField& flow, PixelPoint p)
{
    if (!inside(flow, p)) {
        throw Error(Errc::OutOfRaster, "flow sample at (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
    }
    const int x0 = static_cast<int>(std::floor(p.x));
    const int y0 = static_cast<int>(std::floor(p.y));
    const int x1 = std::min(x0 + 1, flow.width() - 1);
    const int y1 = std::min(y0 + 1, flow.height() - 1);
    const double fx = p.x - x0;
    const double fy = p.y - y0;
    const double w00 = (1 - fx) * (1 - fy);
    const double w10 = fx * (1 - fy);
    const double w01 = (1 - fx) * fy;
    const double w11 = fx * fy;
    return {w00 * flow.u(x0, y0) + w10 * flow.u(x1, y0) + w01 * flow.u(x0, y1) + w11 * flow.u(x1, y1),
            w00 * flow.v(x0, y0) + w10 * flow.v(x1, y0) + w01 * flow.v(x0, y1) + w11 * flow.v(x1, y1)};
}

void MemoryFlowProvider::set_forward(std::int64_t k, FlowField f)
{
    fwd_[k] = std::make_shared<const FlowField>(std::move(f));
}

void MemoryFlowProvider::set_backward(std::int64_t k, FlowField f)
{
    bwd_[k] = std::make_shared<const FlowField>(std::move(f));
}

std::shared_ptr<const FlowField> MemoryFlowProvider::forward(std::int64_t k) const
{
    const auto it = fwd_.find(k);
    return it == fwd_.end() ? nullptr : it->second;
}

std::shared_ptr<const FlowField> MemoryFlowProvider::backward(std::int64_t k) const
{
    const auto it = bwd_.find(k);
    return it == bwd_.end() ? nullptr : it->second;
}

DirectoryFlowProvider::DirectoryFlowProvider(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string DirectoryFlowProvider::forward_name(std::int64_t k) { return ingest::frame_name(k, "flow_fwd_", ".flo"); }

std::string DirectoryFlowProvider::backward_name(std::int64_t k) { return ingest::frame_name(k, "flow_bwd_", ".flo"); }

std::shared_ptr<const FlowField> DirectoryFlowProvider::forward(std::int64_t k) const { return load(k, true); }

std::shared_ptr<const FlowField> DirectoryFlowProvider::backward(std::int64_t k) const { return load(k, false); }

std::shared_ptr<const FlowField> DirectoryFlowProvider::load(std::int64_t k, bool forward) const
{
    const auto key = std::pair(k, forward);
    std::lock_guard lock(mutex_);
    if (const auto it = cache_.find(key); it != cache_.end()) {
        return it->second;
    }
    const auto path = dir_ / (forward ? forward_name(k) : backward_name(k));
    std::shared_ptr<const FlowField> flow;
    if (k >= 0 && std::filesystem::exists(path)) {
        flow = std::make_shared<const FlowField>(read_flo(path));
    }
    cache_.emplace(key, flow);
    return flow;
}

TraceResult trace_to_key(PixelPoint p, std::int64_t source_frame, std::int64_t key_frame, const FlowProvider& flows,
                         int max_steps)
{
    if (std::llabs(source_frame - key_frame) > max_steps) {
        throw Error(Errc::OutOfRange, "source frame " + std::to_string(source_frame) + " is more than " +
                                          std::to_string(max_steps) + " frames from key " + std::to_string(key_frame));
    }
    TraceResult result{p, false, 0};
    std::int64_t frame = source_frame;
    while (frame != key_frame) {
        Displacement d;
        std::shared_ptr<const FlowField> flow;
        if (frame < key_frame) {
            flow = flows.forward(frame);
            if (!flow) {
                throw Error(Errc::MissingFlow, "forward " + std::to_string(frame) + "->" + std::to_string(frame + 1));
            }
            d = sample_flow(*flow, result.point);
            ++frame;
        } else {
            flow = flows.backward(frame);
            if (flow) {
                d = sample_flow(*flow, result.point);
            } else {
                flow = flows.forward(frame - 1);
                if (!flow) {
                    throw Error(Errc::MissingFlow,
                                "backward " + std::to_string(frame) + "->" + std::to_string(frame - 1));
                }
                const Displacement f = sample_flow(*flow, result.point);
                d = {-f.du, -f.dv};
                ++result.fallback_steps;
            }
            --frame;
        }
        result.point = {result.point.x + d.du, result.point.y + d.dv};
        const auto clamped = geometry::clamp_to_frame(result.point, flow->width(), flow->height());
        if (clamped.was_clamped) {
            result.point = clamped.point;
            result.exited = true;
        }
    }
    return result;
}

FlowField block_match_flow(const GrayFrame& a, const GrayFrame& b, int block, int radius)
{
    require_same_shape(a, b, "block_match_flow");
    if (block <= 0 || radius < 0) {
        throw Error(Errc::InvalidValue, "block size must be positive and radius non-negative");
    }
    const int w = a.width();
    const int h = a.height();
    FlowField flow(w, h);
    const auto sample_b = [&](int x, int y) {
        return static_cast<int>(b.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)));
    };
    for (int by = 0; by < h; by += block) {
        for (int bx = 0; bx < w; bx += block) {
            const int ex = std::min(bx + block, w);
            const int ey = std::min(by + block, h);
            long best_sad = std::numeric_limits<long>::max();
            int best_du = 0;
            int best_dv = 0;
            for (int du = -radius; du <= radius; ++du) {
                for (int dv = -radius; dv <= radius; ++dv) {
                    long sad = 0;
                    for (int y = by; y < ey; ++y) {
                        for (int x = bx; x < ex; ++x) {
                            sad += std::abs(static_cast<int>(a.at(x, y)) - sample_b(x + du, y + dv));
                        }
                    }
                    const int mag = du * du + dv * dv;
                    const int best_mag = best_du * best_du + best_dv * best_dv;
                    const bool better = sad < best_sad ||
                                        (sad == best_sad && (mag < best_mag ||
                                                             (mag == best_mag && std::pair(du, dv) <
                                                                                     std::pair(best_du, best_dv))));
                    if (better) {
                        best_sad = sad;
                        best_du = du;
                        best_dv = dv;
                    }
                }
            }
            for (int y = by; y < ey; ++y) {
                for (int x = bx; x < ex; ++x) {
                    flow.set(x, y, static_cast<float>(best_du), static_cast<float>(best_dv));
                }
            }
        }
    }
    return flow;
}

geometry::Homography homography_from_flow(const FlowField& flow, int stride, const geometry::RansacConfig& cfg)
{
    if (stride <= 0) {
        throw Error(Errc::InvalidValue, "grid stride must be positive");
    }
    std::vector<geometry::Correspondence> corrs;
    for (int y = stride / 2; y < flow.height(); y += stride) {
        for (int x = stride / 2; x < flow.width(); x += stride) {
            corrs.push_back({{static_cast<double>(x), static_cast<double>(y)},
                             {x + static_cast<double>(flow.u(x, y)), y + static_cast<double>(flow.v(x, y))}});
        }
    }
    return geometry::estimate_homography_ransac(corrs, cfg).homography;
}

}  // namespace drivegaze::flowprop
