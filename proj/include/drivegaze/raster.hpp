#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drivegaze/error.hpp"

namespace drivegaze {

/// Dense row-major single-channel image.
template <typename T>
class Raster {
public:
    using value_type = T;

    Raster() = default;
    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(checked_size(width, height), fill)
    {
    }
    Raster(int width, int height, std::vector<T> values) : width_(width), height_(height), data_(std::move(values))
    {
        if (data_.size() != checked_size(width, height)) {
            throw Error(Errc::DimensionMismatch, "raster buffer does not match " + std::to_string(width) + "x" +
                                                     std::to_string(height));
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& at(int x, int y) noexcept { return data_[index(x, y)]; }
    const T& at(int x, int y) const noexcept { return data_[index(x, y)]; }

    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::span<T> row(int y) noexcept { return std::span<T>(data_).subspan(index(0, y), width_); }
    std::span<const T> row(int y) const noexcept { return std::span<const T>(data_).subspan(index(0, y), width_); }

    template <typename U>
    bool same_shape(const Raster<U>& other) const noexcept
    {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    static std::size_t checked_size(int width, int height)
    {
        if (width < 0 || height < 0) {
            throw Error(Errc::DimensionMismatch, "negative raster dimension");
        }
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    std::size_t index(int x, int y) const noexcept
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Continuous ground-truth or predicted saliency. Stored maps are peak-normalized to 1.
using SaliencyMap = Raster<double>;

/// Binary raster of fixated pixels (0 or 1).
using FixationMap = Raster<std::uint8_t>;

/// 8-bit grayscale video frame.
using GrayFrame = Raster<std::uint8_t>;

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, const char* what)
{
    if (a.width() != b.width() || a.height() != b.height()) {
        throw Error(Errc::DimensionMismatch, std::string(what) + ": " + std::to_string(a.width()) + "x" +
                                                 std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                                 "x" + std::to_string(b.height()));
    }
}

}  // namespace drivegaze
