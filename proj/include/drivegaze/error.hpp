#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace drivegaze {

enum class Errc : std::uint8_t {
    // ingest
    BadHeader,
    MalformedRow,
    UnknownEnum,
    DuplicateFrame,
    NegativeSpeed,
    InvalidValue,
    OverlappingSegments,
    MissingFirstFixation,
    // align / rasters
    OutOfRange,
    OutOfRaster,
    DimensionMismatch,
    // geometry
    InsufficientPoints,
    DegenerateConfiguration,
    NoModelFound,
    PointAtInfinity,
    MissingHomography,
    // flowprop
    BadMagic,
    TruncatedFile,
    MissingFlow,
    // metrics
    NonPositiveMass,
    NegativeValue,
    ZeroVariance,
    NoFixations,
    // tasklab
    InsufficientSamples,
    LengthMismatch,
    NegativeDistance,
    WindowOutOfRange,
    UnlabeledFrame,
    // generic
    InvalidConfig,
    IoFailure,
};

const char* errc_name(Errc code) noexcept;

/// True for errors caused by the filesystem rather than the content of the data.
constexpr bool is_io_error(Errc code) noexcept
{
    return code == Errc::IoFailure || code == Errc::TruncatedFile;
}

/// Every failure in the library is reported as an Error carrying a machine-readable
/// code. `position` is the 1-based line number for text inputs, or a frame/pixel
/// index where one identifies the offending element.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::optional<std::int64_t> position = std::nullopt);

    Errc code() const noexcept { return code_; }
    std::optional<std::int64_t> position() const noexcept { return position_; }

private:
    Errc code_;
    std::optional<std::int64_t> position_;
};

}  // namespace drivegaze
