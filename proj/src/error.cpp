#include "drivegaze/error.hpp"

namespace drivegaze {

const char* errc_name(Errc code) noexcept
{
    switch (code) {
        case Errc::BadHeader: return "BadHeader";
        case Errc::MalformedRow: return "MalformedRow";
        case Errc::UnknownEnum: return "UnknownEnum";
        case Errc::DuplicateFrame: return "DuplicateFrame";
        case Errc::NegativeSpeed: return "NegativeSpeed";
        case Errc::InvalidValue: return "InvalidValue";
        case Errc::OverlappingSegments: return "OverlappingSegments";
        case Errc::MissingFirstFixation: return "MissingFirstFixation";
        case Errc::OutOfRange: return "OutOfRange";
        case Errc::OutOfRaster: return "OutOfRaster";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::InsufficientPoints: return "InsufficientPoints";
        case Errc::DegenerateConfiguration: return "DegenerateConfiguration";
        case Errc::NoModelFound: return "NoModelFound";
        case Errc::PointAtInfinity: return "PointAtInfinity";
        case Errc::MissingHomography: return "MissingHomography";
        case Errc::BadMagic: return "BadMagic";
        case Errc::TruncatedFile: return "TruncatedFile";
        case Errc::MissingFlow: return "MissingFlow";
        case Errc::NonPositiveMass: return "NonPositiveMass";
        case Errc::NegativeValue: return "NegativeValue";
        case Errc::ZeroVariance: return "ZeroVariance";
        case Errc::NoFixations: return "NoFixations";
        case Errc::InsufficientSamples: return "InsufficientSamples";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::NegativeDistance: return "NegativeDistance";
        case Errc::WindowOutOfRange: return "WindowOutOfRange";
        case Errc::UnlabeledFrame: return "UnlabeledFrame";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

namespace {

std::string decorate(Errc code, const std::string& message, std::optional<std::int64_t> position)
{
    std::string out = errc_name(code);
    if (position) {
        out += "(" + std::to_string(*position) + ")";
    }
    if (!message.empty()) {
        out += ": " + message;
    }
    return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::int64_t> position)
    : std::runtime_error(decorate(code, message, position)), code_(code), position_(position)
{
}

}  // namespace drivegaze
