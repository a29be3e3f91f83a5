#include "drivegaze/align.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "drivegaze/error.hpp"
#include "drivegaze/ingest.hpp"

namespace drivegaze::align {

void validate(const AlignmentSpec& spec)
{
    if (spec.n_etg <= 0 || spec.n_gar <= 0) {
        throw Error(Errc::InvalidValue, "frame counts must be positive");
    }
    if (std::llabs(spec.offset_frames) >= spec.n_gar) {
        throw Error(Errc::InvalidValue, "|offset_frames| must be below n_gar", spec.offset_frames);
    }
}

AlignmentSpec spec_from(const ingest::AnnotationSet& annotations)
{
    AlignmentSpec spec{annotations.n_etg, annotations.n_gar, annotations.offset_frames};
    validate(spec);
    return spec;
}

std::int64_t etg_to_gar(const AlignmentSpec& spec, std::int64_t etg_frame)
{
    if (etg_frame < 0 || etg_frame >= spec.n_etg) {
        throw Error(Errc::OutOfRange, "ETG frame outside [0, " + std::to_string(spec.n_etg) + ")", etg_frame);
    }
    // Both operands are non-negative, so integer division is floor.
    const std::int64_t linear = etg_frame * spec.n_gar / spec.n_etg;
    return std::clamp<std::int64_t>(linear + spec.offset_frames, 0, spec.n_gar - 1);
}

GarRange gar_window(const AlignmentSpec& spec, std::int64_t gar_frame, std::int64_t half_width)
{
    if (gar_frame < 0 || gar_frame >= spec.n_gar) {
        throw Error(Errc::OutOfRange, "GAR frame outside [0, " + std::to_string(spec.n_gar) + ")", gar_frame);
    }
    if (half_width < 0) {
        throw Error(Errc::InvalidValue, "negative window half width", half_width);
    }
    return {std::max<std::int64_t>(0, gar_frame - half_width), std::min(spec.n_gar - 1, gar_frame + half_width)};
}

}  // namespace drivegaze::align
