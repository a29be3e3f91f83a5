#pragma once

#include <cstdint>

namespace drivegaze::ingest {
struct AnnotationSet;
}

namespace drivegaze::align {

/// Frame-count relation between the driver-view (ETG) and rooftop (GAR) streams.
/// `offset_frames` shifts the linear mapping in the GAR domain.
struct AlignmentSpec {
    std::int64_t n_etg = 9000;
    std::int64_t n_gar = 7500;
    std::int64_t offset_frames = 0;
};

/// Throws Error(InvalidValue) unless n_etg, n_gar > 0 and |offset_frames| < n_gar.
void validate(const AlignmentSpec& spec);

AlignmentSpec spec_from(const ingest::AnnotationSet& annotations);

struct GarRange {
    std::int64_t lo = 0;
    std::int64_t hi = 0;  // inclusive

    std::int64_t size() const noexcept { return hi - lo + 1; }
    bool contains(std::int64_t g) const noexcept { return g >= lo && g <= hi; }
};

/// clamp(floor(e · n_gar / n_etg) + offset, 0, n_gar − 1). Throws OutOfRange for e outside [0, n_etg).
std::int64_t etg_to_gar(const AlignmentSpec& spec, std::int64_t etg_frame);

/// GAR frames within `half_width` of g, clipped to the video. Throws OutOfRange for g outside [0, n_gar).
GarRange gar_window(const AlignmentSpec& spec, std::int64_t gar_frame, std::int64_t half_width = 12);

}  // namespace drivegaze::align
