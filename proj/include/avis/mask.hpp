#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace avis {

/// Run-length encoded binary mask for a single frame.
///
/// Pixels are traversed in column-major order (linear index = column * height
/// + row). `counts` holds alternating run lengths, starting with a background
/// run; a mask whose first pixel is foreground therefore starts with a zero.
/// Canonical form: only the first count may be zero, every other count is
/// positive, and sum(counts) == height * width.
struct FrameMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint32_t> counts;
};

/// Per-frame optional masks over a whole video. An absent entry is an empty
/// mask at that frame; all present masks share one (height, width).
struct MaskTrack {
    int frame_count = 0;
    std::vector<std::optional<FrameMask>> masks;
};

/// Intersection and union pixel counts of a mask or track pair.
struct OverlapCounts {
    std::uint64_t intersection = 0;
    std::uint64_t unification = 0;
};

/// Throws CodecError unless `mask` satisfies the FrameMask invariants.
void validate_mask(const FrameMask& mask);

/// Rebuilds `counts` in canonical form (merges zero-length interior runs).
/// Does not require the sum invariant to hold.
FrameMask canonical(FrameMask mask);

std::uint64_t frame_area(const FrameMask& mask);

/// Expands a mask into a column-major dense grid of 0/1 bytes.
/// Throws CodecError when the run total does not cover height * width.
std::vector<std::uint8_t> rle_decode(const FrameMask& mask);

/// Encodes a column-major dense grid. Throws GeometryError on an empty grid
/// or when grid.size() != height * width. The result is canonical.
FrameMask rle_encode(const std::vector<std::uint8_t>& grid, int height, int width);

/// Merge-scan over the two run lists; never decodes.
/// Throws GeometryError on dimension mismatch.
OverlapCounts frame_overlap(const FrameMask& a, const FrameMask& b);

std::uint64_t frame_intersection_area(const FrameMask& a, const FrameMask& b);
std::uint64_t frame_union_area(const FrameMask& a, const FrameMask& b);

/// Pixelwise union of two masks as a canonical mask.
FrameMask frame_union(const FrameMask& a, const FrameMask& b);

/// Frames where a mask is present with non-zero area, ascending.
std::vector<int> support(const MaskTrack& track);

/// Dimensions shared by the present masks, or nullopt for an all-absent track.
std::optional<std::pair<int, int>> track_dims(const MaskTrack& track);

std::uint64_t track_area(const MaskTrack& track);

/// Throws GeometryError unless masks.size() == frame_count and all present
/// masks agree on dimensions.
void validate_track(const MaskTrack& track);

/// Summed per-frame intersection and union counts over the common frame
/// range. Absent masks contribute zero area; a frame where both masks are
/// absent adds nothing to either sum. Throws GeometryError when the tracks
/// disagree on frame count or on mask dimensions.
OverlapCounts track_overlap(const MaskTrack& gt, const MaskTrack& hyp);

/// Spatiotemporal IoU: ratio of the summed per-frame intersections to the
/// summed per-frame unions. Returns 0 when the total union is empty.
double spatiotemporal_iou(const MaskTrack& gt, const MaskTrack& hyp);

}  // namespace avis
