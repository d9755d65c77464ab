#include "avis/mask.hpp"

#include <string>

#include "avis/errors.hpp"

namespace avis {

namespace {

std::uint64_t counts_total(const FrameMask& mask) {
    std::uint64_t total = 0;
    for (std::uint32_t c : mask.counts) total += c;
    return total;
}

}  // namespace

void validate_mask(const FrameMask& mask) {
    if (mask.height <= 0 || mask.width <= 0) {
        throw CodecError("mask dimensions must be positive, got " + std::to_string(mask.height) +
                         "x" + std::to_string(mask.width));
    }
    const std::uint64_t expected =
        static_cast<std::uint64_t>(mask.height) * static_cast<std::uint64_t>(mask.width);
    const std::uint64_t total = counts_total(mask);
    if (total != expected) {
        throw CodecError("run total " + std::to_string(total) + " does not cover " +
                         std::to_string(mask.height) + "x" + std::to_string(mask.width) + " = " +
                         std::to_string(expected) + " pixels");
    }
    for (std::size_t i = 1; i < mask.counts.size(); ++i) {
        if (mask.counts[i] == 0) {
            throw CodecError("zero-length interior run at index " + std::to_string(i));
        }
    }
}

FrameMask canonical(FrameMask mask) {
    std::vector<std::uint32_t> out;
    out.reserve(mask.counts.size());
    bool value = true;  // toggles to background for the first run
    for (std::uint32_t c : mask.counts) {
        value = !value;
        if (c == 0) continue;
        // out.size() parity tells which value the next canonical run expects.
        const bool expected = (out.size() % 2) != 0;
        if (out.empty()) {
            if (value) out.push_back(0);  // leading foreground needs the zero sentinel
            out.push_back(c);
        } else if (value == expected) {
            out.push_back(c);
        } else {
            out.back() += c;
        }
    }
    if (out.empty()) out.push_back(0);
    mask.counts = std::move(out);
    return mask;
}

std::uint64_t frame_area(const FrameMask& mask) {
    std::uint64_t area = 0;
    for (std::size_t i = 1; i < mask.counts.size(); i += 2) area += mask.counts[i];
    return area;
}

std::vector<std::uint8_t> rle_decode(const FrameMask& mask) {
    validate_mask(mask);
    std::vector<std::uint8_t> grid;
    grid.reserve(static_cast<std::size_t>(mask.height) * static_cast<std::size_t>(mask.width));
    std::uint8_t value = 0;
    for (std::uint32_t c : mask.counts) {
        grid.insert(grid.end(), c, value);
        value = !value;
    }
    return grid;
}

FrameMask rle_encode(const std::vector<std::uint8_t>& grid, int height, int width) {
    if (height <= 0 || width <= 0) {
        throw GeometryError("cannot encode an empty grid (" + std::to_string(height) + "x" +
                            std::to_string(width) + ")");
    }
    const std::size_t expected =
        static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    if (grid.size() != expected) {
        throw GeometryError("grid holds " + std::to_string(grid.size()) + " pixels, expected " +
                            std::to_string(expected));
    }
    FrameMask mask;
    mask.height = height;
    mask.width = width;
    std::uint8_t value = 0;
    std::uint32_t run = 0;
    for (std::uint8_t px : grid) {
        const std::uint8_t bit = px ? 1 : 0;
        if (bit == value) {
            ++run;
        } else {
            mask.counts.push_back(run);
            value = bit;
            run = 1;
        }
    }
    mask.counts.push_back(run);
    return mask;
}

namespace {

void require_same_dims(const FrameMask& a, const FrameMask& b) {
    if (a.height != b.height || a.width != b.width) {
        throw GeometryError("mask dimension mismatch: " + std::to_string(a.height) + "x" +
                            std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                            std::to_string(b.width));
    }
}

// The merge scan below only terminates when both run lists cover the full
// grid, so the totals are checked first.
void require_covered(const FrameMask& mask) {
    const std::uint64_t expected =
        static_cast<std::uint64_t>(mask.height) * static_cast<std::uint64_t>(mask.width);
    const std::uint64_t total = counts_total(mask);
    if (total != expected) {
        throw CodecError("run total " + std::to_string(total) + " does not cover " +
                         std::to_string(expected) + " pixels");
    }
}

}  // namespace

OverlapCounts frame_overlap(const FrameMask& a, const FrameMask& b) {
    require_same_dims(a, b);
    require_covered(a);
    require_covered(b);
    OverlapCounts out;
    std::size_t ia = 0, ib = 0;
    std::uint64_t ca = a.counts.empty() ? 0 : a.counts[0];
    std::uint64_t cb = b.counts.empty() ? 0 : b.counts[0];
    bool va = false, vb = false;
    std::uint64_t remaining = 1;  // sentinel: both leading runs may be zero
    while (remaining > 0) {
        const std::uint64_t step = ca < cb ? ca : cb;
        if (va && vb) out.intersection += step;
        if (va || vb) out.unification += step;
        remaining = 0;
        ca -= step;
        if (ca == 0 && ia + 1 < a.counts.size()) {
            ca = a.counts[++ia];
            va = !va;
        }
        remaining += ca;
        cb -= step;
        if (cb == 0 && ib + 1 < b.counts.size()) {
            cb = b.counts[++ib];
            vb = !vb;
        }
        remaining += cb;
    }
    return out;
}

std::uint64_t frame_intersection_area(const FrameMask& a, const FrameMask& b) {
    return frame_overlap(a, b).intersection;
}

std::uint64_t frame_union_area(const FrameMask& a, const FrameMask& b) {
    return frame_overlap(a, b).unification;
}

FrameMask frame_union(const FrameMask& a, const FrameMask& b) {
    require_same_dims(a, b);
    require_covered(a);
    require_covered(b);
    FrameMask merged;
    merged.height = a.height;
    merged.width = a.width;
    std::size_t ia = 0, ib = 0;
    std::uint64_t ca = a.counts.empty() ? 0 : a.counts[0];
    std::uint64_t cb = b.counts.empty() ? 0 : b.counts[0];
    bool va = false, vb = false;
    bool current = false;
    std::uint64_t run = 0;
    std::uint64_t remaining = 1;  // sentinel: both leading runs may be zero
    while (remaining > 0) {
        const std::uint64_t step = ca < cb ? ca : cb;
        const bool merged_value = va || vb;
        if (merged_value == current) {
            run += step;
        } else {
            merged.counts.push_back(static_cast<std::uint32_t>(run));
            current = merged_value;
            run = step;
        }
        remaining = 0;
        ca -= step;
        if (ca == 0 && ia + 1 < a.counts.size()) {
            ca = a.counts[++ia];
            va = !va;
        }
        remaining += ca;
        cb -= step;
        if (cb == 0 && ib + 1 < b.counts.size()) {
            cb = b.counts[++ib];
            vb = !vb;
        }
        remaining += cb;
    }
    merged.counts.push_back(static_cast<std::uint32_t>(run));
    return canonical(std::move(merged));
}

std::vector<int> support(const MaskTrack& track) {
    std::vector<int> frames;
    for (std::size_t t = 0; t < track.masks.size(); ++t) {
        if (track.masks[t] && frame_area(*track.masks[t]) > 0) {
            frames.push_back(static_cast<int>(t));
        }
    }
    return frames;
}

std::optional<std::pair<int, int>> track_dims(const MaskTrack& track) {
    for (const auto& mask : track.masks) {
        if (mask) return std::make_pair(mask->height, mask->width);
    }
    return std::nullopt;
}

std::uint64_t track_area(const MaskTrack& track) {
    std::uint64_t area = 0;
    for (const auto& mask : track.masks) {
        if (mask) area += frame_area(*mask);
    }
    return area;
}

void validate_track(const MaskTrack& track) {
    if (track.frame_count < 0 ||
        track.masks.size() != static_cast<std::size_t>(track.frame_count)) {
        throw GeometryError("track holds " + std::to_string(track.masks.size()) +
                            " frames, declared " + std::to_string(track.frame_count));
    }
    std::optional<std::pair<int, int>> dims;
    for (std::size_t t = 0; t < track.masks.size(); ++t) {
        if (!track.masks[t]) continue;
        validate_mask(*track.masks[t]);
        const std::pair<int, int> here{track.masks[t]->height, track.masks[t]->width};
        if (!dims) {
            dims = here;
        } else if (*dims != here) {
            throw GeometryError("frame " + std::to_string(t) + " is " +
                                std::to_string(here.first) + "x" + std::to_string(here.second) +
                                ", track is " + std::to_string(dims->first) + "x" +
                                std::to_string(dims->second));
        }
    }
}

OverlapCounts track_overlap(const MaskTrack& gt, const MaskTrack& hyp) {
    if (gt.frame_count != hyp.frame_count) {
        throw GeometryError("track length mismatch: " + std::to_string(gt.frame_count) + " vs " +
                            std::to_string(hyp.frame_count));
    }
    OverlapCounts out;
    for (int t = 0; t < gt.frame_count; ++t) {
        const auto& a = gt.masks[t];
        const auto& b = hyp.masks[t];
        if (a && b) {
            const OverlapCounts frame = frame_overlap(*a, *b);
            out.intersection += frame.intersection;
            out.unification += frame.unification;
        } else if (a) {
            out.unification += frame_area(*a);
        } else if (b) {
            out.unification += frame_area(*b);
        }
    }
    return out;
}

double spatiotemporal_iou(const MaskTrack& gt, const MaskTrack& hyp) {
    const OverlapCounts o = track_overlap(gt, hyp);
    if (o.unification == 0) return 0.0;
    return static_cast<double>(o.intersection) / static_cast<double>(o.unification);
}

}  // namespace avis
