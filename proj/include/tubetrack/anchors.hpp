#pragma once

#include <optional>
#include <vector>

#include "tubetrack/geometry.hpp"

namespace tubetrack {

// Multi-scale anchor-tube grid. Map k places tubes_per_cell[k] box shapes at
// every cell of a grid_sizes[k] x grid_sizes[k] grid. Shape order per cell:
// square at scales[k], square at the intermediate scale
// sqrt(scales[k] * scales[k+1]), then one shape per entry of aspect_ratios[k]
// with w = s*sqrt(r), h = s/sqrt(r). tubes_per_cell[k] takes a prefix of that
// list.
struct AnchorConfig {
    int n_frames = 16;
    std::vector<int> grid_sizes{42, 21, 11, 6, 3, 2};
    std::vector<int> tubes_per_cell{10, 8, 8, 5, 4, 4};
    std::vector<double> scales{0.2, 0.34, 0.48, 0.62, 0.76, 0.9};
    std::vector<std::vector<double>> aspect_ratios{
        {2.0, 0.5, 3.0, 1.0 / 3.0, 1.5, 2.0 / 3.0, 4.0, 0.25},
        {2.0, 0.5, 3.0, 1.0 / 3.0, 1.5, 2.0 / 3.0},
        {2.0, 0.5, 3.0, 1.0 / 3.0, 1.5, 2.0 / 3.0},
        {2.0, 0.5, 3.0},
        {2.0, 0.5},
        {2.0, 0.5},
    };

    void validate() const;
    int total_tubes() const;  // sum of grid^2 * tubes_per_cell
};

// A constant box replicated across the n_frames frames of a window.
struct AnchorTube {
    BBox box;
    int index = 0;
};

// Deterministic ordering: map-major, then row, then column, then shape.
std::vector<AnchorTube> generate_anchor_tubes(const AnchorConfig& cfg);

// Offset/log-scale representation of a box relative to an anchor box.
struct EncodedBox {
    double g_cx = 0;
    double g_cy = 0;
    double g_w = 0;
    double g_h = 0;
};

EncodedBox encode(const BBox& anchor, const BBox& box);
BBox decode(const BBox& anchor, const EncodedBox& g);

// A ground-truth track restricted to one window. Masked frames (absent or
// fully occluded) carry visibility 0 and a zeroed box.
struct TrackWindow {
    int id = 0;
    int class_id = 1;
    BoxSeq seq;
};

struct AnchorMatch {
    std::optional<int> best_track;  // track id
    double overlap = 0;
    bool positive = false;
    bool forced = false;  // positive as some track's best anchor, not via threshold
};

struct MatchResult {
    std::vector<AnchorMatch> anchors;
    int n_positive = 0;
};

// Anchor <-> track matching. The overlap of an anchor and a track is the IOU
// of the anchor box with the first visible box of the track. An anchor is
// positive when its best overlap reaches delta_o, or when it is the best
// remaining anchor of some track (forced match, so every track owns at least
// one positive anchor). Ties break toward the lowest anchor index, then the
// lowest track position.
MatchResult match(const std::vector<AnchorTube>& anchors,
                  const std::vector<TrackWindow>& tracks,
                  double delta_o = 0.5,
                  double vis_threshold = 0.5);

// Frame-wise encoding of a track against a constant anchor box. Frames whose
// visibility is below vis_threshold come back masked.
using MaskedEncodedSeq = std::vector<std::optional<EncodedBox>>;

MaskedEncodedSeq encode_track(const AnchorTube& anchor, const BoxSeq& track,
                              double vis_threshold = 0.5);

}  // namespace tubetrack
