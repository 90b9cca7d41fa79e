#pragma once

#include <cstddef>
#include <vector>

namespace tubetrack {

// Center-parameterized box in normalized frame coordinates (frame width and
// height are 1.0). Boxes may extend beyond [0,1] -- objects can be partially
// off-frame -- but w and h must be positive wherever the box takes part in
// IOU or encoding.
struct BBox {
    double cx = 0;
    double cy = 0;
    double w = 0;
    double h = 0;
};

struct Corners {
    double left = 0;
    double top = 0;
    double right = 0;
    double bottom = 0;
};

Corners to_corners(const BBox& b);
BBox from_corners(double left, double top, double right, double bottom);

// Intersection over union. Exactly 0 for disjoint boxes, 1 iff identical.
double iou(const BBox& a, const BBox& b);

// Per-frame visibility in [0,1]; 1 = fully visible, 0 = invisible.
using VisibilitySeq = std::vector<double>;

// A box sequence with per-frame visibility; the shared carrier for anchor
// tubes, decoded tracklets and ground-truth track segments. Frames that were
// zero-masked carry visibility 0 (and a zeroed box that must never reach
// iou()).
struct BoxSeq {
    std::vector<BBox> boxes;
    VisibilitySeq visibility;

    std::size_t size() const { return boxes.size(); }
};

// Max per-frame IOU over the frames where both entries are visible
// (visibility >= vis_threshold). The sequences must already be aligned to a
// common frame range. Returns 0 when no frame has both boxes visible -- the
// "cannot associate" signal, not an error.
double tracklet_iou(const BoxSeq& t1, const BoxSeq& t2, double vis_threshold = 0.5);

}  // namespace tubetrack
