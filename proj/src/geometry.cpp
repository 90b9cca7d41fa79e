#include "tubetrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tubetrack {

namespace {

bool finite_box(const BBox& b) {
    return std::isfinite(b.cx) && std::isfinite(b.cy) && std::isfinite(b.w) && std::isfinite(b.h);
}

}  // namespace

Corners to_corners(const BBox& b) {
    const double hw = 0.5 * b.w;
    const double hh = 0.5 * b.h;
    return Corners{b.cx - hw, b.cy - hh, b.cx + hw, b.cy + hh};
}

BBox from_corners(double left, double top, double right, double bottom) {
    if (!(std::isfinite(left) && std::isfinite(top) && std::isfinite(right) && std::isfinite(bottom)))
        throw std::invalid_argument("from_corners: non-finite corner");
    if (!(right > left) || !(bottom > top))
        throw std::invalid_argument("from_corners: degenerate corners (need right > left, bottom > top)");
    return BBox{0.5 * (left + right), 0.5 * (top + bottom), right - left, bottom - top};
}

double iou(const BBox& a, const BBox& b) {
    if (!finite_box(a) || !finite_box(b))
        throw std::invalid_argument("iou: non-finite box");
    if (!(a.w > 0 && a.h > 0 && b.w > 0 && b.h > 0))
        throw std::invalid_argument("iou: box with non-positive width or height");

    const Corners ca = to_corners(a);
    const Corners cb = to_corners(b);
    const double iw = std::min(ca.right, cb.right) - std::max(ca.left, cb.left);
    const double ih = std::min(ca.bottom, cb.bottom) - std::max(ca.top, cb.top);
    if (iw <= 0 || ih <= 0)
        return 0.0;
    const double inter = iw * ih;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return inter / uni;
}

double tracklet_iou(const BoxSeq& t1, const BoxSeq& t2, double vis_threshold) {
    if (t1.boxes.size() != t1.visibility.size() || t2.boxes.size() != t2.visibility.size())
        throw std::invalid_argument("tracklet_iou: boxes/visibility length mismatch");
    if (t1.size() != t2.size())
        throw std::invalid_argument("tracklet_iou: sequences not aligned to a common frame range");
    if (!(vis_threshold >= 0 && vis_threshold <= 1))
        throw std::invalid_argument("tracklet_iou: vis_threshold outside [0,1]");

    double best = 0.0;
    for (std::size_t t = 0; t < t1.size(); ++t) {
        if (t1.visibility[t] < vis_threshold || t2.visibility[t] < vis_threshold)
            continue;
        best = std::max(best, iou(t1.boxes[t], t2.boxes[t]));
    }
    return best;
}

}  // namespace tubetrack
