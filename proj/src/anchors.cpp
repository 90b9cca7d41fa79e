#include "tubetrack/anchors.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tubetrack/errors.hpp"

namespace tubetrack {

void AnchorConfig::validate() const {
    const std::size_t n = grid_sizes.size();
    if (n == 0)
        throw ConfigError("anchor.grid_sizes: empty");
    if (tubes_per_cell.size() != n || scales.size() != n || aspect_ratios.size() != n)
        throw ConfigError("anchor config: grid_sizes, tubes_per_cell, scales and aspect_ratios "
                          "must have equal length");
    if (n_frames < 2)
        throw ConfigError("anchor.n_frames: must be >= 2");
    for (std::size_t k = 0; k < n; ++k) {
        if (grid_sizes[k] <= 0)
            throw ConfigError("anchor.grid_sizes[" + std::to_string(k) + "]: must be positive");
        if (tubes_per_cell[k] <= 0)
            throw ConfigError("anchor.tubes_per_cell[" + std::to_string(k) + "]: must be positive");
        if (!(scales[k] > 0 && scales[k] <= 1))
            throw ConfigError("anchor.scales[" + std::to_string(k) + "]: must be in (0,1]");
        for (double r : aspect_ratios[k])
            if (!(r > 0))
                throw ConfigError("anchor.aspect_ratios[" + std::to_string(k) + "]: ratios must be positive");
        const int available = 2 + static_cast<int>(aspect_ratios[k].size());
        if (tubes_per_cell[k] > available)
            throw ConfigError("anchor.tubes_per_cell[" + std::to_string(k) + "]: " +
                              std::to_string(tubes_per_cell[k]) + " shapes requested but only " +
                              std::to_string(available) + " (scale, aspect) combinations defined");
    }
}

int AnchorConfig::total_tubes() const {
    int total = 0;
    for (std::size_t k = 0; k < grid_sizes.size(); ++k)
        total += grid_sizes[k] * grid_sizes[k] * tubes_per_cell[k];
    return total;
}

namespace {

// Scale of the intermediate square shape: geometric mean of this map's scale
// and the next one; the last map extrapolates the scale progression.
double intermediate_scale(const AnchorConfig& cfg, std::size_t k) {
    const std::size_t n = cfg.scales.size();
    double next;
    if (k + 1 < n)
        next = cfg.scales[k + 1];
    else if (n >= 2)
        next = cfg.scales[k] + (cfg.scales[k] - cfg.scales[k - 1]);
    else
        next = 1.5 * cfg.scales[k];
    return std::sqrt(cfg.scales[k] * next);
}

}  // namespace

std::vector<AnchorTube> generate_anchor_tubes(const AnchorConfig& cfg) {
    cfg.validate();

    std::vector<AnchorTube> out;
    out.reserve(static_cast<std::size_t>(cfg.total_tubes()));

    for (std::size_t k = 0; k < cfg.grid_sizes.size(); ++k) {
        // (w, h) of each shape for this map, in canonical order.
        std::vector<std::pair<double, double>> shapes;
        const double s = cfg.scales[k];
        shapes.emplace_back(s, s);
        const double si = intermediate_scale(cfg, k);
        shapes.emplace_back(si, si);
        for (double r : cfg.aspect_ratios[k]) {
            const double sq = std::sqrt(r);
            shapes.emplace_back(s * sq, s / sq);
        }
        shapes.resize(static_cast<std::size_t>(cfg.tubes_per_cell[k]));

        const int g = cfg.grid_sizes[k];
        for (int row = 0; row < g; ++row) {
            const double cy = (row + 0.5) / g;
            for (int col = 0; col < g; ++col) {
                const double cx = (col + 0.5) / g;
                for (const auto& [w, h] : shapes) {
                    AnchorTube tube;
                    tube.box = BBox{cx, cy, w, h};
                    tube.index = static_cast<int>(out.size());
                    out.push_back(tube);
                }
            }
        }
    }
    return out;
}

EncodedBox encode(const BBox& anchor, const BBox& box) {
    if (!(anchor.w > 0 && anchor.h > 0 && box.w > 0 && box.h > 0))
        throw std::invalid_argument("encode: box with non-positive width or height");
    EncodedBox g;
    g.g_w = std::log(box.w / anchor.w);
    g.g_h = std::log(box.h / anchor.h);
    g.g_cx = (box.cx - anchor.cx) / anchor.w;
    g.g_cy = (box.cy - anchor.cy) / anchor.h;
    return g;
}

BBox decode(const BBox& anchor, const EncodedBox& g) {
    if (!(anchor.w > 0 && anchor.h > 0))
        throw std::invalid_argument("decode: anchor with non-positive width or height");
    if (!(std::isfinite(g.g_cx) && std::isfinite(g.g_cy) && std::isfinite(g.g_w) && std::isfinite(g.g_h)))
        throw std::invalid_argument("decode: non-finite encoded box");
    if (std::abs(g.g_w) > 50 || std::abs(g.g_h) > 50)
        throw std::range_error("decode: log-scale offset beyond +-50 signals a corrupt prediction");
    BBox b;
    b.w = anchor.w * std::exp(g.g_w);
    b.h = anchor.h * std::exp(g.g_h);
    b.cx = anchor.cx + g.g_cx * anchor.w;
    b.cy = anchor.cy + g.g_cy * anchor.h;
    return b;
}

MatchResult match(const std::vector<AnchorTube>& anchors,
                  const std::vector<TrackWindow>& tracks,
                  double delta_o,
                  double vis_threshold) {
    if (!(delta_o > 0 && delta_o < 1))
        throw std::invalid_argument("match: delta_o outside (0,1)");

    MatchResult result;
    result.anchors.resize(anchors.size());
    if (tracks.empty())
        return result;

    // First visible box per track; a track with none is unmatchable.
    std::vector<BBox> first_visible(tracks.size());
    for (std::size_t j = 0; j < tracks.size(); ++j) {
        const BoxSeq& seq = tracks[j].seq;
        if (seq.boxes.size() != seq.visibility.size())
            throw std::invalid_argument("match: track boxes/visibility length mismatch");
        bool found = false;
        for (std::size_t t = 0; t < seq.size(); ++t) {
            if (seq.visibility[t] >= vis_threshold) {
                first_visible[j] = seq.boxes[t];
                found = true;
                break;
            }
        }
        if (!found)
            throw std::invalid_argument("match: track " + std::to_string(tracks[j].id) +
                                        " has no visible box in the window");
    }

    Eigen::MatrixXd overlaps(static_cast<Eigen::Index>(anchors.size()),
                             static_cast<Eigen::Index>(tracks.size()));
    for (std::size_t i = 0; i < anchors.size(); ++i)
        for (std::size_t j = 0; j < tracks.size(); ++j)
            overlaps(i, j) = iou(anchors[i].box, first_visible[j]);

    // Forced stage: every track claims its best remaining anchor, highest
    // overlap pair first, so two tracks never collapse onto one anchor.
    std::vector<bool> anchor_forced(anchors.size(), false);
    std::vector<bool> track_claimed(tracks.size(), false);
    for (std::size_t round = 0; round < tracks.size() && round < anchors.size(); ++round) {
        double best = -1;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < anchors.size(); ++i) {
            if (anchor_forced[i])
                continue;
            for (std::size_t j = 0; j < tracks.size(); ++j) {
                if (track_claimed[j])
                    continue;
                if (overlaps(i, j) > best) {
                    best = overlaps(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        anchor_forced[bi] = true;
        track_claimed[bj] = true;
        AnchorMatch& m = result.anchors[bi];
        m.best_track = tracks[bj].id;
        m.overlap = best;
        m.positive = true;
        m.forced = true;
    }

    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (anchor_forced[i])
            continue;
        Eigen::Index jbest;
        const double best = overlaps.row(static_cast<Eigen::Index>(i)).maxCoeff(&jbest);
        AnchorMatch& m = result.anchors[i];
        m.overlap = best;
        if (best > 0)
            m.best_track = tracks[static_cast<std::size_t>(jbest)].id;
        m.positive = best >= delta_o;
    }

    for (const AnchorMatch& m : result.anchors)
        if (m.positive)
            ++result.n_positive;
    return result;
}

MaskedEncodedSeq encode_track(const AnchorTube& anchor, const BoxSeq& track, double vis_threshold) {
    if (track.boxes.size() != track.visibility.size())
        throw std::invalid_argument("encode_track: boxes/visibility length mismatch");
    MaskedEncodedSeq out(track.size());
    for (std::size_t t = 0; t < track.size(); ++t) {
        if (track.visibility[t] < vis_threshold)
            continue;  // masked: excluded from losses and fitting
        out[t] = encode(anchor.box, track.boxes[t]);
    }
    return out;
}

}  // namespace tubetrack
