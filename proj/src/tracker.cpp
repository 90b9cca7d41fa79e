#include "tubetrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tubetrack/errors.hpp"

namespace tubetrack {

void TrackerConfig::validate() const {
    if (n_frames < 2)
        throw ConfigError("tracker.n_frames: must be >= 2");
    if (window_stride < 1 || window_stride > n_frames)
        throw ConfigError("tracker.window_stride: must be in [1, n_frames]");
    if (!(delta_c >= 0 && delta_c <= 1))
        throw ConfigError("tracker.delta_c: must be in [0,1]");
    if (!(delta_nms >= 0 && delta_nms <= 1))
        throw ConfigError("tracker.delta_nms: must be in [0,1]");
    if (!(delta_assoc >= 0 && delta_assoc <= 1))
        throw ConfigError("tracker.delta_assoc: must be in [0,1]");
    if (!(vis_threshold >= 0 && vis_threshold <= 1))
        throw ConfigError("tracker.vis_threshold: must be in [0,1]");
    if (max_misses < 0)
        throw ConfigError("tracker.max_misses: must be >= 0");
}

std::vector<Tracklet> filter_tubes(const std::vector<Tracklet>& candidates, double delta_c) {
    std::vector<Tracklet> kept;
    kept.reserve(candidates.size());
    for (const Tracklet& t : candidates)
        if (t.confidence >= delta_c)
            kept.push_back(t);
    return kept;
}

std::vector<Tracklet> tnms(const std::vector<Tracklet>& tubes, double delta_nms,
                           double vis_threshold) {
    std::vector<std::size_t> order(tubes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return tubes[a].confidence > tubes[b].confidence;
    });

    std::vector<std::size_t> kept_idx;
    for (std::size_t cand : order) {
        bool suppressed = false;
        for (std::size_t k : kept_idx) {
            if (tubes[k].class_id != tubes[cand].class_id)
                continue;
            if (tracklet_iou(tubes[k].seq, tubes[cand].seq, vis_threshold) > delta_nms) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed)
            kept_idx.push_back(cand);
    }

    std::sort(kept_idx.begin(), kept_idx.end());
    std::vector<Tracklet> kept;
    kept.reserve(kept_idx.size());
    for (std::size_t k : kept_idx)
        kept.push_back(tubes[k]);
    return kept;
}

std::vector<Tracklet> decode_window(const PredictionWindow& pred,
                                    const std::vector<AnchorTube>& anchors,
                                    const TimeBasis& basis) {
    pred.validate();
    if (anchors.size() != static_cast<std::size_t>(pred.n_anchors()))
        throw std::invalid_argument("decode_window: anchor count mismatch");
    if (basis.n_frames != pred.n_frames)
        throw std::invalid_argument("decode_window: basis frame count mismatch");

    std::vector<Tracklet> out;
    out.reserve(anchors.size());
    for (int i = 0; i < pred.n_anchors(); ++i) {
        const auto row = pred.class_scores.row(i);
        const double m = row.maxCoeff();
        const Eigen::ArrayXd probs = (row.array() - m).exp();
        const double z = probs.sum();

        Tracklet t;
        t.window_start = pred.window_start;
        t.confidence = 0;
        t.class_id = 1;
        for (int c = 1; c < pred.n_classes(); ++c) {
            const double p = probs(c) / z;
            if (p > t.confidence) {
                t.confidence = p;
                t.class_id = c;
            }
        }
        t.seq = decode_tube(pred.motion[i], anchors[i], basis);
        for (int k = 0; k < pred.n_frames; ++k) {
            const double d = pred.vis_score(i, k, 1) - pred.vis_score(i, k, 0);
            t.seq.visibility[k] = 1.0 / (1.0 + std::exp(-d));
        }
        out.push_back(std::move(t));
    }
    return out;
}

namespace {

// Trajectory tail restricted to the tracklet's frames; falls back to
// extrapolating the tail's fitted quadratic when the window shares no frame.
// Returns aligned (trajectory, tracklet) sequences, empty when no comparison
// is possible.
std::pair<BoxSeq, BoxSeq> aligned_pair(const Trajectory& traj, const Tracklet& tracklet,
                                       const TrackerConfig& cfg) {
    const int nf = static_cast<int>(tracklet.seq.size());
    BoxSeq a, b;
    for (int k = 0; k < nf; ++k) {
        const auto it = traj.records.find(tracklet.window_start + k);
        if (it == traj.records.end())
            continue;
        a.boxes.push_back(it->second.box);
        a.visibility.push_back(it->second.visibility);
        b.boxes.push_back(tracklet.seq.boxes[k]);
        b.visibility.push_back(tracklet.seq.visibility[k]);
    }
    if (!a.boxes.empty())
        return {std::move(a), std::move(b)};

    // No shared frame (stride == n_frames): extrapolate the last fitted
    // motion of the trajectory across the tracklet's window.
    std::vector<std::pair<int, TrajectoryRecord>> tail;
    for (auto it = traj.records.rbegin(); it != traj.records.rend(); ++it) {
        if (it->second.visibility >= cfg.vis_threshold)
            tail.emplace_back(it->first, it->second);
        if (static_cast<int>(tail.size()) == cfg.n_frames)
            break;
    }
    if (tail.size() < 3)
        return {};
    std::reverse(tail.begin(), tail.end());

    const int f0 = tail.front().first;
    const int span = tail.back().first - f0;
    AnchorTube reference;
    reference.box = BBox{0, 0, 1, 1};  // encoding against it is the identity map
    TimeBasis fit_basis;
    fit_basis.n_frames = span + 1;
    fit_basis.tau0 = 0;
    fit_basis.dtau = 1.0 / std::max(span, 1);
    MaskedEncodedSeq enc(span + 1);
    for (const auto& [frame, rec] : tail)
        enc[frame - f0] = encode(reference.box, rec.box);

    MotionParams params;
    try {
        params = fit(enc, fit_basis, 3).params;
    } catch (const UnderdeterminedError&) {
        return {};
    }
    for (int k = 0; k < nf; ++k) {
        const double tau = (tracklet.window_start + k - f0) * fit_basis.dtau;
        a.boxes.push_back(eval_absolute(params, reference.box, tau));
        a.visibility.push_back(1.0);
        b.boxes.push_back(tracklet.seq.boxes[k]);
        b.visibility.push_back(tracklet.seq.visibility[k]);
    }
    return {std::move(a), std::move(b)};
}

}  // namespace

void associate(TrackSet& tracks, const std::vector<Tracklet>& tracklets,
               const TrackerConfig& cfg) {
    cfg.validate();
    const int round = tracks.window_index++;

    if (!tracklets.empty()) {
        const int window_start = tracklets.front().window_start;
        const int window_end = window_start + static_cast<int>(tracklets.front().seq.size()) - 1;
        for (const Tracklet& t : tracklets)
            if (t.window_start != window_start)
                throw std::invalid_argument("associate: tracklets from different windows");
        int frontier = -1;
        for (const Trajectory& traj : tracks.active)
            frontier = std::max(frontier, traj.last_frame());
        if (!tracks.active.empty() && window_end < frontier)
            throw ContractViolation("associate: tracklet window ends at frame " +
                                    std::to_string(window_end) +
                                    " before the trajectory frontier " + std::to_string(frontier));
    }

    const std::size_t m = tracks.active.size();
    const std::size_t n = tracklets.size();
    std::vector<int> tracklet_owner(n, -1);  // index into tracks.active
    if (m > 0 && n > 0) {
        Eigen::MatrixXd psi(m, n);
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                const auto [ta, tb] = aligned_pair(tracks.active[r], tracklets[c], cfg);
                psi(r, c) = ta.boxes.empty() ? 0.0 : tracklet_iou(ta, tb, cfg.vis_threshold);
            }
        }
        const Assignment assignment = hungarian(Eigen::MatrixXd(1.0 - psi.array()));
        for (std::size_t r = 0; r < m; ++r) {
            const int c = assignment.row_to_col[r];
            if (c >= 0 && psi(r, c) >= cfg.delta_assoc)
                tracklet_owner[c] = static_cast<int>(r);
        }
    }

    std::vector<bool> matched(m, false);
    for (std::size_t c = 0; c < n; ++c) {
        Trajectory* traj;
        if (tracklet_owner[c] >= 0) {
            traj = &tracks.active[tracklet_owner[c]];
            matched[tracklet_owner[c]] = true;
        } else {
            Trajectory fresh;
            fresh.id = tracks.next_id++;
            tracks.active.push_back(std::move(fresh));
            traj = &tracks.active.back();
        }
        const Tracklet& t = tracklets[c];
        for (std::size_t k = 0; k < t.seq.size(); ++k) {
            // Newest window wins on shared frames.
            traj->records[t.window_start + static_cast<int>(k)] =
                TrajectoryRecord{t.seq.boxes[k], t.seq.visibility[k], t.confidence};
        }
        traj->last_window = round;
        traj->misses = 0;
    }

    std::vector<Trajectory> still_active;
    still_active.reserve(tracks.active.size());
    for (std::size_t r = 0; r < tracks.active.size(); ++r) {
        Trajectory& traj = tracks.active[r];
        if (r < m && !matched[r]) {
            ++traj.misses;
            if (traj.misses > cfg.max_misses) {
                tracks.retired.push_back(std::move(traj));
                continue;
            }
        }
        still_active.push_back(std::move(traj));
    }
    tracks.active = std::move(still_active);
}

TrackOutput run(const std::vector<std::pair<int, std::vector<Tracklet>>>& windows,
                const TrackerConfig& cfg) {
    cfg.validate();
    TrackOutput out;
    for (const auto& [window_start, candidates] : windows) {
        if (window_start <= out.tracks.last_window_start)
            throw SequencingError("run: window starting at frame " + std::to_string(window_start) +
                                  " arrived after window " +
                                  std::to_string(out.tracks.last_window_start));
        out.tracks.last_window_start = window_start;
        const std::vector<Tracklet> filtered = filter_tubes(candidates, cfg.delta_c);
        const std::vector<Tracklet> survivors = tnms(filtered, cfg.delta_nms, cfg.vis_threshold);
        associate(out.tracks, survivors, cfg);
    }

    auto emit = [&out](const Trajectory& traj) {
        for (const auto& [frame, rec] : traj.records)
            out.records.push_back(OutputRecord{frame, traj.id, rec.box, rec.confidence,
                                               rec.visibility});
    };
    for (const Trajectory& traj : out.tracks.active)
        emit(traj);
    for (const Trajectory& traj : out.tracks.retired)
        emit(traj);
    std::sort(out.records.begin(), out.records.end(), [](const OutputRecord& a, const OutputRecord& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });
    return out;
}

TrackOutput run(const std::vector<PredictionWindow>& windows,
                const std::vector<AnchorTube>& anchors, const TimeBasis& basis,
                const TrackerConfig& cfg) {
    std::vector<std::pair<int, std::vector<Tracklet>>> decoded;
    decoded.reserve(windows.size());
    for (const PredictionWindow& w : windows)
        decoded.emplace_back(w.window_start, decode_window(w, anchors, basis));
    return run(decoded, cfg);
}

}  // namespace tubetrack
