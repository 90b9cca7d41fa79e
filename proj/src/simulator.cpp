#include "tubetrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "tubetrack/errors.hpp"

namespace tubetrack {

namespace {

// Seeded RNG with stdlib-independent draws so streams are reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

double eval_poly(const std::array<double, 3>& c, double u) {
    return (c[0] * u + c[1]) * u + c[2];
}

struct SimObject {
    TrackInfo info;
    std::vector<MotionSegment> segments;  // consecutive from spawn

    BBox box_at(int frame) const {
        int u = frame - info.spawn_frame;
        for (const MotionSegment& s : segments) {
            if (u < s.n_frames) {
                BBox b;
                b.cx = eval_poly(s.cx, u) + s.cx_cubic * u * u * u;
                b.cy = eval_poly(s.cy, u) + s.cy_cubic * u * u * u;
                b.w = std::exp(eval_poly(s.log_w, u));
                b.h = std::exp(eval_poly(s.log_h, u));
                return b;
            }
            u -= s.n_frames;
        }
        // Past the last segment: hold the final pose.
        const MotionSegment& s = segments.back();
        const double ue = s.n_frames - 1;
        BBox b;
        b.cx = eval_poly(s.cx, ue) + s.cx_cubic * ue * ue * ue;
        b.cy = eval_poly(s.cy, ue) + s.cy_cubic * ue * ue * ue;
        b.w = std::exp(eval_poly(s.log_w, ue));
        b.h = std::exp(eval_poly(s.log_h, ue));
        return b;
    }
};

// Builds the consecutive random segments of one object. C0-continuous: each
// segment starts where the previous one ended.
std::vector<MotionSegment> random_segments(Rng& rng, const SceneConfig& cfg, int life_frames) {
    std::vector<MotionSegment> segments;
    const double margin = cfg.max_size / 2;
    double x = rng.uniform(margin, 1 - margin);
    double y = rng.uniform(margin, 1 - margin);
    double lw = std::log(rng.uniform(cfg.min_size, cfg.max_size));
    double lh = std::log(rng.uniform(cfg.min_size, cfg.max_size));
    const double lw_min = std::log(cfg.min_size * 0.8), lw_max = std::log(cfg.max_size * 1.25);

    int remaining = life_frames;
    while (remaining > 0) {
        const int len = std::min(cfg.segment_frames, remaining);
        MotionSegment seg;
        seg.n_frames = len;
        const double ue = len - 1;

        double vx = 0, vy = 0, ax = 0, ay = 0;
        bool placed = false;
        for (int attempt = 0; attempt < 16 && !placed; ++attempt) {
            vx = rng.uniform(-cfg.max_speed, cfg.max_speed);
            vy = rng.uniform(-cfg.max_speed, cfg.max_speed);
            ax = rng.uniform(-cfg.max_accel, cfg.max_accel);
            ay = rng.uniform(-cfg.max_accel, cfg.max_accel);
            const double xe = x + vx * ue + ax * ue * ue;
            const double ye = y + vy * ue + ay * ue * ue;
            placed = xe > margin && xe < 1 - margin && ye > margin && ye < 1 - margin;
        }
        if (!placed) {
            // Head back toward the frame center at a legal speed.
            vx = std::clamp((0.5 - x) / std::max(ue, 1.0), -cfg.max_speed, cfg.max_speed);
            vy = std::clamp((0.5 - y) / std::max(ue, 1.0), -cfg.max_speed, cfg.max_speed);
            ax = ay = 0;
        }
        seg.cx = {ax, vx, x};
        seg.cy = {ay, vy, y};
        if (cfg.cubic_segments && ue > 0) {
            seg.cx_cubic = rng.uniform(-cfg.max_accel, cfg.max_accel) / ue;
            seg.cy_cubic = rng.uniform(-cfg.max_accel, cfg.max_accel) / ue;
        }

        double bw = rng.uniform(-cfg.size_drift, cfg.size_drift);
        double bh = rng.uniform(-cfg.size_drift, cfg.size_drift);
        if (ue > 0) {
            bw = std::clamp(bw, (lw_min - lw) / ue, (lw_max - lw) / ue);
            bh = std::clamp(bh, (lw_min - lh) / ue, (lw_max - lh) / ue);
        }
        seg.log_w = {0, bw, lw};
        seg.log_h = {0, bh, lh};

        x += vx * ue + ax * ue * ue + seg.cx_cubic * ue * ue * ue;
        y += vy * ue + ay * ue * ue + seg.cy_cubic * ue * ue * ue;
        lw += bw * ue;
        lh += bh * ue;
        segments.push_back(seg);
        remaining -= len;
    }
    return segments;
}

int sample_lifetime(Rng& rng, double despawn_prob, int max_frames) {
    if (despawn_prob <= 0)
        return max_frames;
    int life = 1;
    while (life < max_frames && !rng.bernoulli(despawn_prob))
        ++life;
    return life;
}

// Area of clip covered by the union of rects (each already clipped or not).
double covered_area(const Corners& clip, const std::vector<Corners>& rects) {
    std::vector<double> xs, ys;
    std::vector<Corners> clipped;
    for (const Corners& r : rects) {
        const double l = std::max(r.left, clip.left);
        const double t = std::max(r.top, clip.top);
        const double rr = std::min(r.right, clip.right);
        const double b = std::min(r.bottom, clip.bottom);
        if (rr <= l || b <= t)
            continue;
        clipped.push_back(Corners{l, t, rr, b});
        xs.push_back(l);
        xs.push_back(rr);
        ys.push_back(t);
        ys.push_back(b);
    }
    if (clipped.empty())
        return 0;
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

    double area = 0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const double mx = 0.5 * (xs[i] + xs[i + 1]);
            const double my = 0.5 * (ys[j] + ys[j + 1]);
            for (const Corners& r : clipped) {
                if (mx > r.left && mx < r.right && my > r.top && my < r.bottom) {
                    area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
                    break;
                }
            }
        }
    }
    return area;
}

}  // namespace

void SceneConfig::validate() const {
    if (n_frames < 1)
        throw ConfigError("scene.n_frames: must be >= 1");
    if (objects.empty()) {
        if (n_objects < 1)
            throw ConfigError("scene.n_objects: must be >= 1");
        if (!(min_size > 0) || !(max_size >= min_size))
            throw ConfigError("scene.min_size/max_size: need 0 < min_size <= max_size");
        if (max_size >= 1)
            throw ConfigError("scene.max_size: objects must be smaller than the frame");
        if (segment_frames < 2)
            throw ConfigError("scene.segment_frames: must be >= 2");
        if (!(max_speed >= 0) || !(max_accel >= 0) || !(size_drift >= 0))
            throw ConfigError("scene motion bounds: must be non-negative");
    } else {
        for (const ScriptedObject& o : objects) {
            if (o.segments.empty())
                throw ConfigError("scene.objects: scripted object without segments");
            for (const MotionSegment& s : o.segments)
                if (s.n_frames < 1)
                    throw ConfigError("scene.objects: segment with n_frames < 1");
            if (std::exp(o.segments.front().log_w[2]) > 1 ||
                std::exp(o.segments.front().log_h[2]) > 1)
                throw ConfigError("scene.objects: object larger than the frame");
        }
    }
    if (!(spawn_prob >= 0 && spawn_prob < 1))
        throw ConfigError("scene.spawn_prob: must be in [0,1)");
    if (!(despawn_prob >= 0 && despawn_prob < 1))
        throw ConfigError("scene.despawn_prob: must be in [0,1)");
    if (!(frame_width > 0) || !(frame_height > 0))
        throw ConfigError("scene.frame_width/frame_height: must be positive");
    for (const OccluderRect& r : occluders)
        if (!(r.right > r.left) || !(r.bottom > r.top))
            throw ConfigError("scene.occluders: degenerate rectangle");
}

Scene simulate(const SceneConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    std::vector<SimObject> objects;
    auto add_object = [&](int spawn, int life, std::vector<MotionSegment> segments, int class_id) {
        SimObject o;
        o.info.id = static_cast<int>(objects.size());
        o.info.class_id = class_id;
        o.info.spawn_frame = spawn;
        o.info.end_frame = std::min(spawn + life, cfg.n_frames);
        o.info.depth = o.info.id;  // later spawns draw in front
        o.segments = std::move(segments);
        objects.push_back(std::move(o));
    };

    if (!cfg.objects.empty()) {
        for (const ScriptedObject& s : cfg.objects) {
            int life = 0;
            for (const MotionSegment& seg : s.segments)
                life += seg.n_frames;
            add_object(s.spawn_frame, life, s.segments, s.class_id);
        }
    } else {
        for (int i = 0; i < cfg.n_objects; ++i) {
            const int life = sample_lifetime(rng, cfg.despawn_prob, cfg.n_frames);
            add_object(0, life, random_segments(rng, cfg, life), 1);
        }
        if (cfg.spawn_prob > 0) {
            for (int t = 1; t < cfg.n_frames; ++t) {
                if (!rng.bernoulli(cfg.spawn_prob))
                    continue;
                const int life = sample_lifetime(rng, cfg.despawn_prob, cfg.n_frames - t);
                add_object(t, life, random_segments(rng, cfg, life), 1);
            }
        }
    }

    std::vector<Corners> static_occluders;
    for (const OccluderRect& r : cfg.occluders)
        static_occluders.push_back(Corners{r.left, r.top, r.right, r.bottom});

    Scene scene;
    for (const SimObject& o : objects)
        scene.tracks.push_back(o.info);

    for (int t = 0; t < cfg.n_frames; ++t) {
        for (const SimObject& o : objects) {
            if (t < o.info.spawn_frame || t >= o.info.end_frame)
                continue;
            const BBox box = o.box_at(t);
            const Corners clip = to_corners(box);

            std::vector<Corners> blockers = static_occluders;
            for (const SimObject& other : objects) {
                if (other.info.depth <= o.info.depth)
                    continue;
                if (t < other.info.spawn_frame || t >= other.info.end_frame)
                    continue;
                blockers.push_back(to_corners(other.box_at(t)));
            }

            GroundTruthRecord rec;
            rec.frame = t;
            rec.object_id = o.info.id;
            rec.box = box;
            const double area = box.w * box.h;
            rec.visibility = std::clamp(1.0 - covered_area(clip, blockers) / area, 0.0, 1.0);
            scene.records.push_back(rec);
        }
    }
    return scene;
}

std::vector<WindowTracks> prepare_training_tracks(const std::vector<GroundTruthRecord>& records,
                                                  int n_frames, double delta_v, int window_stride,
                                                  const std::unordered_map<int, int>& class_ids,
                                                  double vis_threshold) {
    if (n_frames < 2)
        throw std::invalid_argument("prepare_training_tracks: n_frames must be >= 2");
    if (!(delta_v > 0 && delta_v <= 1))
        throw std::invalid_argument("prepare_training_tracks: delta_v outside (0,1]");
    if (window_stride == 0)
        window_stride = n_frames;
    if (window_stride < 1)
        throw std::invalid_argument("prepare_training_tracks: window_stride must be >= 1");

    std::map<int, std::map<int, const GroundTruthRecord*>> by_id;  // id -> frame -> record
    int total_frames = 0;
    for (const GroundTruthRecord& r : records) {
        by_id[r.object_id][r.frame] = &r;
        total_frames = std::max(total_frames, r.frame + 1);
    }

    std::vector<WindowTracks> windows;
    for (int start = 0; start + n_frames <= total_frames; start += window_stride) {
        WindowTracks w;
        w.window_start = start;
        for (const auto& [id, frames] : by_id) {
            TrackWindow track;
            track.id = id;
            const auto cls = class_ids.find(id);
            track.class_id = cls == class_ids.end() ? 1 : cls->second;
            track.seq.boxes.assign(n_frames, BBox{});
            track.seq.visibility.assign(n_frames, 0.0);

            int masked = 0;
            bool any_present = false;
            bool any_visible = false;
            for (int k = 0; k < n_frames; ++k) {
                const auto it = frames.find(start + k);
                if (it == frames.end() || it->second->visibility == 0.0) {
                    ++masked;  // absent or fully occluded: zero-masked
                    if (it != frames.end())
                        any_present = true;
                    continue;
                }
                any_present = true;
                track.seq.boxes[k] = it->second->box;
                track.seq.visibility[k] = it->second->visibility;
                if (it->second->visibility >= vis_threshold)
                    any_visible = true;
            }
            if (!any_present || !any_visible)
                continue;
            if (static_cast<double>(masked) / n_frames > delta_v)
                continue;
            w.tracks.push_back(std::move(track));
        }
        windows.push_back(std::move(w));
    }
    return windows;
}

void NoiseConfig::validate() const {
    if (!(center_sigma >= 0) || !(size_sigma >= 0))
        throw ConfigError("noise.center_sigma/size_sigma: must be non-negative");
    if (!(fn_rate >= 0 && fn_rate <= 1))
        throw ConfigError("noise.fn_rate: must be in [0,1]");
}

void OracleConfig::validate() const {
    if (n_frames < 2)
        throw ConfigError("oracle.n_frames: must be >= 2");
    if (window_stride < 1 || window_stride > n_frames)
        throw ConfigError("oracle.window_stride: must be in [1, n_frames]");
    if (n_classes < 2)
        throw ConfigError("oracle.n_classes: must be >= 2");
    if (!(delta_o > 0 && delta_o < 1))
        throw ConfigError("oracle.delta_o: must be in (0,1)");
    if (!(delta_v > 0 && delta_v <= 1))
        throw ConfigError("oracle.delta_v: must be in (0,1]");
    if (!(vis_threshold >= 0 && vis_threshold <= 1))
        throw ConfigError("oracle.vis_threshold: must be in [0,1]");
    if (!(logit_margin > 0))
        throw ConfigError("oracle.logit_margin: must be positive");
}

OracleOutput oracle_predict(const std::vector<GroundTruthRecord>& records,
                            const std::vector<AnchorTube>& anchors, const OracleConfig& cfg,
                            const NoiseConfig& noise,
                            const std::unordered_map<int, int>& class_ids) {
    cfg.validate();
    noise.validate();
    Rng rng(noise.seed);
    const double margin = cfg.logit_margin;

    OracleOutput out;
    out.basis = TimeBasis::normalized(cfg.n_frames);

    const std::vector<WindowTracks> windows = prepare_training_tracks(
        records, cfg.n_frames, cfg.delta_v, cfg.window_stride, class_ids, cfg.vis_threshold);

    const int n_anchors = static_cast<int>(anchors.size());
    for (const WindowTracks& window : windows) {
        // Detection noise, then drop tracks left without enough frames to fit.
        std::vector<TrackWindow> noisy;
        std::unordered_map<int, const TrackWindow*> by_id;
        for (const TrackWindow& track : window.tracks) {
            TrackWindow t = track;
            int usable = 0;
            for (int k = 0; k < cfg.n_frames; ++k) {
                if (t.seq.visibility[k] < cfg.vis_threshold)
                    continue;
                if (noise.fn_rate > 0 && rng.bernoulli(noise.fn_rate)) {
                    t.seq.boxes[k] = BBox{};
                    t.seq.visibility[k] = 0;
                    continue;
                }
                if (noise.center_sigma > 0) {
                    t.seq.boxes[k].cx += noise.center_sigma * rng.normal();
                    t.seq.boxes[k].cy += noise.center_sigma * rng.normal();
                }
                if (noise.size_sigma > 0) {
                    t.seq.boxes[k].w = std::max(t.seq.boxes[k].w + noise.size_sigma * rng.normal(), 1e-4);
                    t.seq.boxes[k].h = std::max(t.seq.boxes[k].h + noise.size_sigma * rng.normal(), 1e-4);
                }
                ++usable;
            }
            if (usable >= 3)
                noisy.push_back(std::move(t));
        }
        for (const TrackWindow& t : noisy)
            by_id[t.id] = &t;

        PredictionWindow pw;
        pw.window_start = window.window_start;
        pw.n_frames = cfg.n_frames;
        pw.motion.assign(n_anchors, MotionParams::Zero());
        pw.class_scores = Eigen::MatrixXd::Constant(n_anchors, cfg.n_classes, -margin);
        pw.class_scores.col(0).setConstant(margin);
        pw.vis_scores = Eigen::MatrixXd::Constant(n_anchors, 2 * cfg.n_frames, -margin);
        for (int k = 0; k < cfg.n_frames; ++k)
            pw.vis_scores.col(2 * k).setConstant(margin);  // default: confidently invisible

        const MatchResult matched = match(anchors, noisy, cfg.delta_o, cfg.vis_threshold);
        for (int i = 0; i < n_anchors; ++i) {
            if (!matched.anchors[i].positive)
                continue;
            const TrackWindow& track = *by_id.at(*matched.anchors[i].best_track);
            if (track.class_id < 1 || track.class_id >= cfg.n_classes)
                throw std::invalid_argument("oracle_predict: class id " +
                                            std::to_string(track.class_id) + " out of range");
            const MaskedEncodedSeq enc = encode_track(anchors[i], track.seq, cfg.vis_threshold);
            pw.motion[i] = fit(enc, out.basis, 3).params;

            pw.class_scores.row(i).setConstant(-margin);
            pw.class_scores(i, track.class_id) = margin;
            for (int k = 0; k < cfg.n_frames; ++k) {
                const bool visible = track.seq.visibility[k] >= cfg.vis_threshold;
                pw.vis_scores(i, 2 * k) = visible ? -margin : margin;
                pw.vis_scores(i, 2 * k + 1) = visible ? margin : -margin;
            }
        }
        out.windows.push_back(std::move(pw));
    }
    return out;
}

}  // namespace tubetrack
