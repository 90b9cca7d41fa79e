#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "tubetrack/loss.hpp"

namespace tubetrack {

// One quadratic path piece over local frames u = 0..n_frames-1. Coefficient
// arrays are (quadratic, linear, constant); cx_cubic/cy_cubic add an optional
// u^3 term so model mismatch can be exercised deliberately.
struct MotionSegment {
    int n_frames = 0;
    std::array<double, 3> cx{0, 0, 0};
    std::array<double, 3> cy{0, 0, 0};
    std::array<double, 3> log_w{0, 0, 0};
    std::array<double, 3> log_h{0, 0, 0};
    double cx_cubic = 0;
    double cy_cubic = 0;
};

struct ScriptedObject {
    int spawn_frame = 0;
    int class_id = 1;
    std::vector<MotionSegment> segments;  // consecutive from spawn_frame
};

struct OccluderRect {
    double left = 0, top = 0, right = 0, bottom = 0;
};

// Box-level scene description. A non-empty `objects` list scripts the scene
// exactly; otherwise n_objects random objects are generated from the bounds
// below. The seed fully determines the output either way.
struct SceneConfig {
    int n_objects = 20;
    int n_frames = 320;
    double frame_width = 1920;
    double frame_height = 1080;
    std::uint64_t seed = 0;

    int segment_frames = 64;    // >= window length so in-window motion stays quadratic
    double min_size = 0.04;     // box side as a frame fraction
    double max_size = 0.12;
    double max_speed = 4e-3;    // center drift per frame
    double max_accel = 5e-5;    // center drift change per frame^2
    double size_drift = 2e-3;   // log-size drift per frame
    double spawn_prob = 0.0;    // chance of one extra object appearing per frame
    double despawn_prob = 0.0;  // per-object per-frame end chance
    bool cubic_segments = false;

    std::vector<OccluderRect> occluders;  // static, in front of every object
    std::vector<ScriptedObject> objects;

    void validate() const;
};

// One live object at one frame. Visibility is the exact unoccluded area
// fraction; fully occluded objects still emit records.
struct GroundTruthRecord {
    int frame = 0;
    int object_id = 0;
    BBox box;
    double visibility = 1;
};

struct TrackInfo {
    int id = 0;
    int class_id = 1;
    int spawn_frame = 0;
    int end_frame = 0;  // exclusive
    int depth = 0;      // larger depth occludes smaller
};

struct Scene {
    std::vector<GroundTruthRecord> records;  // sorted by (frame, object_id)
    std::vector<TrackInfo> tracks;
};

Scene simulate(const SceneConfig& cfg);

// Ground-truth tracks cut into n_frames windows. Frames that are absent or
// fully occluded (visibility exactly 0) are zero-masked; a track is dropped
// from a window when its masked-frame ratio exceeds delta_v or when it has no
// visible box left to match on.
struct WindowTracks {
    int window_start = 0;
    std::vector<TrackWindow> tracks;
};

std::vector<WindowTracks> prepare_training_tracks(
    const std::vector<GroundTruthRecord>& records, int n_frames, double delta_v = 0.5,
    int window_stride = 0,  // 0 -> n_frames (non-overlapping)
    const std::unordered_map<int, int>& class_ids = {}, double vis_threshold = 0.5);

// Detection-noise stand-in for the CNN's imperfections.
struct NoiseConfig {
    double center_sigma = 0;  // box center jitter, frame fraction
    double size_sigma = 0;    // box size jitter, frame fraction
    double fn_rate = 0;       // per-frame dropout probability
    std::uint64_t seed = 0;

    void validate() const;
};

struct OracleConfig {
    int n_frames = 16;
    int window_stride = 8;
    int n_classes = 2;
    double delta_o = 0.5;
    double delta_v = 0.5;
    double vis_threshold = 0.5;
    double logit_margin = 10.0;

    void validate() const;
};

struct OracleOutput {
    std::vector<PredictionWindow> windows;
    TimeBasis basis;
};

// CNN stand-in: matches ground-truth tracks to anchors, perturbs boxes per
// NoiseConfig, least-squares fits the motion parameters, and emits confident
// class/visibility logits (+margin for the truth, -margin otherwise).
// Windows that leave a track underdetermined fall back to background anchors.
// class_ids maps object id -> class (default 1).
OracleOutput oracle_predict(const std::vector<GroundTruthRecord>& records,
                            const std::vector<AnchorTube>& anchors,
                            const OracleConfig& cfg, const NoiseConfig& noise = {},
                            const std::unordered_map<int, int>& class_ids = {});

}  // namespace tubetrack
