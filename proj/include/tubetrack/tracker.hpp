#pragma once

#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "tubetrack/hungarian.hpp"
#include "tubetrack/loss.hpp"

namespace tubetrack {

struct TrackerConfig {
    int n_frames = 16;
    int window_stride = 8;       // frames between consecutive window starts
    double delta_c = 0.4;        // tube confidence floor
    double delta_nms = 0.3;      // TNMS tracklet-IOU ceiling
    double delta_assoc = 0.2;    // association IOU floor
    int max_misses = 1;          // windows a trajectory survives unmatched
    double vis_threshold = 0.5;

    void validate() const;
};

// A decoded, confidence-scored window tube. Visibility holds the predicted
// visible probability per frame.
struct Tracklet {
    BoxSeq seq;
    int class_id = 1;  // never 0; background tubes are what filtering removes
    double confidence = 0;
    int window_start = 0;
};

struct TrajectoryRecord {
    BBox box;
    double visibility = 1;
    double confidence = 1;
};

struct Trajectory {
    int id = 0;
    std::map<int, TrajectoryRecord> records;  // frame -> record
    int last_window = -1;                     // window ordinal of the last match
    int misses = 0;

    int last_frame() const { return records.empty() ? -1 : records.rbegin()->first; }
};

struct TrackSet {
    std::vector<Trajectory> active;
    std::vector<Trajectory> retired;
    int next_id = 0;
    int window_index = 0;  // ordinal of the next association round
    int last_window_start = std::numeric_limits<int>::min();
};

// Keeps exactly the tracklets with confidence >= delta_c, order preserved.
std::vector<Tracklet> filter_tubes(const std::vector<Tracklet>& candidates, double delta_c);

// Tube non-maximum suppression, greedy per class in descending confidence: a
// tube survives iff its tracklet IOU with every already-kept tube of its
// class stays at or below delta_nms. Survivors keep their input order.
std::vector<Tracklet> tnms(const std::vector<Tracklet>& tubes, double delta_nms,
                           double vis_threshold = 0.5);

// One candidate tracklet per anchor from raw predictions: boxes from the
// motion head, visibility from the visibility head, confidence and class from
// the class head (max over non-background classes).
std::vector<Tracklet> decode_window(const PredictionWindow& pred,
                                    const std::vector<AnchorTube>& anchors,
                                    const TimeBasis& basis);

// Associates one window's tracklets with the live trajectories: Hungarian
// assignment on 1 - Psi where Psi is the visibility-aware tracklet IOU over
// shared frames (motion-extrapolated trajectory boxes when the window shares
// no frame). Matches append boxes (the tracklet wins shared frames),
// unmatched tracklets spawn fresh ids, and trajectories unmatched for more
// than max_misses rounds retire.
void associate(TrackSet& tracks, const std::vector<Tracklet>& tracklets,
               const TrackerConfig& cfg);

struct OutputRecord {
    int frame = 0;
    int id = 0;
    BBox box;
    double confidence = 1;
    double visibility = 1;
};

struct TrackOutput {
    TrackSet tracks;
    std::vector<OutputRecord> records;  // sorted by (frame, id)
};

// Full deployment pipeline over in-order windows of raw predictions:
// decode -> filter -> TNMS -> associate, then the flattened per-frame records.
TrackOutput run(const std::vector<PredictionWindow>& windows,
                const std::vector<AnchorTube>& anchors, const TimeBasis& basis,
                const TrackerConfig& cfg);

// Same pipeline entered after decoding, for callers that already hold
// tracklet lists per window start.
TrackOutput run(const std::vector<std::pair<int, std::vector<Tracklet>>>& windows,
                const TrackerConfig& cfg);

}  // namespace tubetrack
