#pragma once

#include <map>
#include <string>
#include <vector>

#include "tubetrack/geometry.hpp"

namespace tubetrack {

struct EvalConfig {
    double iou_threshold = 0.5;
    double vis_threshold = 0.5;
    // Strict mode: keep low-visibility ground truth in matching and FN
    // counting instead of treating it as unobservable.
    bool include_invisible_gt = false;
    // Strict mode: rebuild the matching from scratch every frame instead of
    // carrying valid correspondences over (the CLEAR MOT convention).
    bool rematch_each_frame = false;

    void validate() const;
};

struct TrackedBox {
    BBox box;
    double visibility = 1;
};

// id -> frame -> box. The carrier for both ground truth and tracker output.
using TrajectoryMap = std::map<int, std::map<int, TrackedBox>>;

struct EvalResult {
    double idf1 = 0, idp = 0, idr = 0;
    double recall = 0, precision = 0;
    double mota = 0, motp = 0;
    long long gt = 0, mt = 0, pt = 0, ml = 0;
    long long fp = 0, fn = 0, ids = 0, fm = 0;

    // Raw counts kept so sequence batches aggregate before re-deriving the
    // ratio metrics.
    long long n_gt_boxes = 0, n_pred_boxes = 0, n_matches = 0;
    long long idtp = 0, idfp = 0, idfn = 0;
    double iou_sum = 0;
};

// CLEAR MOT + identity metrics of a tracker output against ground truth.
// Per frame, correspondences still valid at iou >= threshold persist; the
// rest are Hungarian-matched maximizing IOU. Ground-truth boxes below
// vis_threshold are unobservable by default: excluded from matching and FN,
// and predictions overlapping them are ignored rather than counted FP.
EvalResult evaluate(const TrajectoryMap& gt, const TrajectoryMap& pred,
                    const EvalConfig& cfg = {});

struct SequenceData {
    std::string name;
    TrajectoryMap gt;
    TrajectoryMap pred;
};

struct EvalTable {
    std::vector<std::pair<std::string, EvalResult>> rows;
    EvalResult average;  // ratio metrics recomputed from the summed counts
};

EvalTable evaluate_per_sequence(const std::vector<SequenceData>& batch,
                                const EvalConfig& cfg = {});

// Renders rows + average in the usual benchmark column order.
std::string format_eval_table(const EvalTable& table);
std::string format_eval_kv(const EvalResult& result);

}  // namespace tubetrack
