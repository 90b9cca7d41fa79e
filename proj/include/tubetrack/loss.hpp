#pragma once

#include <Eigen/Dense>
#include <unordered_map>
#include <vector>

#include "tubetrack/motion.hpp"

namespace tubetrack {

// Raw per-window network outputs, or an oracle invocation shaped like them.
// Class 0 is background. Class scores are per tube; visibility scores are per
// tube and frame, stored as frame-major (invisible, visible) pairs.
struct PredictionWindow {
    int window_start = 0;
    int n_frames = 16;
    std::vector<MotionParams> motion;  // n_anchors entries
    Eigen::MatrixXd class_scores;      // n_anchors x n_classes, raw scores
    Eigen::MatrixXd vis_scores;        // n_anchors x 2*n_frames

    int n_anchors() const { return static_cast<int>(motion.size()); }
    int n_classes() const { return static_cast<int>(class_scores.cols()); }
    double vis_score(int anchor, int frame, int q) const { return vis_scores(anchor, 2 * frame + q); }
    void validate() const;
};

struct LossWeights {
    double alpha = 1.0;
    double beta = 1.0;
};

struct LossReport {
    double total = 0;
    double motion = 0;
    double classification = 0;
    double visibility = 0;
    int n_pos = 0;
    bool empty_window = false;  // no positive anchors; total defined as 0
};

// 0.5 x^2 inside |x| < 1, |x| - 0.5 outside.
double smooth_l1(double x);

// Ground-truth encodings for the positive anchors, keyed by anchor index.
using EncodedGroundTruth = std::unordered_map<int, MaskedEncodedSeq>;

// Sum over frames, positive anchors and coordinates of the regression penalty
// between the ground-truth encoding and the motion-model evaluation; masked
// frames are excluded. use_smooth_l1=false switches to plain L1 for
// exact-formula comparison.
double motion_loss(const PredictionWindow& pred, const EncodedGroundTruth& gt,
                   const MatchResult& match, const TimeBasis& basis,
                   bool use_smooth_l1 = true);

// Softmax cross-entropy over classes with hard negative mining at
// neg_pos_ratio. Scores are per tube, so the per-frame sum multiplies the
// per-tube term by n_frames.
double classification_loss(const PredictionWindow& pred, const MatchResult& match,
                           const std::unordered_map<int, int>& gt_classes,
                           double neg_pos_ratio = 3.0);

// Softmax cross-entropy of the per-frame visible/invisible head, summed over
// positive anchors only. The target is visible iff the ground-truth
// visibility reaches vis_threshold.
double visibility_loss(const PredictionWindow& pred, const MatchResult& match,
                       const std::unordered_map<int, VisibilitySeq>& gt_visibility,
                       double vis_threshold = 0.5);

// (alpha*motion + beta*classification + visibility) / max(n_pos, 1), with the
// empty-window flag raised when n_pos == 0.
LossReport total_loss(double motion, double classification, double visibility,
                      const LossWeights& weights, int n_pos);

}  // namespace tubetrack
