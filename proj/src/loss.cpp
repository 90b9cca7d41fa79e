#include "tubetrack/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tubetrack/errors.hpp"

namespace tubetrack {

void PredictionWindow::validate() const {
    const int n = n_anchors();
    if (class_scores.rows() != n || vis_scores.rows() != n)
        throw std::invalid_argument("prediction window: score row count != anchor count");
    if (class_scores.cols() < 2)
        throw std::invalid_argument("prediction window: need background plus at least one class");
    if (vis_scores.cols() != 2 * n_frames)
        throw std::invalid_argument("prediction window: vis_scores must have 2*n_frames columns");
    if (!class_scores.allFinite() || !vis_scores.allFinite())
        throw std::invalid_argument("prediction window: non-finite scores");
    for (const MotionParams& p : motion)
        if (!p.allFinite())
            throw std::invalid_argument("prediction window: non-finite motion parameters");
}

double smooth_l1(double x) {
    if (!std::isfinite(x))
        throw std::invalid_argument("smooth_l1: non-finite input");
    const double a = std::abs(x);
    return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

namespace {

// log softmax with max-subtraction; oracles match this to 1e-10.
double log_softmax_at(const Eigen::Ref<const Eigen::RowVectorXd>& scores, Eigen::Index idx) {
    const double m = scores.maxCoeff();
    const double lse = std::log((scores.array() - m).exp().sum());
    return scores(idx) - m - lse;
}

}  // namespace

double motion_loss(const PredictionWindow& pred, const EncodedGroundTruth& gt,
                   const MatchResult& match, const TimeBasis& basis, bool use_smooth_l1) {
    pred.validate();
    if (match.anchors.size() != static_cast<std::size_t>(pred.n_anchors()))
        throw std::invalid_argument("motion_loss: match result size != anchor count");

    double loss = 0;
    for (std::size_t i = 0; i < match.anchors.size(); ++i) {
        if (!match.anchors[i].positive)
            continue;
        const auto it = gt.find(static_cast<int>(i));
        if (it == gt.end())
            throw ContractViolation("motion_loss: positive anchor " + std::to_string(i) +
                                    " has no ground-truth encoding");
        const MaskedEncodedSeq& seq = it->second;
        for (std::size_t t = 0; t < seq.size() && t < static_cast<std::size_t>(pred.n_frames); ++t) {
            if (!seq[t])
                continue;
            const EncodedBox g = *seq[t];
            const EncodedBox ghat = eval_encoded(pred.motion[i], basis.tau(static_cast<int>(t)));
            const double d[4] = {g.g_cx - ghat.g_cx, g.g_cy - ghat.g_cy,
                                 g.g_h - ghat.g_h, g.g_w - ghat.g_w};
            for (double x : d)
                loss += use_smooth_l1 ? smooth_l1(x) : std::abs(x);
        }
    }
    return loss;
}

double classification_loss(const PredictionWindow& pred, const MatchResult& match,
                           const std::unordered_map<int, int>& gt_classes,
                           double neg_pos_ratio) {
    pred.validate();
    if (match.anchors.size() != static_cast<std::size_t>(pred.n_anchors()))
        throw std::invalid_argument("classification_loss: match result size != anchor count");
    if (!(neg_pos_ratio >= 0))
        throw std::invalid_argument("classification_loss: neg_pos_ratio must be >= 0");

    const int n_classes = pred.n_classes();
    double pos_term = 0;
    int n_pos = 0;
    std::vector<std::pair<double, int>> neg_losses;  // (-log background prob, anchor)
    for (std::size_t i = 0; i < match.anchors.size(); ++i) {
        const auto row = pred.class_scores.row(static_cast<Eigen::Index>(i));
        if (match.anchors[i].positive) {
            const auto it = gt_classes.find(*match.anchors[i].best_track);
            if (it == gt_classes.end())
                throw ContractViolation("classification_loss: no class for track " +
                                        std::to_string(*match.anchors[i].best_track));
            if (it->second < 0 || it->second >= n_classes)
                throw std::invalid_argument("classification_loss: class id " +
                                            std::to_string(it->second) + " out of range");
            pos_term += -log_softmax_at(row, it->second);
            ++n_pos;
        } else {
            neg_losses.emplace_back(-log_softmax_at(row, 0), static_cast<int>(i));
        }
    }

    // Hard negative mining: the highest-loss negatives, at most ratio * n_pos
    // of them; ties resolved by anchor index.
    const std::size_t n_sel =
        std::min(neg_losses.size(), static_cast<std::size_t>(std::floor(neg_pos_ratio * n_pos)));
    std::sort(neg_losses.begin(), neg_losses.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first > b.first;
        return a.second < b.second;
    });
    double neg_term = 0;
    for (std::size_t k = 0; k < n_sel; ++k)
        neg_term += neg_losses[k].first;

    return pred.n_frames * (pos_term + neg_term);
}

double visibility_loss(const PredictionWindow& pred, const MatchResult& match,
                       const std::unordered_map<int, VisibilitySeq>& gt_visibility,
                       double vis_threshold) {
    pred.validate();
    if (match.anchors.size() != static_cast<std::size_t>(pred.n_anchors()))
        throw std::invalid_argument("visibility_loss: match result size != anchor count");

    double loss = 0;
    for (std::size_t i = 0; i < match.anchors.size(); ++i) {
        if (!match.anchors[i].positive)
            continue;
        const auto it = gt_visibility.find(*match.anchors[i].best_track);
        if (it == gt_visibility.end())
            throw ContractViolation("visibility_loss: no visibility for track " +
                                    std::to_string(*match.anchors[i].best_track));
        if (it->second.size() != static_cast<std::size_t>(pred.n_frames))
            throw std::invalid_argument("visibility_loss: visibility length != n_frames");
        for (int t = 0; t < pred.n_frames; ++t) {
            const int q = it->second[t] >= vis_threshold ? 1 : 0;
            Eigen::RowVector2d pair(pred.vis_score(static_cast<int>(i), t, 0),
                                    pred.vis_score(static_cast<int>(i), t, 1));
            loss += -log_softmax_at(pair, q);
        }
    }
    return loss;
}

LossReport total_loss(double motion, double classification, double visibility,
                      const LossWeights& weights, int n_pos) {
    if (motion < 0 || classification < 0 || visibility < 0)
        throw ContractViolation("total_loss: negative sub-loss");
    if (n_pos < 0)
        throw std::invalid_argument("total_loss: negative n_pos");
    if (!(weights.alpha > 0) || !(weights.beta > 0))
        throw std::invalid_argument("total_loss: loss weights must be positive");

    LossReport report;
    report.motion = motion;
    report.classification = classification;
    report.visibility = visibility;
    report.n_pos = n_pos;
    report.empty_window = n_pos == 0;
    report.total = (weights.alpha * motion + weights.beta * classification + visibility) /
                   std::max(n_pos, 1);
    return report;
}

}  // namespace tubetrack
