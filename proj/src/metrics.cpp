#include "tubetrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "text_util.hpp"
#include "tubetrack/errors.hpp"
#include "tubetrack/hungarian.hpp"

namespace tubetrack {

void EvalConfig::validate() const {
    if (!(iou_threshold > 0 && iou_threshold < 1))
        throw ConfigError("eval.iou_threshold: must be in (0,1)");
    if (!(vis_threshold >= 0 && vis_threshold <= 1))
        throw ConfigError("eval.vis_threshold: must be in [0,1]");
}

namespace {

struct FrameEntry {
    int id;
    const TrackedBox* box;
};

// Ratio metrics from the raw counts.
void finalize(EvalResult& r) {
    r.mota = 1.0 - static_cast<double>(r.fp + r.fn + r.ids) /
                       static_cast<double>(std::max<long long>(r.n_gt_boxes, 1));
    r.motp = r.n_matches > 0 ? r.iou_sum / static_cast<double>(r.n_matches) : 0.0;
    r.recall = r.n_gt_boxes > 0 ? static_cast<double>(r.n_matches) / r.n_gt_boxes : 0.0;
    r.precision = r.n_pred_boxes > 0 ? static_cast<double>(r.n_matches) / r.n_pred_boxes : 0.0;
    const long long idp_den = r.idtp + r.idfp;
    const long long idr_den = r.idtp + r.idfn;
    r.idp = idp_den > 0 ? static_cast<double>(r.idtp) / idp_den : 0.0;
    r.idr = idr_den > 0 ? static_cast<double>(r.idtp) / idr_den : 0.0;
    const long long f1_den = 2 * r.idtp + r.idfp + r.idfn;
    r.idf1 = f1_den > 0 ? static_cast<double>(2 * r.idtp) / f1_den : 0.0;
}

}  // namespace

EvalResult evaluate(const TrajectoryMap& gt, const TrajectoryMap& pred, const EvalConfig& cfg) {
    cfg.validate();

    // frame -> entries, for both sides.
    std::map<int, std::vector<FrameEntry>> gt_frames, pred_frames;
    for (const auto& [id, frames] : gt)
        for (const auto& [frame, box] : frames)
            gt_frames[frame].push_back(FrameEntry{id, &box});
    for (const auto& [id, frames] : pred)
        for (const auto& [frame, box] : frames)
            pred_frames[frame].push_back(FrameEntry{id, &box});

    std::set<int> all_frames;
    for (const auto& [frame, _] : gt_frames)
        all_frames.insert(frame);
    for (const auto& [frame, _] : pred_frames)
        all_frames.insert(frame);

    EvalResult res;
    std::unordered_map<int, int> last_match;        // gt id -> last matched pred id
    std::unordered_map<int, bool> prev_matched;     // gt id -> matched at its previous counted frame
    std::unordered_map<int, long long> gt_len, gt_hits, pred_len;
    std::map<std::pair<int, int>, long long> pair_hits;  // (gt id, pred id) -> frames with iou >= thr

    for (int frame : all_frames) {
        const auto git = gt_frames.find(frame);
        const auto pit = pred_frames.find(frame);

        std::vector<FrameEntry> included, excluded;
        if (git != gt_frames.end()) {
            for (const FrameEntry& e : git->second) {
                if (cfg.include_invisible_gt || e.box->visibility >= cfg.vis_threshold)
                    included.push_back(e);
                else
                    excluded.push_back(e);
            }
        }
        std::vector<FrameEntry> preds;
        if (pit != pred_frames.end())
            preds = pit->second;

        const std::size_t ng = included.size();
        const std::size_t np = preds.size();
        Eigen::MatrixXd ious(ng, np);
        for (std::size_t g = 0; g < ng; ++g)
            for (std::size_t p = 0; p < np; ++p)
                ious(g, p) = iou(included[g].box->box, preds[p].box->box);

        std::vector<int> match_of_gt(ng, -1);   // index into preds
        std::vector<bool> pred_taken(np, false);

        // Correspondence persistence: keep last frame's pairing while it is
        // still valid at the IOU threshold.
        if (!cfg.rematch_each_frame) {
            for (std::size_t g = 0; g < ng; ++g) {
                const auto lm = last_match.find(included[g].id);
                if (lm == last_match.end())
                    continue;
                for (std::size_t p = 0; p < np; ++p) {
                    if (pred_taken[p] || preds[p].id != lm->second)
                        continue;
                    if (ious(g, p) >= cfg.iou_threshold) {
                        match_of_gt[g] = static_cast<int>(p);
                        pred_taken[p] = true;
                    }
                    break;
                }
            }
        }

        // Hungarian on the remainder, maximizing IOU; sub-threshold pairs are
        // priced out and dropped afterwards.
        std::vector<std::size_t> rem_g, rem_p;
        for (std::size_t g = 0; g < ng; ++g)
            if (match_of_gt[g] < 0)
                rem_g.push_back(g);
        for (std::size_t p = 0; p < np; ++p)
            if (!pred_taken[p])
                rem_p.push_back(p);
        if (!rem_g.empty() && !rem_p.empty()) {
            const double big = 2.0 * (std::min(rem_g.size(), rem_p.size()) + 1.0);
            Eigen::MatrixXd cost(rem_g.size(), rem_p.size());
            for (std::size_t a = 0; a < rem_g.size(); ++a)
                for (std::size_t b = 0; b < rem_p.size(); ++b) {
                    const double v = ious(rem_g[a], rem_p[b]);
                    cost(a, b) = v >= cfg.iou_threshold ? 1.0 - v : big;
                }
            const Assignment assignment = hungarian(cost);
            for (std::size_t a = 0; a < rem_g.size(); ++a) {
                const int b = assignment.row_to_col[a];
                if (b < 0 || ious(rem_g[a], rem_p[b]) < cfg.iou_threshold)
                    continue;
                match_of_gt[rem_g[a]] = static_cast<int>(rem_p[b]);
                pred_taken[rem_p[b]] = true;
            }
        }

        // Unmatched predictions overlapping unobservable ground truth are
        // ignored: neither FP nor part of the identity-metric universe.
        std::vector<bool> pred_ignored(np, false);
        for (std::size_t p = 0; p < np; ++p) {
            if (pred_taken[p])
                continue;
            for (const FrameEntry& e : excluded) {
                if (iou(e.box->box, preds[p].box->box) >= cfg.iou_threshold) {
                    pred_ignored[p] = true;
                    break;
                }
            }
        }

        for (std::size_t p = 0; p < np; ++p) {
            if (pred_ignored[p])
                continue;
            ++res.n_pred_boxes;
            ++pred_len[preds[p].id];
            if (!pred_taken[p])
                ++res.fp;
        }

        for (std::size_t g = 0; g < ng; ++g) {
            ++res.n_gt_boxes;
            ++gt_len[included[g].id];
            for (std::size_t p = 0; p < np; ++p)
                if (!pred_ignored[p] && ious(g, p) >= cfg.iou_threshold)
                    ++pair_hits[{included[g].id, preds[p].id}];

            const int p = match_of_gt[g];
            const int gid = included[g].id;
            if (p >= 0) {
                ++res.n_matches;
                ++gt_hits[gid];
                res.iou_sum += ious(g, p);
                const auto lm = last_match.find(gid);
                if (lm != last_match.end() && lm->second != preds[p].id)
                    ++res.ids;
                last_match[gid] = preds[p].id;
            } else {
                ++res.fn;
            }

            // FM counts matched -> unmatched transitions along the counted
            // timeline of each ground-truth trajectory.
            const auto prev = prev_matched.find(gid);
            if (prev != prev_matched.end() && prev->second && p < 0)
                ++res.fm;
            prev_matched[gid] = p >= 0;
        }
    }

    // MT / PT / ML over per-trajectory coverage.
    for (const auto& [gid, len] : gt_len) {
        if (len == 0)
            continue;
        ++res.gt;
        const double coverage = static_cast<double>(gt_hits[gid]) / static_cast<double>(len);
        if (coverage >= 0.8)
            ++res.mt;
        else if (coverage <= 0.2)
            ++res.ml;
        else
            ++res.pt;
    }

    // Identity metrics: min-cost bipartite matching of gt ids to pred ids
    // over whole-sequence overlap counts.
    std::vector<int> gids, pids;
    for (const auto& [gid, len] : gt_len)
        if (len > 0)
            gids.push_back(gid);
    for (const auto& [pid, len] : pred_len)
        if (len > 0)
            pids.push_back(pid);
    long long idtp = 0;
    if (!gids.empty() && !pids.empty()) {
        Eigen::MatrixXd cost(gids.size(), pids.size());
        for (std::size_t a = 0; a < gids.size(); ++a)
            for (std::size_t b = 0; b < pids.size(); ++b) {
                const auto it = pair_hits.find({gids[a], pids[b]});
                cost(a, b) = it == pair_hits.end() ? 0.0 : -static_cast<double>(it->second);
            }
        const Assignment assignment = hungarian(cost);
        for (std::size_t a = 0; a < gids.size(); ++a)
            if (assignment.row_to_col[a] >= 0)
                idtp += -static_cast<long long>(cost(a, assignment.row_to_col[a]));
    }
    res.idtp = idtp;
    res.idfn = res.n_gt_boxes - idtp;
    res.idfp = res.n_pred_boxes - idtp;

    finalize(res);
    return res;
}

EvalTable evaluate_per_sequence(const std::vector<SequenceData>& batch, const EvalConfig& cfg) {
    EvalTable table;
    EvalResult& avg = table.average;
    for (const SequenceData& seq : batch) {
        EvalResult r = evaluate(seq.gt, seq.pred, cfg);
        avg.gt += r.gt;
        avg.mt += r.mt;
        avg.pt += r.pt;
        avg.ml += r.ml;
        avg.fp += r.fp;
        avg.fn += r.fn;
        avg.ids += r.ids;
        avg.fm += r.fm;
        avg.n_gt_boxes += r.n_gt_boxes;
        avg.n_pred_boxes += r.n_pred_boxes;
        avg.n_matches += r.n_matches;
        avg.idtp += r.idtp;
        avg.idfp += r.idfp;
        avg.idfn += r.idfn;
        avg.iou_sum += r.iou_sum;
        table.rows.emplace_back(seq.name, std::move(r));
    }
    finalize(avg);
    return table;
}

namespace {

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * v);
    return buf;
}

void format_row(std::ostringstream& os, const std::string& name, const EvalResult& r) {
    os << name << '\t' << pct(r.idf1) << '\t' << pct(r.idp) << '\t' << pct(r.idr) << '\t'
       << pct(r.recall) << '\t' << pct(r.precision) << '\t' << r.gt << '\t' << r.mt << '\t'
       << r.pt << '\t' << r.ml << '\t' << r.fp << '\t' << r.fn << '\t' << r.ids << '\t' << r.fm
       << '\t' << pct(r.mota) << '\t' << pct(r.motp) << '\n';
}

}  // namespace

std::string format_eval_table(const EvalTable& table) {
    std::ostringstream os;
    os << "Seq\tIDF1\tIDP\tIDR\tRcll\tPrcn\tGT\tMT\tPT\tML\tFP\tFN\tIDs\tFM\tMOTA\tMOTP\n";
    for (const auto& [name, r] : table.rows)
        format_row(os, name, r);
    format_row(os, "Average", table.average);
    return os.str();
}

std::string format_eval_kv(const EvalResult& r) {
    using detail::format_double;
    std::ostringstream os;
    os << "idf1 " << format_double(r.idf1) << '\n'
       << "idp " << format_double(r.idp) << '\n'
       << "idr " << format_double(r.idr) << '\n'
       << "recall " << format_double(r.recall) << '\n'
       << "precision " << format_double(r.precision) << '\n'
       << "gt " << r.gt << '\n'
       << "mt " << r.mt << '\n'
       << "pt " << r.pt << '\n'
       << "ml " << r.ml << '\n'
       << "fp " << r.fp << '\n'
       << "fn " << r.fn << '\n'
       << "ids " << r.ids << '\n'
       << "fm " << r.fm << '\n'
       << "mota " << format_double(r.mota) << '\n'
       << "motp " << format_double(r.motp) << '\n';
    return os.str();
}

}  // namespace tubetrack
