#pragma once

#include <filesystem>
#include <vector>

#include "tubetrack/loss.hpp"

namespace tubetrack {

// On-disk carrier for per-window predictions, so external exporters can feed
// the tracker without this codebase. Versioned text format:
//
//   tubetrack-tubes 1
//   anchors <N> frames <NF> classes <NC>
//   basis <tau0> <dtau>
//   window <start>
//   <anchor_index> <12 motion> <NC class scores> <2*NF vis scores>
//   ...
//
// Motion is row-major (w, h, cx, cy) x (quadratic, linear, constant); vis
// scores are frame-major (invisible, visible) pairs. Values use shortest
// round-trip decimals, so the round trip is bit-exact. Anchors absent from a
// window take the implicit background prediction: zero motion, class scores
// +10 background / -10 otherwise, and (+10, -10) per-frame visibility.
struct TubeFile {
    int n_anchors = 0;
    int n_frames = 16;
    int n_classes = 2;
    TimeBasis basis;
    std::vector<PredictionWindow> windows;
};

void write_tube_file(const TubeFile& tubes, const std::filesystem::path& path);
TubeFile read_tube_file(const std::filesystem::path& path);

// The implicit row written for (and restored to) unlisted anchors.
void background_prediction(PredictionWindow& window, int anchor);

}  // namespace tubetrack
