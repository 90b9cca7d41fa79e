#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tubetrack/anchors.hpp"
#include "tubetrack/loss.hpp"
#include "tubetrack/simulator.hpp"
#include "tubetrack/tracker.hpp"

namespace tubetrack {

struct LossConfig {
    LossWeights weights;
    double neg_pos_ratio = 3.0;
    bool smooth_l1 = true;

    void validate() const;
};

struct PathsConfig {
    std::string gt;
    std::string tubes;
    std::string output;
    std::string manifest;
};

// Everything a run needs, serializable as strict JSON (unknown keys are
// rejected). n_frames is shared across the anchor grid, the tracker, the
// oracle and the time basis.
struct RunConfig {
    int n_frames = 16;
    int n_classes = 2;
    AnchorConfig anchor;
    TrackerConfig tracker;
    LossConfig loss;
    OracleConfig oracle;
    SceneConfig scene;
    NoiseConfig noise;
    TimeBasis basis = TimeBasis::normalized(16);
    PathsConfig paths;

    void validate() const;
    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::filesystem::path& path);
};

// Scene manifest: the config echo plus the seed that produced a dataset.
void write_manifest(const RunConfig& cfg, const std::filesystem::path& path);
RunConfig read_manifest(const std::filesystem::path& path);

}  // namespace tubetrack
