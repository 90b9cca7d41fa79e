#pragma once

#include <filesystem>
#include <vector>

#include "tubetrack/metrics.hpp"
#include "tubetrack/simulator.hpp"
#include "tubetrack/tracker.hpp"

namespace tubetrack {

// Ground-truth CSV: frame, id, left, top, right, bottom, visibility. Rows
// with 18+ columns follow the wide vehicle-dataset layout instead (box at
// indices 2..5, visibility at 17); trailing columns are ignored either way.
// Pixel coordinates are divided by (frame_width, frame_height) on read and
// multiplied back on write; pass 1,1 for files already normalized.
TrajectoryMap read_ground_truth(const std::filesystem::path& path,
                                double frame_width = 1, double frame_height = 1);
void write_ground_truth(const std::vector<GroundTruthRecord>& records,
                        const std::filesystem::path& path,
                        double frame_width = 1, double frame_height = 1);

// Tracker output: frame, id, left, top, right, bottom, confidence, visibility.
void write_tracker_output(const std::vector<OutputRecord>& records,
                          const std::filesystem::path& path,
                          double frame_width = 1, double frame_height = 1);
TrajectoryMap read_tracker_output(const std::filesystem::path& path,
                                  double frame_width = 1, double frame_height = 1);

// Flattens trajectories back into (frame, id)-sorted records.
std::vector<GroundTruthRecord> to_records(const TrajectoryMap& trajectories);

}  // namespace tubetrack
