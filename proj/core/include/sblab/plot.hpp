#pragma once

#include "sblab/chain.hpp"
#include "sblab/trainer.hpp"

#include <cstdint>
#include <string>

namespace sblab {

// Deterministic SVG rendering: fixed viewport, seeded path downsampling,
// fixed-precision coordinates, no external renderer.
struct PlotOptions {
    int width = 640;
    int height = 480;
    int max_paths = 64;
    uint64_t seed = 0x9107; // downsampling stream tag
};

// Trajectory polylines. d >= 2 plots the (x_0, x_1) plane; d == 1 plots
// state index vs value. Empty batches render axes only.
std::string svg_trajectory_fan(const TrajectoryBatch& traj, const PlotOptions& opts = {});

// Start-slice and end-slice scatter of the first two dimensions.
std::string svg_boundary_scatter(const TrajectoryBatch& traj, const PlotOptions& opts = {});

// avg_kl against half_epoch; non-finite entries are skipped. All-NaN or
// empty metrics render axes only.
std::string svg_kl_curve(const RunMetrics& metrics, const PlotOptions& opts = {});

} // namespace sblab
