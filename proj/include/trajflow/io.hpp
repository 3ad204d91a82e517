#pragma once

#include <string>

#include "trajflow/trajectory.hpp"

namespace trajflow {

enum class TrajFormat { csv, json, duke_frames };

struct LoadOptions {
    double fps = 60.0;           // duke-frames only: frame column is divided by fps
    double dt_tolerance = 0.01;  // relative tolerance on per-track dt uniformity
};

struct LoadResult {
    Dataset dataset;
    std::size_t dropped_short_tracks = 0;  // tracks with < 2 points, dropped with a warning count
};

// CSV header: track_id,t,x,y (rows in any order; sorted by time per track).
// JSON: array of {id, dt, points:[[x,y],...]}.
// duke-frames header: track_id,frame,x,y with frame converted via opts.fps.
LoadResult load_trajectories(const std::string& path, TrajFormat format, const LoadOptions& opts = {});

void save_trajectories(const Dataset& ds, const std::string& path, TrajFormat format);

TrajFormat format_from_name(const std::string& name);

// shortest round-trip decimal form of a double
std::string format_double(double v);

}  // namespace trajflow
