#pragma once

#include <vector>

#include "trajflow/types.hpp"

namespace trajflow {

struct DbscanParams {
    double eps = 1.0;        // neighborhood radius, scene units
    std::size_t min_pts = 5; // core threshold, self included

    void validate() const;
};

struct DbscanResult {
    std::vector<std::vector<std::size_t>> clusters;  // point indices per cluster
    std::vector<std::size_t> noise;
};

// Density-based clustering: clusters are connected components of core points
// under eps-reachability; a non-core point within eps of a core joins the
// cluster of its nearest core point, everything else is noise. Cluster order
// follows the lowest contained point index, so output is deterministic and
// independent of input ordering up to relabeling.
DbscanResult dbscan(const std::vector<TrajPoint>& points, const DbscanParams& params);

}  // namespace trajflow
