#include "trajflow/dbscan.hpp"

#include <algorithm>
#include <limits>

namespace trajflow {

void DbscanParams::validate() const {
    if (!(eps > 0.0)) throw ValidationError("dbscan eps must be > 0");
    if (min_pts == 0) throw ValidationError("dbscan min_pts must be >= 1");
}

DbscanResult dbscan(const std::vector<TrajPoint>& points, const DbscanParams& params) {
    params.validate();
    const std::size_t n = points.size();
    const double eps2 = params.eps * params.eps;

    std::vector<std::vector<std::size_t>> neighbors(n);
    for (std::size_t i = 0; i < n; ++i) {
        neighbors[i].push_back(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (squared_distance(points[i], points[j]) <= eps2) {
                neighbors[i].push_back(j);
                neighbors[j].push_back(i);
            }
        }
    }

    std::vector<bool> core(n, false);
    for (std::size_t i = 0; i < n; ++i) core[i] = neighbors[i].size() >= params.min_pts;

    // flood-fill the core graph
    constexpr std::size_t kUnlabeled = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> label(n, kUnlabeled);
    std::size_t next_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || label[i] != kUnlabeled) continue;
        const std::size_t cluster = next_label++;
        std::vector<std::size_t> stack{i};
        label[i] = cluster;
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            for (std::size_t nb : neighbors[cur]) {
                if (core[nb] && label[nb] == kUnlabeled) {
                    label[nb] = cluster;
                    stack.push_back(nb);
                }
            }
        }
    }

    // border points join their nearest core point's cluster
    DbscanResult result;
    result.clusters.resize(next_label);
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) {
            result.clusters[label[i]].push_back(i);
            continue;
        }
        double best = std::numeric_limits<double>::max();
        std::size_t best_core = kUnlabeled;
        for (std::size_t nb : neighbors[i]) {
            if (!core[nb]) continue;
            const double d = squared_distance(points[i], points[nb]);
            if (d < best) {
                best = d;
                best_core = nb;
            }
        }
        if (best_core == kUnlabeled) {
            result.noise.push_back(i);
        } else {
            result.clusters[label[best_core]].push_back(i);
        }
    }

    // canonical order: by lowest contained index
    for (auto& c : result.clusters) std::sort(c.begin(), c.end());
    std::sort(result.clusters.begin(), result.clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return result;
}

}  // namespace trajflow
