#include "trajflow/tpm.hpp"

#include <algorithm>

namespace trajflow {

std::string State::name() const {
    return (kind == Kind::transition_point ? "tp" : "mp") + std::to_string(ref);
}

void PassageParams::validate() const {
    if (!(chi2_gate > 0.0)) throw ValidationError("chi2_gate must be > 0");
}

const State* Tpm::find_state(State::Kind kind, TrajId ref) const {
    for (const auto& s : states) {
        if (s.kind == kind && s.ref == ref) return &s;
    }
    return nullptr;
}

std::vector<State> build_states(const Clustering& clustering, const std::vector<TransitionPoint>& tps) {
    if (clustering.patterns.empty()) {
        throw ValidationError("cannot build states from an empty clustering");
    }
    std::vector<State> states;
    std::vector<const TransitionPoint*> sorted_tps;
    for (const auto& tp : tps) sorted_tps.push_back(&tp);
    std::sort(sorted_tps.begin(), sorted_tps.end(),
              [](const TransitionPoint* a, const TransitionPoint* b) { return a->id < b->id; });
    for (const auto* tp : sorted_tps) {
        states.push_back({states.size(), State::Kind::transition_point, tp->id});
    }
    for (const auto& p : clustering.patterns) {  // already sorted by id
        states.push_back({states.size(), State::Kind::pattern, p.id()});
    }
    return states;
}

PassageContext PassageContext::build(const Clustering& clustering,
                                     const std::vector<TransitionPoint>& tps) {
    PassageContext ctx;
    ctx.tps = tps;
    for (const auto& p : clustering.patterns) {
        for (const auto& m : p.members()) {
            const TrajId root = m.parent_id.value_or(m.id);
            const IndexInterval range =
                m.parent_range.value_or(IndexInterval{0, m.points.size()});
            ctx.children_by_root[root].push_back({p.id(), range});
        }
    }
    for (auto& [root, children] : ctx.children_by_root) {
        std::sort(children.begin(), children.end(),
                  [](const Child& a, const Child& b) { return a.range.begin < b.range.begin; });
    }
    return ctx;
}

namespace {

const TransitionPoint& tp_by_id(const PassageContext& ctx, TrajId id) {
    for (const auto& tp : ctx.tps) {
        if (tp.id == id) return tp;
    }
    throw ValidationError("state references missing transition point " + std::to_string(id));
}

// sorted occupancy indices of a parent for one state
std::vector<std::size_t> occupancy(const Trajectory& parent, const State& s, const PassageContext& ctx,
                                   const PassageParams& pp) {
    std::vector<std::size_t> idx;
    if (s.kind == State::Kind::transition_point) {
        const TransitionPoint& tp = tp_by_id(ctx, s.ref);
        for (std::size_t i = 0; i < parent.points.size(); ++i) {
            if (mahalanobis2(parent.points[i], tp) <= pp.chi2_gate) idx.push_back(i);
        }
    } else {
        const auto it = ctx.children_by_root.find(parent.id);
        if (it == ctx.children_by_root.end()) {
            throw ValidationError("trajectory " + std::to_string(parent.id) +
                                  " has no lineage-resolved children");
        }
        for (const auto& child : it->second) {
            if (child.pattern_id == s.ref) idx.push_back(child.range.begin);
        }
    }
    return idx;
}

// end of the first maximal consecutive run of occupancy indices
std::size_t first_visit_end(const std::vector<std::size_t>& occ) {
    std::size_t end = occ.front();
    for (std::size_t k = 1; k < occ.size(); ++k) {
        if (occ[k] == end + 1) {
            end = occ[k];
        } else {
            break;
        }
    }
    return end;
}

}  // namespace

bool passes_through(const Trajectory& parent, const State& s, const PassageContext& ctx,
                    const PassageParams& pp, std::ptrdiff_t after_index) {
    pp.validate();
    const auto occ = occupancy(parent, s, ctx, pp);
    for (std::size_t i : occ) {
        if (static_cast<std::ptrdiff_t>(i) > after_index) return true;
    }
    return false;
}

Tpm learn_tpm(const Dataset& parents, const Clustering& clustering,
              const std::vector<TransitionPoint>& tps, const PassageParams& pp) {
    pp.validate();
    Tpm tpm;
    tpm.states = build_states(clustering, tps);
    const auto n = static_cast<Eigen::Index>(tpm.states.size());
    tpm.counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
    tpm.totals = Eigen::Vector<std::int64_t, Eigen::Dynamic>::Zero(n);

    const PassageContext ctx = PassageContext::build(clustering, tps);

    for (const auto& parent : parents.trajectories) {
        // occupancy per state once per parent
        std::vector<std::vector<std::size_t>> occ(tpm.states.size());
        for (std::size_t s = 0; s < tpm.states.size(); ++s) {
            occ[s] = occupancy(parent, tpm.states[s], ctx, pp);
        }
        for (std::size_t j = 0; j < tpm.states.size(); ++j) {
            if (occ[j].empty()) continue;
            tpm.totals(static_cast<Eigen::Index>(j)) += 1;
            const std::size_t entry = occ[j].front();
            const std::size_t exit = first_visit_end(occ[j]);
            for (std::size_t i = 0; i < tpm.states.size(); ++i) {
                if (occ[i].empty()) continue;
                // the diagonal counts re-entries; off-diagonal anything past first entry
                const std::size_t threshold = (i == j) ? exit : entry;
                if (occ[i].back() > threshold) {
                    tpm.counts(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) += 1;
                }
            }
        }
    }

    tpm.probs = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (tpm.totals(j) == 0) {
            tpm.zero_total_states.push_back(static_cast<std::size_t>(j));
            continue;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            tpm.probs(j, i) = static_cast<double>(tpm.counts(j, i)) / static_cast<double>(tpm.totals(j));
        }
    }
    return tpm;
}

}  // namespace trajflow
