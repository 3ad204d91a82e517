#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "trajflow/dpgp.hpp"
#include "trajflow/transition.hpp"

namespace trajflow {

struct State {
    enum class Kind { transition_point, pattern };
    std::size_t id = 0;  // position in the state ordering
    Kind kind = Kind::transition_point;
    TrajId ref = 0;      // transition-point id or pattern id

    std::string name() const;
};

struct PassageParams {
    double chi2_gate = 5.991;  // 95% chi-square-2 quantile

    void validate() const;
};

// Passage probabilities over all future horizons. Rows are independent
// passage probabilities and need not sum to one. Exact integer counts are the
// bookkeeping of record; probs is derived.
struct Tpm {
    std::vector<State> states;
    Eigen::MatrixXd probs;                         // n_s x n_s, probs(j,i) = p(s_i | s_j)
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;  // d_j^i
    Eigen::Vector<std::int64_t, Eigen::Dynamic> totals;                  // d_j
    std::vector<std::size_t> zero_total_states;    // states with d_j = 0 (warned)

    std::size_t n_states() const { return states.size(); }
    const State* find_state(State::Kind kind, TrajId ref) const;
};

// Deterministic state ordering: transition points first (by id), then
// patterns (by id).
std::vector<State> build_states(const Clustering& clustering, const std::vector<TransitionPoint>& tps);

// Lineage-resolved view of a trained clustering, used for passage queries:
// children of each root parent with their absolute index intervals.
struct PassageContext {
    struct Child {
        TrajId pattern_id;
        IndexInterval range;  // absolute interval in the root parent
    };
    std::vector<TransitionPoint> tps;
    std::unordered_map<TrajId, std::vector<Child>> children_by_root;

    static PassageContext build(const Clustering& clustering, const std::vector<TransitionPoint>& tps);
};

// True iff the parent trajectory passes through the state strictly after
// after_index: a transition point is passed where some point falls inside its
// chi-square gate, a pattern where some child assigned to it begins.
bool passes_through(const Trajectory& parent, const State& s, const PassageContext& ctx,
                    const PassageParams& pp, std::ptrdiff_t after_index);

// Eq.-style passage counting: d_j parents pass through s_j, d_j^i of those
// subsequently pass through s_i strictly after first entering s_j (for the
// diagonal: strictly after the first visit ends, i.e. a re-entry).
Tpm learn_tpm(const Dataset& parents, const Clustering& clustering,
              const std::vector<TransitionPoint>& tps, const PassageParams& pp);

}  // namespace trajflow
