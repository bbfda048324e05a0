#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "morl/nn.hpp"
#include "morl/types.hpp"

namespace morl::env {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Deterministic grid backing mo-treasure, parsed from the committed data file.
/// Cells are free ('.'), walls ('#') or absorbing treasure cells holding a value.
struct GridData {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<char> wall;       // rows*cols
    std::vector<double> treasure; // rows*cols, 0 = none
    std::size_t index(std::size_t r, std::size_t c) const { return r * cols + c; }
};

struct EnvSpec {
    std::string name;
    std::size_t n_objectives = 0;
    std::size_t state_dim = 0;
    std::size_t action_dim = 0;
    std::vector<double> action_low;
    std::vector<double> action_high;
    std::size_t horizon = 0;
    std::vector<Interval> reward_bounds;
    std::shared_ptr<const GridData> grid; // mo-treasure only
};

struct EnvState {
    std::vector<double> observation;
    std::size_t step_count = 0;
    std::uint64_t rng_state = 0; // opaque seed material; dynamics are deterministic
    bool terminal = false;
};

struct StepResult {
    EnvState state;
    VectorReturn reward;
    bool terminal = false;
};

/// name in {mo-lineworld, mo-treasure}. mo-treasure reads its grid from
/// $MORL_DATA_DIR/mo_treasure_grid.txt (falling back to the build-time default).
std::pair<EnvSpec, EnvState> make_env(const std::string& name, std::uint64_t seed);
std::pair<EnvSpec, EnvState> make_env(const std::string& name, std::uint64_t seed,
                                      const std::string& grid_path);

/// Fresh initial state for an already-constructed spec (no grid re-parse).
EnvState initial_state(const EnvSpec& spec, std::uint64_t seed);

/// Deterministic transition. Out-of-bounds actions are clipped, not rejected.
/// Stepping a terminal state throws IllegalTransitionError.
StepResult step(const EnvSpec& spec, const EnvState& state, const std::vector<double>& action);

/// Exact non-dominated set of achievable undiscounted episode returns.
std::vector<VectorReturn> oracle_pareto_front(const EnvSpec& spec);

enum class Quality { kExpert, kAmateur };

/// Expert plays the scalarized-return-optimal closed form (mo-lineworld:
/// constant action equal to the weight on the progress objective; mo-treasure:
/// dynamic-programming lookup). Amateur adds Gaussian noise of scale
/// noise_scale, clipped to the action bounds.
struct ScriptedBehaviorPolicy {
    Preference preference;
    double noise_scale = 0.0;
    Quality quality = Quality::kExpert;

    ScriptedBehaviorPolicy(Preference pref, double noise, Quality q);
};

std::vector<double> scripted_action(const ScriptedBehaviorPolicy& policy, const EnvSpec& spec,
                                    const EnvState& state, nn::Rng& rng);

/// mo-treasure action decoding: the continuous 2-vector maps to one of the four
/// moves by dominant axis and sign (x axis wins ties).
enum class GridMove { kRight = 0, kDown = 1, kLeft = 2, kUp = 3 };
GridMove decode_grid_move(const std::vector<double>& action);
std::vector<double> encode_grid_move(GridMove move);

/// Rolls one episode with a per-step action callback; returns the trajectory.
template <typename ActFn>
Trajectory rollout(const EnvSpec& spec, EnvState state, ActFn&& act) {
    Trajectory traj;
    while (!state.terminal) {
        std::vector<double> a = act(spec, state);
        StepResult r = step(spec, state, a);
        Transition t;
        t.state = state.observation;
        t.action = std::move(a);
        t.reward = r.reward;
        t.next_state = r.state.observation;
        t.terminal = r.terminal;
        traj.transitions.push_back(std::move(t));
        state = std::move(r.state);
    }
    traj.episode_return = sum_rewards(traj.transitions, spec.n_objectives);
    return traj;
}

} // namespace morl::env
