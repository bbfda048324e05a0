#include "morl/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "morl/errors.hpp"
#include "morl/metrics.hpp"

#ifndef MORL_DEFAULT_DATA_DIR
#define MORL_DEFAULT_DATA_DIR "."
#endif

namespace morl::env {

namespace {

constexpr std::size_t kLineworldHorizon = 32;
constexpr double kLineworldSpeed = 1.0 / 32.0;
constexpr std::size_t kTreasureHorizon = 24;
constexpr double kAliveUnit = 0.05;

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

std::string default_grid_path() {
    if (const char* dir = std::getenv("MORL_DATA_DIR")) {
        return std::string(dir) + "/mo_treasure_grid.txt";
    }
    return std::string(MORL_DEFAULT_DATA_DIR) + "/mo_treasure_grid.txt";
}

std::shared_ptr<const GridData> parse_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open grid definition file: " + path);
    auto grid = std::make_shared<GridData>();
    std::vector<std::vector<std::pair<char, double>>> rows;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        std::vector<std::pair<char, double>> row;
        std::string tok;
        while (ss >> tok) {
            if (tok == ".") {
                row.emplace_back('.', 0.0);
            } else if (tok == "#") {
                row.emplace_back('#', 0.0);
            } else {
                try {
                    std::size_t used = 0;
                    double v = std::stod(tok, &used);
                    if (used != tok.size() || !(v > 0.0)) {
                        throw ParseError("grid: bad treasure value '" + tok + "'", line_no);
                    }
                    row.emplace_back('T', v);
                } catch (const std::invalid_argument&) {
                    throw ParseError("grid: unknown cell token '" + tok + "'", line_no);
                }
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError("grid: ragged row", line_no);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("grid: empty file", 0);
    grid->rows = rows.size();
    grid->cols = rows.front().size();
    grid->wall.assign(grid->rows * grid->cols, 0);
    grid->treasure.assign(grid->rows * grid->cols, 0.0);
    for (std::size_t r = 0; r < grid->rows; ++r) {
        for (std::size_t c = 0; c < grid->cols; ++c) {
            grid->wall[grid->index(r, c)] = rows[r][c].first == '#';
            grid->treasure[grid->index(r, c)] = rows[r][c].first == 'T' ? rows[r][c].second : 0.0;
        }
    }
    if (grid->wall[grid->index(0, 0)] || grid->treasure[grid->index(0, 0)] > 0.0) {
        throw ParseError("grid: start cell (0,0) must be free", 1);
    }
    return grid;
}

std::vector<double> lineworld_obs(double position, std::size_t step_count) {
    return {position, static_cast<double>(kLineworldHorizon - step_count) /
                          static_cast<double>(kLineworldHorizon)};
}

std::vector<double> treasure_obs(const GridData& g, std::size_t r, std::size_t c,
                                 std::size_t step_count) {
    return {static_cast<double>(r) / static_cast<double>(g.rows - 1),
            static_cast<double>(c) / static_cast<double>(g.cols - 1),
            static_cast<double>(kTreasureHorizon - step_count) /
                static_cast<double>(kTreasureHorizon)};
}

std::pair<std::size_t, std::size_t> treasure_cell(const EnvSpec& spec, const EnvState& s) {
    const GridData& g = *spec.grid;
    const auto r = static_cast<std::size_t>(
        std::lround(s.observation[0] * static_cast<double>(g.rows - 1)));
    const auto c = static_cast<std::size_t>(
        std::lround(s.observation[1] * static_cast<double>(g.cols - 1)));
    return {r, c};
}

std::pair<std::size_t, std::size_t> apply_move(const GridData& g, std::size_t r, std::size_t c,
                                               GridMove m) {
    long nr = static_cast<long>(r), nc = static_cast<long>(c);
    switch (m) {
        case GridMove::kRight: ++nc; break;
        case GridMove::kDown: ++nr; break;
        case GridMove::kLeft: --nc; break;
        case GridMove::kUp: --nr; break;
    }
    if (nr < 0 || nc < 0 || nr >= static_cast<long>(g.rows) || nc >= static_cast<long>(g.cols) ||
        g.wall[g.index(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc))]) {
        return {r, c}; // blocked moves stay in place, still costing the step
    }
    return {static_cast<std::size_t>(nr), static_cast<std::size_t>(nc)};
}

double treasure_lump(std::size_t entry_step) {
    return kAliveUnit * static_cast<double>(kTreasureHorizon - entry_step);
}

// Scalarized return-to-go table for the expert policy: value[t][cell].
std::vector<std::vector<double>> treasure_value_table(const GridData& g, const Preference& pref) {
    const std::size_t n_cells = g.rows * g.cols;
    std::vector<std::vector<double>> value(kTreasureHorizon + 1,
                                           std::vector<double>(n_cells, 0.0));
    for (std::size_t t = kTreasureHorizon; t-- > 0;) {
        for (std::size_t r = 0; r < g.rows; ++r) {
            for (std::size_t c = 0; c < g.cols; ++c) {
                const std::size_t i = g.index(r, c);
                if (g.wall[i] || g.treasure[i] > 0.0) continue;
                double best = -1.0;
                for (int m = 0; m < 4; ++m) {
                    auto [nr, nc] = apply_move(g, r, c, static_cast<GridMove>(m));
                    const std::size_t j = g.index(nr, nc);
                    double q;
                    if (g.treasure[j] > 0.0) {
                        q = pref[0] * g.treasure[j] + pref[1] * treasure_lump(t + 1);
                    } else {
                        q = value[t + 1][j];
                    }
                    best = std::max(best, q);
                }
                value[t][i] = best;
            }
        }
    }
    return value;
}

} // namespace

GridMove decode_grid_move(const std::vector<double>& action) {
    if (action.size() != 2) throw std::invalid_argument("decode_grid_move: need a 2-vector");
    const double ax = clamp(action[0], -1.0, 1.0);
    const double ay = clamp(action[1], -1.0, 1.0);
    if (std::abs(ax) >= std::abs(ay)) {
        return ax >= 0.0 ? GridMove::kRight : GridMove::kLeft;
    }
    return ay >= 0.0 ? GridMove::kDown : GridMove::kUp;
}

std::vector<double> encode_grid_move(GridMove move) {
    switch (move) {
        case GridMove::kRight: return {1.0, 0.0};
        case GridMove::kDown: return {0.0, 1.0};
        case GridMove::kLeft: return {-1.0, 0.0};
        case GridMove::kUp: return {0.0, -1.0};
    }
    return {0.0, 0.0};
}

std::pair<EnvSpec, EnvState> make_env(const std::string& name, std::uint64_t seed) {
    return make_env(name, seed, name == "mo-treasure" ? default_grid_path() : std::string());
}

std::pair<EnvSpec, EnvState> make_env(const std::string& name, std::uint64_t seed,
                                      const std::string& grid_path) {
    EnvSpec spec;
    EnvState state;
    state.rng_state = seed;
    if (name == "mo-lineworld") {
        spec.name = name;
        spec.n_objectives = 2;
        spec.state_dim = 2;
        spec.action_dim = 1;
        spec.action_low = {-1.0};
        spec.action_high = {1.0};
        spec.horizon = kLineworldHorizon;
        spec.reward_bounds = {{0.0, 1.0}, {0.0, 1.0}};
        state.observation = lineworld_obs(0.0, 0);
        return {spec, state};
    }
    if (name == "mo-treasure") {
        spec.name = name;
        spec.grid = parse_grid(grid_path);
        spec.n_objectives = 2;
        spec.state_dim = 3;
        spec.action_dim = 2;
        spec.action_low = {-1.0, -1.0};
        spec.action_high = {1.0, 1.0};
        spec.horizon = kTreasureHorizon;
        double max_treasure = 0.0;
        for (double v : spec.grid->treasure) max_treasure = std::max(max_treasure, v);
        spec.reward_bounds = {{0.0, max_treasure},
                              {0.0, kAliveUnit * static_cast<double>(kTreasureHorizon)}};
        state.observation = treasure_obs(*spec.grid, 0, 0, 0);
        return {spec, state};
    }
    throw std::invalid_argument("make_env: unknown environment '" + name + "'");
}

EnvState initial_state(const EnvSpec& spec, std::uint64_t seed) {
    EnvState state;
    state.rng_state = seed;
    if (spec.name == "mo-lineworld") {
        state.observation = lineworld_obs(0.0, 0);
        return state;
    }
    if (spec.name == "mo-treasure") {
        state.observation = treasure_obs(*spec.grid, 0, 0, 0);
        return state;
    }
    throw std::invalid_argument("initial_state: unknown environment '" + spec.name + "'");
}

StepResult step(const EnvSpec& spec, const EnvState& state, const std::vector<double>& action) {
    if (state.terminal) {
        throw IllegalTransitionError("step: state is terminal (" + spec.name + ")");
    }
    if (action.size() != spec.action_dim) {
        throw std::invalid_argument("step: action dimension mismatch");
    }
    StepResult out;
    if (spec.name == "mo-lineworld") {
        const double a = clamp(action[0], -1.0, 1.0);
        const double pos = state.observation[0];
        const double new_pos = clamp(pos + a * kLineworldSpeed, 0.0, 1.0);
        const std::size_t k = state.step_count + 1;
        out.reward = {std::max(0.0, (new_pos - pos) * static_cast<double>(kLineworldHorizon)),
                      1.0 - std::abs(a)};
        out.terminal = k >= spec.horizon;
        out.state.observation = lineworld_obs(new_pos, k);
        out.state.step_count = k;
        out.state.rng_state = state.rng_state;
        out.state.terminal = out.terminal;
        return out;
    }
    if (spec.name == "mo-treasure") {
        const GridData& g = *spec.grid;
        auto [r, c] = treasure_cell(spec, state);
        auto [nr, nc] = apply_move(g, r, c, decode_grid_move(action));
        const std::size_t k = state.step_count + 1;
        const double v = g.treasure[g.index(nr, nc)];
        if (v > 0.0) {
            out.reward = {v, treasure_lump(k)};
            out.terminal = true;
        } else {
            out.reward = {0.0, 0.0};
            out.terminal = k >= spec.horizon;
        }
        out.state.observation = treasure_obs(g, nr, nc, k);
        out.state.step_count = k;
        out.state.rng_state = state.rng_state;
        out.state.terminal = out.terminal;
        return out;
    }
    throw std::invalid_argument("step: unknown environment '" + spec.name + "'");
}

std::vector<VectorReturn> oracle_pareto_front(const EnvSpec& spec) {
    if (spec.name == "mo-lineworld") {
        // Closed-form frontier {(32c, 32(1-c))} discretized at 101 points.
        std::vector<VectorReturn> front;
        front.reserve(101);
        for (int k = 0; k <= 100; ++k) {
            const double c = static_cast<double>(k) / 100.0;
            const double h = static_cast<double>(kLineworldHorizon);
            front.push_back({c * h, (1.0 - c) * h});
        }
        return front;
    }
    if (spec.name == "mo-treasure") {
        // Achievable-return DP with dominance pruning, memoized over (cell, t).
        const GridData& g = *spec.grid;
        const std::size_t n_cells = g.rows * g.cols;
        std::vector<std::vector<std::vector<VectorReturn>>> memo(
            kTreasureHorizon + 1, std::vector<std::vector<VectorReturn>>(n_cells));
        for (std::size_t t = kTreasureHorizon + 1; t-- > 0;) {
            for (std::size_t r = 0; r < g.rows; ++r) {
                for (std::size_t c = 0; c < g.cols; ++c) {
                    const std::size_t i = g.index(r, c);
                    if (g.wall[i] || g.treasure[i] > 0.0) continue;
                    std::vector<VectorReturn> reach;
                    if (t == kTreasureHorizon) {
                        reach.push_back({0.0, 0.0});
                    } else {
                        for (int m = 0; m < 4; ++m) {
                            auto [nr, nc] = apply_move(g, r, c, static_cast<GridMove>(m));
                            const std::size_t j = g.index(nr, nc);
                            if (g.treasure[j] > 0.0) {
                                reach.push_back({g.treasure[j], treasure_lump(t + 1)});
                            } else {
                                for (const auto& fut : memo[t + 1][j]) reach.push_back(fut);
                            }
                        }
                    }
                    std::sort(reach.begin(), reach.end());
                    reach.erase(std::unique(reach.begin(), reach.end()), reach.end());
                    memo[t][i] = pareto_filter(reach);
                }
            }
        }
        return memo[0][g.index(0, 0)];
    }
    throw UnsupportedError("oracle_pareto_front: environment '" + spec.name +
                           "' is not oracle-enabled");
}

ScriptedBehaviorPolicy::ScriptedBehaviorPolicy(Preference pref, double noise, Quality q)
    : preference(std::move(pref)), noise_scale(noise), quality(q) {
    if (noise_scale < 0.0) throw std::invalid_argument("ScriptedBehaviorPolicy: negative noise");
    if (quality == Quality::kAmateur && noise_scale <= 0.0) {
        throw std::invalid_argument("ScriptedBehaviorPolicy: amateur requires noise_scale > 0");
    }
}

std::vector<double> scripted_action(const ScriptedBehaviorPolicy& policy, const EnvSpec& spec,
                                    const EnvState& state, nn::Rng& rng) {
    if (policy.preference.size() != spec.n_objectives) {
        throw std::invalid_argument("scripted_action: preference dimension mismatch");
    }
    std::vector<double> a;
    if (spec.name == "mo-lineworld") {
        a = {policy.preference[0]};
    } else if (spec.name == "mo-treasure") {
        const GridData& g = *spec.grid;
        auto [r, c] = treasure_cell(spec, state);
        const auto value = treasure_value_table(g, policy.preference);
        const std::size_t t = state.step_count;
        double best = -1.0;
        GridMove best_move = GridMove::kRight;
        for (int m = 0; m < 4; ++m) {
            auto [nr, nc] = apply_move(g, r, c, static_cast<GridMove>(m));
            const std::size_t j = g.index(nr, nc);
            double q;
            if (g.treasure[j] > 0.0) {
                q = policy.preference[0] * g.treasure[j] +
                    policy.preference[1] * treasure_lump(t + 1);
            } else {
                q = t + 1 <= kTreasureHorizon ? value[t + 1][j] : 0.0;
            }
            if (q > best) {
                best = q;
                best_move = static_cast<GridMove>(m);
            }
        }
        a = encode_grid_move(best_move);
    } else {
        throw std::invalid_argument("scripted_action: unknown environment");
    }
    if (policy.quality == Quality::kAmateur) {
        std::normal_distribution<double> noise(0.0, policy.noise_scale);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = clamp(a[i] + noise(rng), spec.action_low[i], spec.action_high[i]);
        }
    }
    return a;
}

} // namespace morl::env
