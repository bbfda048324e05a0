#pragma once

#include <cstddef>
#include <vector>

#include "morl/errors.hpp"

namespace morl {

/// Per-objective cumulative (or one-step) reward, environment units.
using VectorReturn = std::vector<double>;

inline constexpr double kSimplexTol = 1e-9;       // simplex sum tolerance, fixed by contract
inline constexpr double kReturnSumTol = 1e-6;     // episode-return consistency tolerance
inline constexpr double kDefaultBcWeightMin = 0.2;

/// Point on the probability simplex weighting n objectives.
/// Components are non-negative and sum to 1 within kSimplexTol; n >= 2.
class Preference {
  public:
    explicit Preference(std::vector<double> weights);

    const std::vector<double>& weights() const { return weights_; }
    double operator[](std::size_t i) const { return weights_[i]; }
    std::size_t size() const { return weights_.size(); }

    bool operator==(const Preference& other) const { return weights_ == other.weights_; }

  private:
    std::vector<double> weights_;
};

/// Task preference rescaled by (1 - w_bc) and extended with the behavior-cloning
/// weight as one more objective's weight; the (n+1)-vector sums to 1.
class AugmentedPreference {
  public:
    AugmentedPreference(std::vector<double> task_part, double bc_weight, double bc_weight_min);

    const std::vector<double>& task_part() const { return task_part_; }
    double bc_weight() const { return bc_weight_; }
    std::size_t n_objectives() const { return task_part_.size(); }

    /// Reconstructs the original task preference; requires bc_weight < 1.
    Preference task_preference() const;

    /// Flat (n+1)-vector [task_part..., bc_weight] used as network conditioning input.
    std::vector<double> flat() const;

  private:
    std::vector<double> task_part_;
    double bc_weight_;
};

struct Transition {
    std::vector<double> state;
    std::vector<double> action;
    VectorReturn reward; // one-step vector reward
    std::vector<double> next_state;
    bool terminal = false;
};

/// Ordered transitions plus their undiscounted vector return.
/// episode_return must equal the componentwise reward sum within kReturnSumTol,
/// and only the final transition may be terminal.
struct Trajectory {
    std::vector<Transition> transitions;
    VectorReturn episode_return;

    /// Throws IntegrityError when an invariant is violated.
    void validate() const;
};

/// f_w(v) = w . v
double scalarize(const Preference& pref, const VectorReturn& v);

/// 1 - (a.b)/(|a||b|); in [0, 2] generally, [0, 1] for simplex vectors.
double cosine_distance(const Preference& a, const Preference& b);
double cosine_distance(const std::vector<double>& a, const std::vector<double>& b);

/// v / sum(v). Requires all components >= 0 and at least one > 0.
Preference l1_normalize(const VectorReturn& v);

/// ((1 - w_bc) * pref, w_bc) with w_bc in [bc_weight_min, 1].
AugmentedPreference augment(const Preference& pref, double w_bc,
                            double bc_weight_min = kDefaultBcWeightMin);

/// Strict Pareto dominance: a >= b componentwise and a > b somewhere.
bool dominates(const VectorReturn& a, const VectorReturn& b);

// Componentwise helpers shared across modules.
VectorReturn add(const VectorReturn& a, const VectorReturn& b);
VectorReturn sum_rewards(const std::vector<Transition>& transitions, std::size_t n_objectives);

} // namespace morl
