#include "morl/types.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace morl {

namespace {

void check_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

} // namespace

Preference::Preference(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.size() < 2) {
        throw std::invalid_argument("Preference: need at least 2 objectives, got " +
                                    std::to_string(weights_.size()));
    }
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0)) { // also rejects NaN
            throw std::invalid_argument("Preference: negative or non-finite component");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) {
        throw std::invalid_argument("Preference: components sum to " + std::to_string(sum) +
                                    ", expected 1 within 1e-9");
    }
}

AugmentedPreference::AugmentedPreference(std::vector<double> task_part, double bc_weight,
                                         double bc_weight_min)
    : task_part_(std::move(task_part)), bc_weight_(bc_weight) {
    if (task_part_.size() < 2) {
        throw std::invalid_argument("AugmentedPreference: need at least 2 task objectives");
    }
    if (!(bc_weight_min > 0.0)) {
        throw std::invalid_argument("AugmentedPreference: bc weight minimum must be > 0");
    }
    if (!(bc_weight_ >= bc_weight_min) || bc_weight_ > 1.0) {
        throw std::invalid_argument("AugmentedPreference: bc_weight " + std::to_string(bc_weight_) +
                                    " outside [" + std::to_string(bc_weight_min) + ", 1]");
    }
    double sum = bc_weight_;
    for (double w : task_part_) {
        if (!(w >= 0.0)) {
            throw std::invalid_argument("AugmentedPreference: negative task component");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) {
        throw std::invalid_argument("AugmentedPreference: components sum to " +
                                    std::to_string(sum) + ", expected 1 within 1e-9");
    }
}

Preference AugmentedPreference::task_preference() const {
    if (bc_weight_ >= 1.0) {
        throw std::invalid_argument("AugmentedPreference: task preference undefined at bc_weight=1");
    }
    std::vector<double> w(task_part_);
    for (double& x : w) x /= (1.0 - bc_weight_);
    // Renormalize away rounding so the Preference invariant holds exactly.
    double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= s;
    return Preference(std::move(w));
}

std::vector<double> AugmentedPreference::flat() const {
    std::vector<double> out(task_part_);
    out.push_back(bc_weight_);
    return out;
}

void Trajectory::validate() const {
    if (transitions.empty()) {
        throw IntegrityError("Trajectory: empty transition list");
    }
    const std::size_t n = episode_return.size();
    VectorReturn sum(n, 0.0);
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const Transition& t = transitions[i];
        if (t.reward.size() != n) {
            throw IntegrityError("Trajectory: reward dimension mismatch at transition " +
                                 std::to_string(i));
        }
        if (t.terminal && i + 1 != transitions.size()) {
            throw IntegrityError("Trajectory: terminal transition before the final one");
        }
        for (std::size_t j = 0; j < n; ++j) sum[j] += t.reward[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(sum[j] - episode_return[j]) > kReturnSumTol) {
            throw IntegrityError("Trajectory: episode_return[" + std::to_string(j) +
                                 "] inconsistent with reward sum");
        }
    }
}

double scalarize(const Preference& pref, const VectorReturn& v) {
    check_same_size(pref.size(), v.size(), "scalarize");
    double out = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) out += pref[i] * v[i];
    return out;
}

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
    check_same_size(a.size(), b.size(), "cosine_distance");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("cosine_distance: zero-norm input");
    }
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

double cosine_distance(const Preference& a, const Preference& b) {
    return cosine_distance(a.weights(), b.weights());
}

Preference l1_normalize(const VectorReturn& v) {
    double sum = 0.0;
    for (double x : v) {
        if (x < 0.0 || !std::isfinite(x)) {
            throw DegenerateReturnError("l1_normalize: negative or non-finite component");
        }
        sum += x;
    }
    if (sum <= 0.0) {
        throw DegenerateReturnError("l1_normalize: all-zero return");
    }
    std::vector<double> w(v);
    for (double& x : w) x /= sum;
    return Preference(std::move(w));
}

AugmentedPreference augment(const Preference& pref, double w_bc, double bc_weight_min) {
    if (!(w_bc >= bc_weight_min) || w_bc > 1.0) {
        throw std::invalid_argument("augment: w_bc " + std::to_string(w_bc) + " outside [" +
                                    std::to_string(bc_weight_min) + ", 1]");
    }
    std::vector<double> task(pref.weights());
    for (double& x : task) x *= (1.0 - w_bc);
    return AugmentedPreference(std::move(task), w_bc, bc_weight_min);
}

bool dominates(const VectorReturn& a, const VectorReturn& b) {
    check_same_size(a.size(), b.size(), "dominates");
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return false;
        if (a[i] > b[i]) strict = true;
    }
    return strict;
}

VectorReturn add(const VectorReturn& a, const VectorReturn& b) {
    check_same_size(a.size(), b.size(), "add");
    VectorReturn out(a);
    for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
    return out;
}

VectorReturn sum_rewards(const std::vector<Transition>& transitions, std::size_t n_objectives) {
    VectorReturn out(n_objectives, 0.0);
    for (const Transition& t : transitions) {
        check_same_size(t.reward.size(), n_objectives, "sum_rewards");
        for (std::size_t j = 0; j < n_objectives; ++j) out[j] += t.reward[j];
    }
    return out;
}

} // namespace morl
