#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morl/trainer.hpp"
#include "morl/types.hpp"

namespace morl::adapt {

struct TruncatedGaussian {
    double mu = 0.6;
    double sigma = 0.2;
    double lower = kDefaultBcWeightMin;
    double upper = 1.0;

    void validate() const;
};

/// Rejection sampling from the parent Gaussian restricted to [lower, upper];
/// after 1,000 rejected draws falls back to clamping a parent draw.
double sample_truncated(const TruncatedGaussian& g, nn::Rng& rng);

/// d/d(mu) and d/d(log sigma) of the truncated-normal log-density at w
/// (truncation correction included).
std::pair<double, double> truncated_log_density_grad(const TruncatedGaussian& g, double w);

struct AdaptationIteration {
    double mu = 0.0;
    double sigma = 0.0;
    double mean_utility = 0.0;
    std::vector<VectorReturn> returns; // the K collected trajectory returns
};

struct AdaptationReport {
    Preference target_pref{{0.5, 0.5}};
    std::vector<AdaptationIteration> iterations;
    double final_wbc = 0.0;
};

struct AdaptOptions {
    std::size_t n_iterations = 3;  // N
    std::size_t traj_per_iter = 10; // K, split one trajectory per bc-weight draw
    double learning_rate = 0.1;    // on (mu, log sigma)
    double sigma_floor = 0.01;
    double mu_init = -1.0;    // < 0 = midpoint of bounds
    double sigma_init = -1.0; // < 0 = quarter range
};

/// Algorithm-2 regularization weight adaptation: score-function gradient ascent
/// on E[w^T R] with a batch-mean baseline. Only (mu, sigma) change; the bundle
/// is never mutated.
AdaptationReport adapt(const train::PolicyBundle& bundle, const env::EnvSpec& spec,
                       const Preference& target, std::size_t n_iterations,
                       std::size_t traj_per_iter, std::uint64_t seed,
                       const AdaptOptions& options = {});

/// Grid search over equidistant bc weights in [wbc_min, 1]; returns the argmax
/// of mean utility, ties broken toward the larger weight.
double oracle_wbc(const train::PolicyBundle& bundle, const env::EnvSpec& spec,
                  const Preference& target, std::size_t grid_points, std::size_t episodes,
                  std::uint64_t seed);

std::string report_to_json(const AdaptationReport& report);

} // namespace morl::adapt
