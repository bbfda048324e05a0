#include "morl/adaptation.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "morl/errors.hpp"

namespace morl::adapt {

namespace {

constexpr int kRejectionCap = 1000;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace

void TruncatedGaussian::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("TruncatedGaussian: sigma must be > 0");
    if (!(lower < upper)) throw std::invalid_argument("TruncatedGaussian: lower must be < upper");
}

double sample_truncated(const TruncatedGaussian& g, nn::Rng& rng) {
    g.validate();
    std::normal_distribution<double> parent(g.mu, g.sigma);
    for (int i = 0; i < kRejectionCap; ++i) {
        const double x = parent(rng);
        if (x >= g.lower && x <= g.upper) return x;
    }
    return std::clamp(parent(rng), g.lower, g.upper);
}

std::pair<double, double> truncated_log_density_grad(const TruncatedGaussian& g, double w) {
    g.validate();
    const double a = (g.lower - g.mu) / g.sigma;
    const double b = (g.upper - g.mu) / g.sigma;
    const double z = std::max(norm_cdf(b) - norm_cdf(a), 1e-12);
    // d log p / d mu = (w-mu)/sigma^2 - (phi(a) - phi(b)) / (sigma Z)
    const double d_mu = (w - g.mu) / (g.sigma * g.sigma) -
                        (norm_pdf(a) - norm_pdf(b)) / (g.sigma * z);
    // d log p / d sigma = (w-mu)^2/sigma^3 - 1/sigma - (a phi(a) - b phi(b)) / (sigma Z)
    const double diff = w - g.mu;
    const double d_sigma = diff * diff / (g.sigma * g.sigma * g.sigma) - 1.0 / g.sigma -
                           (a * norm_pdf(a) - b * norm_pdf(b)) / (g.sigma * z);
    return {d_mu, d_sigma * g.sigma}; // second entry is d/d(log sigma)
}

AdaptationReport adapt(const train::PolicyBundle& bundle, const env::EnvSpec& spec,
                       const Preference& target, std::size_t n_iterations,
                       std::size_t traj_per_iter, std::uint64_t seed,
                       const AdaptOptions& options) {
    if (n_iterations < 1 || traj_per_iter < 1) {
        throw std::invalid_argument("adapt: N and K must be >= 1");
    }
    if (!bundle.augmented()) {
        throw ConfigError("adapt: bundle does not condition on a bc weight");
    }
    const double lower = bundle.config.wbc_min;
    const double upper = 1.0;
    TruncatedGaussian dist;
    dist.lower = lower;
    dist.upper = upper;
    dist.mu = options.mu_init > 0.0 ? options.mu_init : 0.5 * (lower + upper);
    dist.sigma = options.sigma_init > 0.0 ? options.sigma_init : 0.25 * (upper - lower);
    dist.validate();

    AdaptationReport report;
    report.target_pref = target;
    nn::Rng rng(train::mix_seed(seed, 0xada9, 0));

    for (std::size_t it = 0; it < n_iterations; ++it) {
        AdaptationIteration row;
        row.mu = dist.mu;
        row.sigma = dist.sigma;

        std::vector<double> draws(traj_per_iter);
        std::vector<double> utilities(traj_per_iter);
        double mean_u = 0.0;
        for (std::size_t k = 0; k < traj_per_iter; ++k) {
            draws[k] = sample_truncated(dist, rng);
            const auto cond = train::conditioning_for(bundle, target, draws[k]);
            const Trajectory traj = train::rollout_policy(
                bundle, spec, cond, train::mix_seed(seed, it + 1, k + 1));
            utilities[k] = scalarize(target, traj.episode_return);
            mean_u += utilities[k];
            row.returns.push_back(traj.episode_return);
        }
        mean_u /= static_cast<double>(traj_per_iter);
        row.mean_utility = mean_u;
        report.iterations.push_back(std::move(row));

        // Score-function ascent with a batch-mean baseline.
        double g_mu = 0.0, g_logsigma = 0.0;
        for (std::size_t k = 0; k < traj_per_iter; ++k) {
            const auto [dmu, dls] = truncated_log_density_grad(dist, draws[k]);
            const double advantage = utilities[k] - mean_u;
            g_mu += advantage * dmu;
            g_logsigma += advantage * dls;
        }
        g_mu /= static_cast<double>(traj_per_iter);
        g_logsigma /= static_cast<double>(traj_per_iter);

        dist.mu = std::clamp(dist.mu + options.learning_rate * g_mu, lower, upper);
        dist.sigma = std::max(std::exp(std::log(dist.sigma) +
                                       options.learning_rate * g_logsigma),
                              options.sigma_floor);
    }
    report.final_wbc = std::clamp(dist.mu, lower, upper);
    return report;
}

double oracle_wbc(const train::PolicyBundle& bundle, const env::EnvSpec& spec,
                  const Preference& target, std::size_t grid_points, std::size_t episodes,
                  std::uint64_t seed) {
    if (grid_points < 2) throw std::invalid_argument("oracle_wbc: need at least 2 grid points");
    if (episodes < 1) throw std::invalid_argument("oracle_wbc: need episodes");
    if (!bundle.augmented()) {
        throw ConfigError("oracle_wbc: bundle does not condition on a bc weight");
    }
    const double lower = bundle.config.wbc_min;
    const double upper = 1.0;
    double best_w = lower;
    double best_u = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double w = lower + (upper - lower) * static_cast<double>(i) /
                                     static_cast<double>(grid_points - 1);
        const auto cond = train::conditioning_for(bundle, target, w);
        double mean_u = 0.0;
        for (std::size_t e = 0; e < episodes; ++e) {
            const Trajectory traj = train::rollout_policy(
                bundle, spec, cond, train::mix_seed(seed, 0xcafe + i, e));
            mean_u += scalarize(target, traj.episode_return);
        }
        mean_u /= static_cast<double>(episodes);
        if (mean_u >= best_u) { // ties break toward the larger weight
            best_u = mean_u;
            best_w = w;
        }
    }
    return best_w;
}

std::string report_to_json(const AdaptationReport& report) {
    nlohmann::json iters = nlohmann::json::array();
    for (const auto& it : report.iterations) {
        iters.push_back({{"mu", it.mu},
                         {"sigma", it.sigma},
                         {"mean_utility", it.mean_utility},
                         {"returns", it.returns}});
    }
    return nlohmann::json{{"target_pref", report.target_pref.weights()},
                          {"iterations", iters},
                          {"final_wbc", report.final_wbc}}
        .dump(2);
}

} // namespace morl::adapt
