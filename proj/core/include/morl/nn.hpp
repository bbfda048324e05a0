#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "morl/tensor.hpp"

namespace morl::nn {

using Rng = std::mt19937_64;

enum class Activation { kRelu, kTanh, kMish };
enum class OutputActivation { kNone, kTanh };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

/// layer_widths = [input, hidden..., output]; at least one hidden layer.
struct MlpConfig {
    std::vector<std::size_t> layer_widths;
    Activation activation = Activation::kRelu;
    OutputActivation output_activation = OutputActivation::kNone;
};

/// Affine stack with uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
class Mlp {
  public:
    Mlp(MlpConfig config, Rng& rng, const std::string& name_prefix);

    /// Graph-building forward; input last dimension must match layer_widths[0].
    ad::Tensor forward(const ad::Tensor& input) const;
    /// Fast gradient-free forward.
    ad::Mat forward_raw(const ad::Mat& input) const;

    const std::vector<ad::Tensor>& parameters() const { return params_; }
    std::vector<ad::Tensor>& parameters_mut() { return params_; }
    const MlpConfig& config() const { return config_; }
    std::size_t input_dim() const { return config_.layer_widths.front(); }
    std::size_t output_dim() const { return config_.layer_widths.back(); }

  private:
    MlpConfig config_;
    std::vector<ad::Tensor> params_; // W0, b0, W1, b1, ... in declaration order
};

struct AdamConfig {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter list. Gradients are read
/// from the parameters' grad buffers and zeroed after each step. NaN/Inf
/// gradients throw NonFiniteGradientError naming the parameter.
class Adam {
  public:
    Adam(std::vector<ad::Tensor> params, AdamConfig config);

    void step();
    void zero_grad();
    long step_count() const { return step_count_; }
    const AdamConfig& config() const { return config_; }

  private:
    std::vector<ad::Tensor> params_;
    AdamConfig config_;
    std::vector<ad::Mat> m_;
    std::vector<ad::Mat> v_;
    long step_count_ = 0;
};

/// target <- (1 - tau) * target + tau * online, elementwise. tau in (0, 1].
void polyak_update(std::vector<ad::Tensor>& target_params,
                   const std::vector<ad::Tensor>& online_params, double tau);

/// Central-difference gradient check: rebuilds the loss via `loss_builder`
/// (which must be deterministic given fixed parameters), compares backward()
/// gradients against (f(x+h)-f(x-h))/2h per parameter scalar, and returns the
/// worst relative discrepancy |ad-fd| / max(|ad|, |fd|, 1).
double finite_diff_check(const std::function<ad::Tensor()>& loss_builder,
                         std::vector<ad::Tensor> params, double h = 1e-5);

/// Hard copy of parameter values (architecture must match).
void copy_parameters(std::vector<ad::Tensor>& dst, const std::vector<ad::Tensor>& src);

// --- checkpoint I/O ----------------------------------------------------------
// Single file: one JSON header line (architecture, seeds, config hash, named
// parameter shapes in declaration order) followed by little-endian float64
// parameter blocks in the same order.

struct CheckpointHeader {
    std::string kind;        // e.g. "policy-bundle"
    std::string config_json; // resolved config as serialized JSON
    std::string config_hash;
    std::uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const std::vector<ad::Tensor>& params);

/// Reads the header and fills `params` (shapes and names must match the file).
CheckpointHeader load_checkpoint(const std::string& path, std::vector<ad::Tensor>& params);

/// Header-only read (for CLI inspection before constructing networks).
CheckpointHeader peek_checkpoint(const std::string& path);

} // namespace morl::nn
