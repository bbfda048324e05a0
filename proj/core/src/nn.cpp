#include "morl/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "morl/errors.hpp"

namespace morl::nn {

using json = nlohmann::json;

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::kRelu;
    if (s == "tanh") return Activation::kTanh;
    if (s == "mish") return Activation::kMish;
    throw ConfigError("unknown activation '" + s + "'");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::kRelu: return "relu";
        case Activation::kTanh: return "tanh";
        case Activation::kMish: return "mish";
    }
    return "?";
}

Mlp::Mlp(MlpConfig config, Rng& rng, const std::string& name_prefix)
    : config_(std::move(config)) {
    const auto& w = config_.layer_widths;
    if (w.size() < 3) throw ConfigError("Mlp: need at least one hidden layer");
    for (std::size_t width : w) {
        if (width < 1) throw ConfigError("Mlp: zero layer width");
    }
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(w[l]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        ad::Mat W(w[l], w[l + 1]);
        for (double& x : W.d) x = dist(rng);
        ad::Mat b(1, w[l + 1]);
        for (double& x : b.d) x = dist(rng);
        params_.push_back(ad::Tensor::parameter(std::move(W),
                                                name_prefix + ".layer" + std::to_string(l) + ".W"));
        params_.push_back(ad::Tensor::parameter(std::move(b),
                                                name_prefix + ".layer" + std::to_string(l) + ".b"));
    }
}

ad::Tensor Mlp::forward(const ad::Tensor& input) const {
    if (input.cols() != input_dim()) {
        throw std::invalid_argument("Mlp::forward: input dim " + std::to_string(input.cols()) +
                                    " != " + std::to_string(input_dim()));
    }
    ad::Tensor h = input;
    const std::size_t n_layers = params_.size() / 2;
    for (std::size_t l = 0; l < n_layers; ++l) {
        h = ad::add_bias(ad::matmul(h, params_[2 * l]), params_[2 * l + 1]);
        if (l + 1 < n_layers) {
            switch (config_.activation) {
                case Activation::kRelu: h = ad::relu(h); break;
                case Activation::kTanh: h = ad::tanh_(h); break;
                case Activation::kMish: h = ad::mish(h); break;
            }
        }
    }
    if (config_.output_activation == OutputActivation::kTanh) h = ad::tanh_(h);
    return h;
}

ad::Mat Mlp::forward_raw(const ad::Mat& input) const {
    if (input.cols != input_dim()) {
        throw std::invalid_argument("Mlp::forward_raw: input dim mismatch");
    }
    ad::Mat h = input;
    const std::size_t n_layers = params_.size() / 2;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const ad::Mat& W = params_[2 * l].value();
        const ad::Mat& b = params_[2 * l + 1].value();
        ad::Mat out(h.rows, W.cols);
        const double* hd = h.d.data();
        const double* wd = W.d.data();
        double* od = out.d.data();
        for (std::size_t i = 0; i < h.rows; ++i) {
            double* orow = od + i * W.cols;
            for (std::size_t j = 0; j < W.cols; ++j) orow[j] = b.d[j];
            for (std::size_t k = 0; k < h.cols; ++k) {
                const double hv = hd[i * h.cols + k];
                const double* wrow = wd + k * W.cols;
                for (std::size_t j = 0; j < W.cols; ++j) orow[j] += hv * wrow[j];
            }
        }
        if (l + 1 < n_layers) {
            for (double& x : out.d) {
                switch (config_.activation) {
                    case Activation::kRelu: x = x > 0.0 ? x : 0.0; break;
                    case Activation::kTanh: x = std::tanh(x); break;
                    case Activation::kMish: {
                        const double sp = x > 30.0 ? x : std::log1p(std::exp(x));
                        x = x * std::tanh(sp);
                        break;
                    }
                }
            }
        }
        h = std::move(out);
    }
    if (config_.output_activation == OutputActivation::kTanh) {
        for (double& x : h.d) x = std::tanh(x);
    }
    return h;
}

Adam::Adam(std::vector<ad::Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p.value().rows, p.value().cols, 0.0);
        v_.emplace_back(p.value().rows, p.value().cols, 0.0);
    }
}

void Adam::step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
        auto node = params_[p].node();
        const ad::Mat& g = node->grad;
        for (double gv : g.d) {
            if (!std::isfinite(gv)) throw NonFiniteGradientError(node->name);
        }
        ad::Mat& m = m_[p];
        ad::Mat& v = v_[p];
        ad::Mat& x = node->value;
        for (std::size_t i = 0; i < x.size(); ++i) {
            m.d[i] = config_.beta1 * m.d[i] + (1.0 - config_.beta1) * g.d[i];
            v.d[i] = config_.beta2 * v.d[i] + (1.0 - config_.beta2) * g.d[i] * g.d[i];
            const double mhat = m.d[i] / bc1;
            const double vhat = v.d[i] / bc2;
            x.d[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.eps);
        }
        node->zero_grad();
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

void polyak_update(std::vector<ad::Tensor>& target_params,
                   const std::vector<ad::Tensor>& online_params, double tau) {
    if (!(tau > 0.0) || tau > 1.0) throw std::invalid_argument("polyak_update: tau outside (0,1]");
    if (target_params.size() != online_params.size()) {
        throw std::invalid_argument("polyak_update: parameter count mismatch");
    }
    for (std::size_t p = 0; p < target_params.size(); ++p) {
        ad::Mat& t = target_params[p].value_mut();
        const ad::Mat& o = online_params[p].value();
        if (!t.same_shape(o)) throw std::invalid_argument("polyak_update: shape mismatch");
        for (std::size_t i = 0; i < t.size(); ++i) {
            t.d[i] = (1.0 - tau) * t.d[i] + tau * o.d[i];
        }
    }
}

double finite_diff_check(const std::function<ad::Tensor()>& loss_builder,
                         std::vector<ad::Tensor> params, double h) {
    for (auto& p : params) p.zero_grad();
    ad::Tensor loss = loss_builder();
    ad::backward(loss);
    std::vector<ad::Mat> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p.grad());
    for (auto& p : params) p.zero_grad();

    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        ad::Mat& x = params[p].node()->value;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double orig = x.d[i];
            x.d[i] = orig + h;
            const double fp = loss_builder().value().d[0];
            x.d[i] = orig - h;
            const double fm = loss_builder().value().d[0];
            x.d[i] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double a = analytic[p].d[i];
            const double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1.0});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

void copy_parameters(std::vector<ad::Tensor>& dst, const std::vector<ad::Tensor>& src) {
    if (dst.size() != src.size()) throw std::invalid_argument("copy_parameters: count mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (!dst[i].value().same_shape(src[i].value())) {
            throw std::invalid_argument("copy_parameters: shape mismatch");
        }
        dst[i].value_mut().d = src[i].value().d;
    }
}

namespace {

void write_f64_le(std::ofstream& out, const std::vector<double>& v) {
    static_assert(sizeof(double) == 8);
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * 8));
    } else {
        for (double x : v) {
            std::uint64_t bits;
            std::memcpy(&bits, &x, 8);
            char buf[8];
            for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
            out.write(buf, 8);
        }
    }
}

void read_f64_le(std::ifstream& in, std::vector<double>& v) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
    } else {
        for (double& x : v) {
            char buf[8];
            in.read(buf, 8);
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) {
                bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[b])) << (8 * b);
            }
            std::memcpy(&x, &bits, 8);
        }
    }
    if (!in) throw ParseError("checkpoint: truncated parameter block", 0);
}

json header_to_json(const CheckpointHeader& h, const std::vector<ad::Tensor>& params) {
    json params_j = json::array();
    for (const auto& p : params) {
        params_j.push_back({{"name", p.name()}, {"rows", p.value().rows}, {"cols", p.value().cols}});
    }
    return json{{"format", 1},
                {"kind", h.kind},
                {"config", h.config_json},
                {"config_hash", h.config_hash},
                {"seed", h.seed},
                {"params", params_j}};
}

} // namespace

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const std::vector<ad::Tensor>& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out << header_to_json(header, params).dump() << "\n";
    for (const auto& p : params) write_f64_le(out, p.value().d);
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

CheckpointHeader peek_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("checkpoint: missing header", 1);
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("checkpoint header: ") + e.what(), 1);
    }
    CheckpointHeader h;
    h.kind = j.at("kind").get<std::string>();
    h.config_json = j.at("config").get<std::string>();
    h.config_hash = j.at("config_hash").get<std::string>();
    h.seed = j.at("seed").get<std::uint64_t>();
    return h;
}

CheckpointHeader load_checkpoint(const std::string& path, std::vector<ad::Tensor>& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("checkpoint: missing header", 1);
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("checkpoint header: ") + e.what(), 1);
    }
    const auto& params_j = j.at("params");
    if (params_j.size() != params.size()) {
        throw IntegrityError("checkpoint: expected " + std::to_string(params.size()) +
                             " parameters, file has " + std::to_string(params_j.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& pj = params_j[i];
        if (pj.at("name").get<std::string>() != params[i].name() ||
            pj.at("rows").get<std::size_t>() != params[i].value().rows ||
            pj.at("cols").get<std::size_t>() != params[i].value().cols) {
            throw IntegrityError("checkpoint: parameter " + std::to_string(i) +
                                 " does not match the expected architecture");
        }
    }
    for (auto& p : params) read_f64_le(in, p.node()->value.d);

    CheckpointHeader h;
    h.kind = j.at("kind").get<std::string>();
    h.config_json = j.at("config").get<std::string>();
    h.config_hash = j.at("config_hash").get<std::string>();
    h.seed = j.at("seed").get<std::uint64_t>();
    return h;
}

} // namespace morl::nn
