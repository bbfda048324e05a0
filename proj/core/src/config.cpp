#include "morl/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "morl/errors.hpp"

namespace morl::config {

using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::size_t> parse_widths(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoul(trim(tok)));
    return out;
}

std::string widths_to_string(const std::vector<std::size_t>& w) {
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(w[i]);
    }
    return out;
}

} // namespace

ConfigMap parse_config_text(const std::string& text, const std::string& origin) {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string line, section = "train";
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(origin + ": unterminated section", line_no);
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(origin + ": expected key=value", line_no);
        cfg[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return cfg;
}

ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

void apply_train_section(const ConfigMap& cfg, train::TrainConfig* out) {
    const auto it = cfg.find("train");
    if (it == cfg.end()) return;
    for (const auto& [key, value] : it->second) {
        if (key == "env") out->env_name = value;
        else if (key == "algo") out->algo = value;
        else if (key == "theta") out->theta = std::stod(value);
        else if (key == "wbc_min") out->wbc_min = std::stod(value);
        else if (key == "eta") out->eta = std::stod(value);
        else if (key == "gamma") out->gamma = std::stod(value);
        else if (key == "batch_size") out->batch_size = std::stoul(value);
        else if (key == "total_iterations") out->total_iterations = std::stoul(value);
        else if (key == "n_critics") out->n_critics = std::stoul(value);
        else if (key == "polyak_tau") out->polyak_tau = std::stod(value);
        else if (key == "seed") out->seed = std::stoull(value);
        else if (key == "learning_rate") out->learning_rate = std::stod(value);
        else if (key == "adam_beta1") out->adam_beta1 = std::stod(value);
        else if (key == "adam_beta2") out->adam_beta2 = std::stod(value);
        else if (key == "adam_eps") out->adam_eps = std::stod(value);
        else if (key == "hidden") out->hidden = parse_widths(value);
        else if (key == "latent_dim") out->latent_dim = std::stoul(value);
        else if (key == "diffusion_steps") out->diffusion_steps = std::stoul(value);
        else if (key == "diffusion_beta_lo") out->diffusion_beta_lo = std::stod(value);
        else if (key == "diffusion_beta_hi") out->diffusion_beta_hi = std::stod(value);
        else if (key == "cql_alpha") out->cql_alpha = std::stod(value);
        else if (key == "log_interval") out->log_interval = std::stoul(value);
        else if (key == "checkpoint_interval") out->checkpoint_interval = std::stoul(value);
        else throw ConfigError("unknown [train] config key '" + key + "'");
    }
}

std::string render_train_config(const train::TrainConfig& c) {
    std::ostringstream out;
    out << "[train]\n";
    out << "env=" << c.env_name << "\n";
    out << "algo=" << c.algo << "\n";
    out << "theta=" << c.theta << "\n";
    out << "wbc_min=" << c.wbc_min << "\n";
    out << "eta=" << c.eta << "\n";
    out << "gamma=" << c.gamma << "\n";
    out << "batch_size=" << c.batch_size << "\n";
    out << "total_iterations=" << c.total_iterations << "\n";
    out << "n_critics=" << c.n_critics << "\n";
    out << "polyak_tau=" << c.polyak_tau << "\n";
    out << "seed=" << c.seed << "\n";
    out << "learning_rate=" << c.learning_rate << "\n";
    out << "adam_beta1=" << c.adam_beta1 << "\n";
    out << "adam_beta2=" << c.adam_beta2 << "\n";
    out << "adam_eps=" << c.adam_eps << "\n";
    out << "hidden=" << widths_to_string(c.hidden) << "\n";
    out << "latent_dim=" << c.latent_dim << "\n";
    out << "diffusion_steps=" << c.diffusion_steps << "\n";
    out << "diffusion_beta_lo=" << c.diffusion_beta_lo << "\n";
    out << "diffusion_beta_hi=" << c.diffusion_beta_hi << "\n";
    out << "cql_alpha=" << c.cql_alpha << "\n";
    out << "log_interval=" << c.log_interval << "\n";
    out << "checkpoint_interval=" << c.checkpoint_interval << "\n";
    return out.str();
}

std::string train_config_to_json(const train::TrainConfig& c) {
    json j{{"env", c.env_name},
           {"algo", c.algo},
           {"theta", c.theta},
           {"wbc_min", c.wbc_min},
           {"eta", c.eta},
           {"gamma", c.gamma},
           {"batch_size", c.batch_size},
           {"total_iterations", c.total_iterations},
           {"n_critics", c.n_critics},
           {"polyak_tau", c.polyak_tau},
           {"seed", c.seed},
           {"learning_rate", c.learning_rate},
           {"adam_beta1", c.adam_beta1},
           {"adam_beta2", c.adam_beta2},
           {"adam_eps", c.adam_eps},
           {"hidden", c.hidden},
           {"latent_dim", c.latent_dim},
           {"diffusion_steps", c.diffusion_steps},
           {"diffusion_beta_lo", c.diffusion_beta_lo},
           {"diffusion_beta_hi", c.diffusion_beta_hi},
           {"cql_alpha", c.cql_alpha},
           {"log_interval", c.log_interval},
           {"checkpoint_interval", c.checkpoint_interval}};
    return j.dump();
}

train::TrainConfig train_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("train config json: ") + e.what(), 0);
    }
    train::TrainConfig c;
    c.env_name = j.at("env").get<std::string>();
    c.algo = j.at("algo").get<std::string>();
    c.theta = j.at("theta").get<double>();
    c.wbc_min = j.at("wbc_min").get<double>();
    c.eta = j.at("eta").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.total_iterations = j.at("total_iterations").get<std::size_t>();
    c.n_critics = j.at("n_critics").get<std::size_t>();
    c.polyak_tau = j.at("polyak_tau").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    c.diffusion_steps = j.at("diffusion_steps").get<std::size_t>();
    c.diffusion_beta_lo = j.at("diffusion_beta_lo").get<double>();
    c.diffusion_beta_hi = j.at("diffusion_beta_hi").get<double>();
    c.cql_alpha = j.at("cql_alpha").get<double>();
    c.log_interval = j.at("log_interval").get<std::size_t>();
    c.checkpoint_interval = j.at("checkpoint_interval").get<std::size_t>();
    return c;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string config_hash(const train::TrainConfig& cfg) {
    return fnv1a_hex(render_train_config(cfg));
}

} // namespace morl::config
