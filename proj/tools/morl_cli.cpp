// morl: batch experiment driver for the offline multi-objective RL toolkit.
// Subcommands: gen-data, train, adapt, eval, plot, oracle, repro.
// Exit codes: 0 success, 2 usage, 3 validation, 4 runtime/numerical failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "morl/adaptation.hpp"
#include "morl/baselines.hpp"
#include "morl/config.hpp"
#include "morl/dataset.hpp"
#include "morl/env.hpp"
#include "morl/errors.hpp"
#include "morl/metrics.hpp"
#include "morl/trainer.hpp"
#include "run_artifacts.hpp"
#include "svg_plot.hpp"

#ifndef MORL_VERSION
#define MORL_VERSION "dev"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace morl;

namespace {

std::string run_root() {
    if (const char* root = std::getenv("MORL_RUN_ROOT")) return root;
    return ".";
}

std::string under_root(const std::string& path) {
    if (path.empty() || path.front() == '/' || path.rfind("./", 0) == 0) return path;
    return run_root() + "/" + path;
}

Preference parse_pref(const std::string& text) {
    std::vector<double> w;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) w.push_back(std::stod(tok));
    return Preference(std::move(w));
}

VectorReturn parse_vector(const std::string& text) {
    VectorReturn v;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    return v;
}

double parse_quality(const std::string& text) {
    if (text == "expert") return 1.0;
    if (text == "amateur") return 0.0;
    const double q = std::stod(text);
    if (q < 0.0 || q > 1.0) throw ConfigError("quality must be expert, amateur or in [0,1]");
    return q;
}

struct EvalArtifacts {
    std::vector<std::pair<Preference, VectorReturn>> rows;
    cli::FrontMetrics metrics;
};

EvalArtifacts run_eval(const train::PolicyBundle& bundle, const env::EnvSpec& spec,
                       std::size_t n_prefs, std::size_t episodes, const cli::WbcSpec& wbc,
                       const VectorReturn& r0, std::uint64_t seed, const std::string& out_dir,
                       const std::string& config_hash) {
    const auto resolved = cli::resolve_wbc(bundle, spec, wbc, n_prefs, seed);
    const auto rows = train::evaluate_policy(
        bundle, spec, n_prefs, episodes,
        [&](const Preference&, std::size_t k) { return resolved.per_pref[k]; }, seed);
    EvalArtifacts out{rows, cli::compute_front_metrics(rows, r0)};
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        cli::write_front_csv(out_dir + "/front.csv", rows);
        cli::write_front_metrics_json(out_dir + "/metrics.json", out.metrics, config_hash, seed);
        if (!resolved.reports.empty()) {
            std::ofstream rep(out_dir + "/adaptation_reports.json", std::ios::trunc);
            rep << "[\n";
            for (std::size_t i = 0; i < resolved.reports.size(); ++i) {
                rep << adapt::report_to_json(resolved.reports[i])
                    << (i + 1 < resolved.reports.size() ? ",\n" : "\n");
            }
            rep << "]\n";
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const std::string& env_name, std::size_t n, const std::string& quality,
                 double noise, const std::string& pref, std::uint64_t seed,
                 const std::string& out) {
    auto [spec, st] = env::make_env(env_name, seed);
    (void)st;
    const double quality_mix = parse_quality(quality);
    const auto sampler = data::PrefSamplerSpec::parse(pref);
    const auto ds = data::generate_dataset(spec, n, quality_mix, noise, sampler, seed);
    const std::string path = under_root(out);
    if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
    data::save_dataset(ds, path);

    std::ostringstream resolved;
    resolved << "[gen-data]\nenv=" << env_name << "\nn=" << n << "\nquality=" << quality_mix
             << "\nnoise=" << noise << "\npref=" << sampler.to_string() << "\nseed=" << seed
             << "\n";
    std::ofstream manifest(path + ".manifest.json", std::ios::trunc);
    manifest << json{{"command", "gen-data"},
                     {"config_hash", config::fnv1a_hex(resolved.str())},
                     {"seed", seed},
                     {"code_version", MORL_VERSION},
                     {"trajectories", ds.size()}}
                    .dump(2)
             << "\n";
    std::cout << "wrote " << ds.size() << " trajectories to " << path << "\n";
    return 0;
}

int cmd_train(train::TrainConfig cfg, const std::string& data_path, const std::string& out_dir) {
    cfg.validate();
    const auto ds = data::load_dataset(under_root(data_path));
    const std::string hash = config::config_hash(cfg);
    const std::string dir = under_root(out_dir);
    const auto result = train::train(cfg, ds, dir, hash);
    cli::write_manifest(dir, {"train", hash, cfg.seed, MORL_VERSION,
                              config::render_train_config(cfg)});
    std::cout << "trained " << cfg.algo << " for " << cfg.total_iterations
              << " iterations; checkpoint at " << dir << "/checkpoint.ckpt\n";
    if (!result.log.empty()) {
        std::cout << "final losses: critic=" << result.log.back().critic_loss
                  << " actor=" << result.log.back().actor_loss << "\n";
    }
    return 0;
}

int cmd_adapt(const std::string& ckpt, const std::string& pref_text, std::size_t n_iter,
              std::size_t n_traj, double wbc_min_override, std::uint64_t seed,
              const std::string& out) {
    train::PolicyBundle bundle = train::load_bundle(under_root(ckpt));
    if (wbc_min_override > 0.0) bundle.config.wbc_min = wbc_min_override;
    auto [spec, st] = env::make_env(bundle.config.env_name, seed);
    (void)st;
    const Preference target = parse_pref(pref_text);
    const auto report = adapt::adapt(bundle, spec, target, n_iter, n_traj, seed);
    const std::string path = under_root(out);
    if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
    std::ofstream f(path, std::ios::trunc);
    f << adapt::report_to_json(report) << "\n";
    std::cout << "adapted wbc for pref " << pref_text << ": " << report.final_wbc << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt, std::size_t n_prefs, std::size_t episodes,
             const std::string& wbc_text, const std::string& r0_text, std::uint64_t seed,
             const std::string& out_dir) {
    const train::PolicyBundle bundle = train::load_bundle(under_root(ckpt));
    auto [spec, st] = env::make_env(bundle.config.env_name, seed);
    (void)st;
    const auto wbc = cli::WbcSpec::parse(wbc_text);
    const VectorReturn r0 = r0_text.empty() ? VectorReturn(spec.n_objectives, 0.0)
                                            : parse_vector(r0_text);
    const std::string dir = under_root(out_dir);
    const std::string hash = config::config_hash(bundle.config);
    const auto result = run_eval(bundle, spec, n_prefs, episodes, wbc, r0, seed, dir, hash);
    cli::write_manifest(dir, {"eval", hash, seed, MORL_VERSION,
                              config::render_train_config(bundle.config) +
                                  "[eval]\nwbc=" + wbc.to_string() + "\n"});
    std::cout << "hv=" << result.metrics.hv << " sp=" << result.metrics.sp_filtered
              << " eu=" << result.metrics.eu << " (" << n_prefs << " prefs x " << episodes
              << " episodes)\n";
    return 0;
}

int cmd_plot(const std::string& front_path, const std::string& data_path,
             const std::string& env_name, bool overlay_oracle, const std::string& out) {
    std::vector<cli::PlotSeries> series;
    VectorReturn r0{0.0, 0.0};
    std::string annotation = "morl " MORL_VERSION;

    if (!data_path.empty()) {
        const auto ds = data::load_dataset(under_root(data_path));
        cli::PlotSeries grey{"dataset returns", "#9e9e9e", {}, false};
        for (const auto& t : ds.trajectories) grey.points.push_back(t.episode_return);
        series.push_back(std::move(grey));
    }
    if (overlay_oracle) {
        auto [spec, st] = env::make_env(env_name, 0);
        (void)st;
        series.push_back({"oracle front", "#2e7d32", env::oracle_pareto_front(spec), true});
    }
    if (!front_path.empty()) {
        const auto rows = cli::read_front_csv(under_root(front_path));
        cli::PlotSeries front{"evaluated front", "#1565c0", {}, false};
        for (const auto& [p, r] : rows) front.points.push_back(r);
        series.push_back(std::move(front));
        // pull reference point and provenance from the metrics sidecar when present
        const std::string sidecar =
            (fs::path(under_root(front_path)).parent_path() / "metrics.json").string();
        if (std::ifstream m(sidecar); m.good()) {
            json j = json::parse(m);
            r0 = j.at("reference_point").get<VectorReturn>();
            annotation += "  config_hash=" + j.at("config_hash").get<std::string>() +
                          "  seed=" + std::to_string(j.at("seed").get<std::uint64_t>());
        }
    }
    const std::string svg = cli::render_svg(series, r0, "approximate Pareto front", annotation);
    const std::string path = under_root(out);
    if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
    std::ofstream f(path, std::ios::trunc);
    f << svg;
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_oracle(const std::string& env_name, const std::string& r0_text,
               const std::string& out_dir) {
    auto [spec, st] = env::make_env(env_name, 0);
    (void)st;
    const auto front = env::oracle_pareto_front(spec);
    const VectorReturn r0 = r0_text.empty() ? VectorReturn(spec.n_objectives, 0.0)
                                            : parse_vector(r0_text);
    const std::string dir = under_root(out_dir);
    fs::create_directories(dir);
    {
        std::ofstream f(dir + "/oracle_front.csv", std::ios::trunc);
        f.precision(17);
        for (std::size_t j = 0; j < spec.n_objectives; ++j) {
            f << "return" << j << (j + 1 < spec.n_objectives ? "," : "\n");
        }
        for (const auto& p : front) {
            for (std::size_t j = 0; j < p.size(); ++j) {
                f << p[j] << (j + 1 < p.size() ? "," : "\n");
            }
        }
    }
    ParetoFront pf(front, r0);
    std::ofstream f(dir + "/metrics.json", std::ios::trunc);
    f << json{{"reference_point", r0},
              {"hv", hypervolume(pf)},
              {"sp_filtered", sparsity(pf)},
              {"sp_raw", sparsity_raw(front)},
              {"config_hash", config::fnv1a_hex("oracle:" + env_name)},
              {"seed", 0}}
             .dump(2)
      << "\n";
    std::cout << "oracle front: " << front.size() << " points, hv=" << hypervolume(pf) << "\n";
    return 0;
}

// Desk/smoke reproduction: datasets, per-algorithm training over seeds,
// adaptation-driven evaluation, and a markdown table of Hv/Sp/EU.
int cmd_repro(const std::string& suite, const std::string& out_dir, std::size_t iters_override) {
    const bool smoke = suite == "smoke";
    if (!smoke && suite != "desk") throw ConfigError("unknown suite '" + suite + "'");
    const std::string dir = under_root(out_dir);
    fs::create_directories(dir);

    const std::size_t n_seeds = smoke ? 1 : 3;
    const std::size_t iters = iters_override > 0 ? iters_override : (smoke ? 2000 : 20000);
    const std::size_t n_prefs = smoke ? 11 : 101;
    const std::size_t episodes = smoke ? 3 : 5;

    auto [spec, st] = env::make_env("mo-lineworld", 0);
    (void)st;
    const auto ds = data::generate_dataset(spec, smoke ? 100 : 500, 1.0, 0.0,
                                           data::PrefSamplerSpec::uniform(), 0);
    data::save_dataset(ds, dir + "/dataset.jsonl");
    const double oracle_hv = hypervolume(ParetoFront(env::oracle_pareto_front(spec), {0, 0}));

    struct Row {
        std::string algo;
        std::vector<double> hv, sp, eu;
    };
    std::vector<Row> rows;
    const std::vector<std::string> algos =
        smoke ? std::vector<std::string>{"mse"}
              : std::vector<std::string>{"diffusion", "cvae", "mse", "mo-cql", "bcp"};
    for (const auto& algo : algos) {
        Row row{algo, {}, {}, {}};
        for (std::size_t seed = 0; seed < n_seeds; ++seed) {
            train::TrainConfig cfg;
            cfg.env_name = "mo-lineworld";
            cfg.algo = algo;
            cfg.theta = 0.0;
            cfg.eta = algo == "diffusion" ? 10.0 : (algo == "cvae" ? 200.0 : 50.0);
            cfg.hidden = {48, 48};
            cfg.batch_size = 128;
            cfg.total_iterations = iters;
            cfg.seed = seed;
            const std::string run_dir = dir + "/" + algo + "_seed" + std::to_string(seed);
            const std::string hash = config::config_hash(cfg);
            const auto result = train::train(cfg, ds, run_dir, hash);
            cli::write_manifest(run_dir, {"repro/" + suite, hash, seed, MORL_VERSION,
                                          config::render_train_config(cfg)});
            const cli::WbcSpec wbc =
                result.bundle.augmented()
                    ? cli::WbcSpec{cli::WbcSpec::Mode::kAdapt, 0.6, smoke ? 2u : 3u, smoke ? 5u : 10u}
                    : cli::WbcSpec{};
            const auto ev = run_eval(result.bundle, spec, n_prefs, episodes, wbc, {0, 0},
                                     seed, run_dir + "/eval", hash);
            row.hv.push_back(ev.metrics.hv);
            row.sp.push_back(ev.metrics.sp_filtered);
            row.eu.push_back(ev.metrics.eu);
        }
        rows.push_back(std::move(row));
    }

    auto mean_std = [](const std::vector<double>& v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var = v.size() > 1 ? var / (v.size() - 1) : 0.0;
        return std::pair<double, double>{mean, std::sqrt(var)};
    };

    std::ofstream md(dir + "/results.md", std::ios::trunc);
    md << "# mo-lineworld expert dataset (" << suite << " suite)\n\n";
    md << "oracle hypervolume (r0 = origin): " << oracle_hv << "\n\n";
    md << "| algorithm | Hv | Sp | EU |\n|---|---|---|---|\n";
    md.precision(4);
    for (const auto& row : rows) {
        const auto [hm, hs] = mean_std(row.hv);
        const auto [sm, ss] = mean_std(row.sp);
        const auto [em, es] = mean_std(row.eu);
        md << "| " << row.algo << " | " << hm << " ± " << hs << " | " << sm << " ± " << ss
           << " | " << em << " ± " << es << " |\n";
    }
    md << "\nruns: " << n_seeds << " seeds, " << iters << " iterations, " << n_prefs
       << " preferences x " << episodes << " episodes, adaptation N=3 K=10 (fixed wbc for "
          "baselines).\n";
    std::cout << "wrote " << dir << "/results.md\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"morl: policy-regularized offline multi-objective RL toolkit"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // gen-data ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen-data", "generate an offline dataset");
    std::string g_env, g_quality = "expert", g_pref = "uniform", g_out = "dataset.jsonl";
    std::size_t g_n = 100;
    double g_noise = 0.3;
    std::uint64_t g_seed = 0;
    gen->add_option("--env", g_env, "environment name")->required();
    gen->add_option("--n", g_n, "number of trajectories");
    gen->add_option("--quality", g_quality, "expert | amateur | expert fraction in [0,1]");
    gen->add_option("--noise", g_noise, "amateur noise scale");
    gen->add_option("--pref", g_pref, "uniform | corners | fixed:w1,w2,...");
    gen->add_option("--seed", g_seed, "rng seed");
    gen->add_option("--out", g_out, "output jsonl path");

    // train -------------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "train a policy bundle on a dataset");
    std::string t_config, t_data, t_out = "run";
    train::TrainConfig t_cfg;
    bool t_theta_set = false, t_eta_set = false;
    double t_theta = 0.0, t_eta = 0.0;
    std::string t_algo, t_env;
    std::uint64_t t_seed = 0;
    bool t_seed_set = false;
    std::size_t t_iters = 0;
    double t_alpha = -1.0;
    tr->add_option("--config", t_config, "key=value config file ([train] section)");
    tr->add_option("--data", t_data, "dataset jsonl path")->required();
    tr->add_option("--out", t_out, "run directory");
    tr->add_option("--algo", t_algo, "mse | cvae | diffusion | mo-cql | bcp");
    tr->add_option("--env", t_env, "environment name");
    tr->add_option("--theta", t_theta, "preference-filter radius parameter")
        ->each([&](const std::string&) { t_theta_set = true; });
    tr->add_option("--eta", t_eta, "behavior cloning scale")
        ->each([&](const std::string&) { t_eta_set = true; });
    tr->add_option("--alpha", t_alpha, "MO-CQL conservative weight");
    tr->add_option("--iters", t_iters, "total training iterations");
    tr->add_option("--seed", t_seed, "rng seed")
        ->each([&](const std::string&) { t_seed_set = true; });

    // adapt -------------------------------------------------------------------
    auto* ad_cmd = app.add_subcommand("adapt", "deployment-time regularization weight adaptation");
    std::string a_ckpt, a_pref, a_out = "adaptation_report.json";
    std::size_t a_n = 3, a_k = 10;
    double a_wbc_min = -1.0;
    std::uint64_t a_seed = 0;
    ad_cmd->add_option("--ckpt", a_ckpt, "policy bundle checkpoint")->required();
    ad_cmd->add_option("--pref", a_pref, "target preference, e.g. 0.3,0.7")->required();
    ad_cmd->add_option("--N", a_n, "gradient iterations");
    ad_cmd->add_option("--K", a_k, "trajectories per iteration");
    ad_cmd->add_option("--wbc-min", a_wbc_min, "lower bc-weight bound override");
    ad_cmd->add_option("--seed", a_seed, "rng seed");
    ad_cmd->add_option("--out", a_out, "report json path");

    // eval --------------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint over a preference grid");
    std::string e_ckpt, e_wbc = "fixed:0.6", e_r0, e_out = "eval";
    std::size_t e_prefs = 101, e_episodes = 5;
    std::uint64_t e_seed = 0;
    ev->add_option("--ckpt", e_ckpt, "policy bundle checkpoint")->required();
    ev->add_option("--prefs", e_prefs, "number of equidistant preferences");
    ev->add_option("--episodes", e_episodes, "episodes per preference");
    ev->add_option("--wbc", e_wbc, "fixed:<v> | adapt[:N=..,K=..] | oracle[:grid=..,episodes=..]");
    ev->add_option("--r0", e_r0, "reference point, e.g. 0,0");
    ev->add_option("--seed", e_seed, "rng seed");
    ev->add_option("--out", e_out, "output directory");

    // plot --------------------------------------------------------------------
    auto* pl = app.add_subcommand("plot", "render an svg of fronts and dataset returns");
    std::string p_front, p_data, p_env = "mo-lineworld", p_out = "front.svg";
    bool p_oracle = false;
    pl->add_option("--front", p_front, "front.csv from eval");
    pl->add_option("--data", p_data, "dataset jsonl for the grey scatter");
    pl->add_option("--env", p_env, "environment (for the oracle overlay)");
    pl->add_flag("--oracle", p_oracle, "overlay the oracle front");
    pl->add_option("--out", p_out, "output svg path");

    // oracle ------------------------------------------------------------------
    auto* orc = app.add_subcommand("oracle", "dump an environment's oracle Pareto front");
    std::string o_env, o_r0, o_out = "oracle";
    orc->add_option("--env", o_env, "environment name")->required();
    orc->add_option("--r0", o_r0, "reference point override");
    orc->add_option("--out", o_out, "output directory");

    // repro -------------------------------------------------------------------
    auto* rp = app.add_subcommand("repro", "run the desk-scale reproduction suite");
    std::string r_suite = "smoke", r_out = "repro";
    std::size_t r_iters = 0;
    rp->add_option("--suite", r_suite, "smoke | desk");
    rp->add_option("--out", r_out, "output directory");
    rp->add_option("--iters", r_iters, "training iteration override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen_data(g_env, g_n, g_quality, g_noise, g_pref, g_seed, g_out);
        }
        if (tr->parsed()) {
            if (!t_config.empty()) {
                config::apply_train_section(config::parse_config_file(under_root(t_config)),
                                            &t_cfg);
            }
            if (!t_algo.empty()) t_cfg.algo = t_algo;
            if (!t_env.empty()) t_cfg.env_name = t_env;
            if (t_theta_set) t_cfg.theta = t_theta;
            if (t_eta_set) t_cfg.eta = t_eta;
            if (t_alpha >= 0.0) t_cfg.cql_alpha = t_alpha;
            if (t_iters > 0) t_cfg.total_iterations = t_iters;
            if (t_seed_set) t_cfg.seed = t_seed;
            return cmd_train(t_cfg, t_data, t_out);
        }
        if (ad_cmd->parsed()) {
            return cmd_adapt(a_ckpt, a_pref, a_n, a_k, a_wbc_min, a_seed, a_out);
        }
        if (ev->parsed()) {
            return cmd_eval(e_ckpt, e_prefs, e_episodes, e_wbc, e_r0, e_seed, e_out);
        }
        if (pl->parsed()) {
            return cmd_plot(p_front, p_data, p_env, p_oracle, p_out);
        }
        if (orc->parsed()) {
            return cmd_oracle(o_env, o_r0, o_out);
        }
        if (rp->parsed()) {
            return cmd_repro(r_suite, r_out, r_iters);
        }
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
