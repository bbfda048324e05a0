#include "morl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "morl/errors.hpp"

namespace morl::data {

using json = nlohmann::json;

namespace {

constexpr double kShiftEps = 1e-6;
constexpr int kCapRejectionBudget = 10000;
constexpr double kHalfPi = 1.5707963267948966;

double simplex_angle(double t) { return std::atan2(1.0 - t, t); }

double angle_to_simplex(double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    return c / (c + s);
}

} // namespace

std::size_t OfflineDataset::total_transitions() const {
    std::size_t n = 0;
    for (const auto& t : trajectories) n += t.transitions.size();
    return n;
}

PrefSamplerSpec PrefSamplerSpec::parse(const std::string& text) {
    if (text == "uniform" || text == "uniform-simplex") return uniform();
    if (text == "corners" || text == "corner-mixture") return corners();
    if (text.rfind("fixed:", 0) == 0) {
        std::vector<double> w;
        std::stringstream ss(text.substr(6));
        std::string tok;
        while (std::getline(ss, tok, ',')) w.push_back(std::stod(tok));
        return fixed_pref(Preference(std::move(w)));
    }
    throw ConfigError("unknown preference sampler '" + text +
                      "' (expected uniform | corners | fixed:w1,w2,...)");
}

std::string PrefSamplerSpec::to_string() const {
    switch (kind) {
        case PrefSamplerKind::kUniformSimplex: return "uniform";
        case PrefSamplerKind::kCornerMixture: return "corners";
        case PrefSamplerKind::kFixed: {
            std::string out = "fixed:";
            for (std::size_t i = 0; i < fixed->size(); ++i) {
                if (i) out += ",";
                out += std::to_string((*fixed)[i]);
            }
            return out;
        }
    }
    return "?";
}

Preference sample_uniform_simplex(std::size_t n, nn::Rng& rng) {
    if (n == 2) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double t = unit(rng);
        return Preference({t, 1.0 - t});
    }
    // Dirichlet(1,...,1) via normalized exponentials.
    std::exponential_distribution<double> expd(1.0);
    std::vector<double> w(n);
    double sum = 0.0;
    for (double& x : w) {
        x = expd(rng);
        sum += x;
    }
    for (double& x : w) x /= sum;
    return Preference(std::move(w));
}

Preference sample_pref_in_cap(const Preference& center, double theta, nn::Rng& rng) {
    if (theta < 0.0 || theta > 1.0) throw std::invalid_argument("sample_pref_in_cap: theta outside [0,1]");
    if (theta == 0.0) return center;
    const double cap = 2.0 * theta;
    const std::size_t n = center.size();
    if (n == 2) {
        // Invert the cap condition into an interval of the simplex coordinate;
        // sampling t uniformly is uniform on the cap (the simplex segment's
        // measure is linear in t).
        const double delta = std::acos(std::clamp(1.0 - cap, -1.0, 1.0));
        const double phi0 = simplex_angle(center[0]);
        const double phi_lo = std::max(0.0, phi0 - delta);
        const double phi_hi = std::min(kHalfPi, phi0 + delta);
        const double t_lo = angle_to_simplex(phi_hi);
        const double t_hi = angle_to_simplex(phi_lo);
        std::uniform_real_distribution<double> unit(t_lo, t_hi);
        const double t = std::clamp(unit(rng), 0.0, 1.0);
        return Preference({t, 1.0 - t});
    }
    for (int attempt = 0; attempt < kCapRejectionBudget; ++attempt) {
        Preference cand = sample_uniform_simplex(n, rng);
        if (cosine_distance(cand, center) <= cap) return cand;
    }
    return center;
}

Preference approx_behavior_pref(const Trajectory& traj, const VectorReturn& shift) {
    if (shift.size() != traj.episode_return.size()) {
        throw std::invalid_argument("approx_behavior_pref: shift dimension mismatch");
    }
    VectorReturn shifted(traj.episode_return);
    for (std::size_t j = 0; j < shifted.size(); ++j) shifted[j] += shift[j];
    return l1_normalize(shifted);
}

OfflineDataset generate_dataset(const env::EnvSpec& spec, std::size_t n_traj, double quality_mix,
                                double noise_scale, const PrefSamplerSpec& sampler,
                                std::uint64_t seed) {
    if (n_traj < 1) throw std::invalid_argument("generate_dataset: need at least one trajectory");
    if (quality_mix < 0.0 || quality_mix > 1.0) {
        throw std::invalid_argument("generate_dataset: quality_mix outside [0,1]");
    }
    if (sampler.kind == PrefSamplerKind::kFixed) {
        if (!sampler.fixed) throw ConfigError("generate_dataset: fixed sampler without preference");
        if (sampler.fixed->size() != spec.n_objectives) {
            throw std::invalid_argument("generate_dataset: fixed preference dimension mismatch");
        }
    }

    nn::Rng rng(seed);
    const auto n_expert =
        static_cast<std::size_t>(std::llround(quality_mix * static_cast<double>(n_traj)));

    OfflineDataset ds;
    ds.env_name = spec.name;
    ds.trajectories.reserve(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) {
        Preference pref = [&] {
            switch (sampler.kind) {
                case PrefSamplerKind::kUniformSimplex:
                    return sample_uniform_simplex(spec.n_objectives, rng);
                case PrefSamplerKind::kFixed: return *sampler.fixed;
                case PrefSamplerKind::kCornerMixture: {
                    std::vector<double> w(spec.n_objectives, 0.0);
                    w[i % spec.n_objectives] = 1.0; // round-robin corners
                    return Preference(std::move(w));
                }
            }
            throw std::logic_error("unreachable");
        }();
        const bool expert = i < n_expert;
        env::ScriptedBehaviorPolicy policy(std::move(pref), expert ? 0.0 : noise_scale,
                                           expert ? env::Quality::kExpert : env::Quality::kAmateur);
        ds.trajectories.push_back(env::rollout(
            spec, env::initial_state(spec, seed + i),
            [&](const env::EnvSpec& s, const env::EnvState& st) {
                return env::scripted_action(policy, s, st, rng);
            }));
    }

    // Shift policy: lift negative objectives above zero; additionally floor the
    // whole dataset only if some trajectory's shifted return is all-zero.
    ds.objective_shift.assign(spec.n_objectives, 0.0);
    for (std::size_t j = 0; j < spec.n_objectives; ++j) {
        double mn = 0.0;
        for (const auto& t : ds.trajectories) mn = std::min(mn, t.episode_return[j]);
        if (mn < 0.0) ds.objective_shift[j] = -mn + kShiftEps;
    }
    bool any_all_zero = false;
    for (const auto& t : ds.trajectories) {
        bool all_zero = true;
        for (std::size_t j = 0; j < spec.n_objectives; ++j) {
            if (t.episode_return[j] + ds.objective_shift[j] != 0.0) all_zero = false;
        }
        if (all_zero) {
            any_all_zero = true;
            break;
        }
    }
    if (any_all_zero) {
        for (double& s : ds.objective_shift) s += kShiftEps;
    }

    ds.approx_prefs.reserve(n_traj);
    for (const auto& t : ds.trajectories) {
        ds.approx_prefs.push_back(approx_behavior_pref(t, ds.objective_shift));
    }
    return ds;
}

OfflineDataset filter_subdataset(const OfflineDataset& ds, const Preference& target,
                                 double theta) {
    if (theta < 0.0 || theta > 1.0) throw std::invalid_argument("filter_subdataset: theta outside [0,1]");
    OfflineDataset out;
    out.env_name = ds.env_name;
    out.objective_shift = ds.objective_shift;
    const double cap = 2.0 * theta;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (cosine_distance(target, ds.approx_prefs[i]) <= cap) {
            out.trajectories.push_back(ds.trajectories[i]);
            out.approx_prefs.push_back(ds.approx_prefs[i]);
        }
    }
    out.empty_filter_warning = out.trajectories.empty();
    return out;
}

OfflineDataset ratio_subdataset(const OfflineDataset& ds, const Preference& target, double ratio) {
    if (!(ratio > 0.0) || ratio > 1.0) throw std::invalid_argument("ratio_subdataset: ratio outside (0,1]");
    const auto keep = static_cast<std::size_t>(
        std::ceil(ratio * static_cast<double>(ds.size())));
    if (keep < 1) throw std::invalid_argument("ratio_subdataset: ratio*|D| < 1");
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> dist(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        dist[i] = cosine_distance(target, ds.approx_prefs[i]);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (dist[a] != dist[b]) return dist[a] < dist[b];
        return a < b;
    });
    idx.resize(std::min(keep, idx.size()));
    std::sort(idx.begin(), idx.end());
    OfflineDataset out;
    out.env_name = ds.env_name;
    out.objective_shift = ds.objective_shift;
    for (std::size_t i : idx) {
        out.trajectories.push_back(ds.trajectories[i]);
        out.approx_prefs.push_back(ds.approx_prefs[i]);
    }
    return out;
}

namespace {

std::vector<std::size_t> transition_offsets(const OfflineDataset& ds) {
    std::vector<std::size_t> offsets(ds.size() + 1, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        offsets[i + 1] = offsets[i] + ds.trajectories[i].transitions.size();
    }
    return offsets;
}

} // namespace

SampleBatch sample_batch(const OfflineDataset& ds, std::size_t batch_size, double theta,
                         double wbc_min, nn::Rng& rng) {
    if (ds.size() == 0) throw std::invalid_argument("sample_batch: empty dataset");
    if (batch_size < 1) throw std::invalid_argument("sample_batch: batch size must be >= 1");
    if (!(wbc_min > 0.0) || wbc_min > 1.0) {
        throw std::invalid_argument("sample_batch: wbc_min outside (0,1]");
    }
    const auto offsets = transition_offsets(ds);
    const std::size_t total = offsets.back();
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    std::uniform_real_distribution<double> wbc_dist(wbc_min, 1.0);

    SampleBatch batch;
    batch.transitions.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        const std::size_t flat = pick(rng);
        const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat);
        const std::size_t traj = static_cast<std::size_t>(it - offsets.begin()) - 1;
        const std::size_t within = flat - offsets[traj];
        batch.transitions.push_back(ds.trajectories[traj].transitions[within]);
        Preference pref = sample_pref_in_cap(ds.approx_prefs[traj], theta, rng);
        const double wbc = wbc_dist(rng);
        batch.aug_prefs.push_back(augment(pref, wbc, wbc_min));
        batch.prefs.push_back(std::move(pref));
        batch.bc_weights.push_back(wbc);
    }
    return batch;
}

SampleBatch sample_bc_batch(const OfflineDataset& ds, std::size_t batch_size, nn::Rng& rng) {
    if (ds.size() == 0) throw std::invalid_argument("sample_bc_batch: empty dataset");
    const auto offsets = transition_offsets(ds);
    std::uniform_int_distribution<std::size_t> pick(0, offsets.back() - 1);
    SampleBatch batch;
    for (std::size_t b = 0; b < batch_size; ++b) {
        const std::size_t flat = pick(rng);
        const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat);
        const std::size_t traj = static_cast<std::size_t>(it - offsets.begin()) - 1;
        const std::size_t within = flat - offsets[traj];
        batch.transitions.push_back(ds.trajectories[traj].transitions[within]);
        batch.prefs.push_back(ds.approx_prefs[traj]);
        batch.bc_weights.push_back(1.0);
    }
    return batch;
}

OfflineDataset concat_datasets(const std::vector<OfflineDataset>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_datasets: no parts");
    OfflineDataset out;
    out.env_name = parts.front().env_name;
    const std::size_t n = parts.front().n_objectives();
    for (const auto& p : parts) {
        if (p.env_name != out.env_name) {
            throw std::invalid_argument("concat_datasets: environment mismatch");
        }
        out.trajectories.insert(out.trajectories.end(), p.trajectories.begin(),
                                p.trajectories.end());
    }
    out.objective_shift.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double mn = 0.0;
        for (const auto& t : out.trajectories) mn = std::min(mn, t.episode_return[j]);
        if (mn < 0.0) out.objective_shift[j] = -mn + kShiftEps;
    }
    bool any_all_zero = false;
    for (const auto& t : out.trajectories) {
        bool all_zero = true;
        for (std::size_t j = 0; j < n; ++j) {
            if (t.episode_return[j] + out.objective_shift[j] != 0.0) all_zero = false;
        }
        if (all_zero) any_all_zero = true;
    }
    if (any_all_zero) {
        for (double& s : out.objective_shift) s += kShiftEps;
    }
    out.approx_prefs.reserve(out.trajectories.size());
    for (const auto& t : out.trajectories) {
        out.approx_prefs.push_back(approx_behavior_pref(t, out.objective_shift));
    }
    return out;
}

void save_dataset(const OfflineDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open dataset file for writing: " + path);
    out << json{{"format_version", 1},
                {"env", ds.env_name},
                {"n_objectives", ds.n_objectives()},
                {"objective_shift", ds.objective_shift}}
               .dump()
        << "\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Trajectory& t = ds.trajectories[i];
        json transitions = json::array();
        for (const Transition& tr : t.transitions) {
            transitions.push_back({{"s", tr.state},
                                   {"a", tr.action},
                                   {"r", tr.reward},
                                   {"s2", tr.next_state},
                                   {"done", tr.terminal}});
        }
        out << json{{"transitions", std::move(transitions)},
                    {"episode_return", t.episode_return},
                    {"approx_pref", ds.approx_prefs[i].weights()}}
                   .dump()
            << "\n";
    }
    if (!out) throw std::runtime_error("dataset write failed: " + path);
}

OfflineDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) throw ParseError("dataset: missing header line", 1);
    ++line_no;
    OfflineDataset ds;
    std::size_t n_objectives = 0;
    try {
        json h = json::parse(line);
        if (h.at("format_version").get<int>() != 1) {
            throw ParseError("dataset: unsupported format_version", line_no);
        }
        ds.env_name = h.at("env").get<std::string>();
        n_objectives = h.at("n_objectives").get<std::size_t>();
        ds.objective_shift = h.at("objective_shift").get<VectorReturn>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("dataset header: ") + e.what(), line_no);
    }
    if (ds.objective_shift.size() != n_objectives) {
        throw IntegrityError("dataset: objective_shift dimension mismatch");
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Trajectory traj;
        Preference stored_pref({0.5, 0.5});
        try {
            json j = json::parse(line);
            for (const auto& trj : j.at("transitions")) {
                Transition tr;
                tr.state = trj.at("s").get<std::vector<double>>();
                tr.action = trj.at("a").get<std::vector<double>>();
                tr.reward = trj.at("r").get<VectorReturn>();
                tr.next_state = trj.at("s2").get<std::vector<double>>();
                tr.terminal = trj.at("done").get<bool>();
                traj.transitions.push_back(std::move(tr));
            }
            traj.episode_return = j.at("episode_return").get<VectorReturn>();
            stored_pref = Preference(j.at("approx_pref").get<std::vector<double>>());
        } catch (const json::exception& e) {
            throw ParseError(std::string("dataset trajectory: ") + e.what(), line_no);
        }
        if (traj.episode_return.size() != n_objectives) {
            throw IntegrityError("dataset: trajectory return dimension mismatch at line " +
                                 std::to_string(line_no));
        }
        try {
            traj.validate();
        } catch (const IntegrityError& e) {
            throw IntegrityError(std::string(e.what()) + " at line " + std::to_string(line_no));
        }
        const Preference recomputed = approx_behavior_pref(traj, ds.objective_shift);
        for (std::size_t j = 0; j < n_objectives; ++j) {
            if (std::abs(recomputed[j] - stored_pref[j]) > 1e-12) {
                throw IntegrityError("dataset: approx_pref inconsistent with episode return at line " +
                                     std::to_string(line_no));
            }
        }
        ds.trajectories.push_back(std::move(traj));
        ds.approx_prefs.push_back(std::move(stored_pref));
    }
    return ds;
}

} // namespace morl::data
