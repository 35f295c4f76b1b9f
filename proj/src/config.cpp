#include "fdm/config.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "fdm/csv.hpp"

namespace fdm {
namespace {

using Ref = std::function<double&(RunConfig&)>;
using IntRef = std::function<int&(RunConfig&)>;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
    throw std::invalid_argument("config key " + key + ": " + what);
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    int out = 0;
    try {
        out = std::stoi(v, &pos);
    } catch (...) {
        fail(key, "expected an integer, got '" + v + "'");
    }
    if (pos != v.size()) fail(key, "expected an integer, got '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (...) {
        fail(key, "expected a number, got '" + v + "'");
    }
    if (pos != v.size()) fail(key, "expected a number, got '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    std::uint64_t out = 0;
    if (v.find('-') != std::string::npos)
        fail(key, "expected an unsigned integer, got '" + v + "'");
    try {
        out = std::stoull(v, &pos);
    } catch (...) {
        fail(key, "expected an unsigned integer, got '" + v + "'");
    }
    if (pos != v.size()) fail(key, "expected an unsigned integer, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    fail(key, "expected a boolean (0/1/true/false), got '" + v + "'");
}

std::string fmt_int(int v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%d", v);
    return buf;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_u64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%llu", static_cast<unsigned long long>(v));
    return buf;
}

void key_int(std::vector<ConfigKey>& out, std::string name, IntRef ref, int lo, int hi) {
    out.push_back(
        {name, [ref](const RunConfig& rc) { return fmt_int(ref(const_cast<RunConfig&>(rc))); },
         [ref, name, lo, hi](RunConfig& rc, const std::string& v) {
             const int x = parse_int(name, v);
             if (x < lo || x > hi)
                 fail(name, "must be in [" + fmt_int(lo) + ", " + fmt_int(hi) + "]");
             ref(rc) = x;
         }});
}

void key_double(std::vector<ConfigKey>& out, std::string name, Ref ref, double lo, double hi) {
    out.push_back(
        {name, [ref](const RunConfig& rc) { return fmt_double(ref(const_cast<RunConfig&>(rc))); },
         [ref, name, lo, hi](RunConfig& rc, const std::string& v) {
             const double x = parse_double(name, v);
             if (!(x >= lo && x <= hi))
                 fail(name, "must be in [" + fmt_double(lo) + ", " + fmt_double(hi) + "]");
             ref(rc) = x;
         }});
}

void key_bool(std::vector<ConfigKey>& out, std::string name,
              std::function<bool&(RunConfig&)> ref) {
    out.push_back(
        {name,
         [ref](const RunConfig& rc) { return ref(const_cast<RunConfig&>(rc)) ? "1" : "0"; },
         [ref, name](RunConfig& rc, const std::string& v) { ref(rc) = parse_bool(name, v); }});
}

void key_string(std::vector<ConfigKey>& out, std::string name,
                std::function<std::string&(RunConfig&)> ref,
                std::function<void(const std::string&, const std::string&)> check = nullptr) {
    out.push_back({name,
                   [ref](const RunConfig& rc) { return ref(const_cast<RunConfig&>(rc)); },
                   [ref, name, check](RunConfig& rc, const std::string& v) {
                       if (check) check(name, v);
                       ref(rc) = v;
                   }});
}

void check_goal(const std::string& key, const std::string& v) {
    const auto rows = parse_csv(v + "\n");
    if (rows.size() != 1 || rows[0].size() < 2 || rows[0].size() > 3)
        fail(key, "expected x,y or x,y,yaw, got '" + v + "'");
    for (const auto& f : rows[0]) parse_double(key, trim(f));
}

std::vector<ConfigKey> build_registry() {
    std::vector<ConfigKey> k;
    auto rc_ = [](auto member) {  // member pointer into RunConfig
        return [member](RunConfig& rc) -> auto& { return rc.*member; };
    };

    k.push_back({"seed",
                 [](const RunConfig& rc) { return fmt_u64(rc.seed); },
                 [](RunConfig& rc, const std::string& v) { rc.seed = parse_u64("seed", v); }});
    key_string(k, "out", rc_(&RunConfig::out_dir));
    key_int(k, "threads", rc_(&RunConfig::threads), 0, 4096);
    key_int(k, "count", rc_(&RunConfig::count), 1, 10'000'000);
    key_string(k, "goal", rc_(&RunConfig::goal), check_goal);
    key_string(k, "model", rc_(&RunConfig::model_path));
    key_string(k, "input", rc_(&RunConfig::input_path));

    k.push_back({"sim.kind",
                 [](const RunConfig& rc) { return to_string(rc.terrain_kind); },
                 [](RunConfig& rc, const std::string& v) {
                     try {
                         rc.terrain_kind = terrain_kind_from_string(v);
                     } catch (...) {
                         fail("sim.kind", "unknown terrain kind '" + v + "'");
                     }
                 }});
    key_int(k, "sim.terrain_size", rc_(&RunConfig::terrain_size), 16, 4096);
    key_double(k, "sim.traction_flat", [](RunConfig& rc) -> double& { return rc.sim.traction_flat; }, 1e-6, 1.0);
    key_double(k, "sim.traction_rough", [](RunConfig& rc) -> double& { return rc.sim.traction_rough; }, 1e-6, 1.0);
    key_double(k, "sim.slip_std", [](RunConfig& rc) -> double& { return rc.sim.slip_std; }, 0.0, 10.0);
    key_double(k, "sim.max_step_height", [](RunConfig& rc) -> double& { return rc.sim.max_step_height; }, 0.0, 10.0);
    key_double(k, "sim.max_slope", [](RunConfig& rc) -> double& { return rc.sim.max_slope; }, 0.0, 100.0);
    key_double(k, "sim.footprint_radius", [](RunConfig& rc) -> double& { return rc.sim.footprint_radius; }, 0.01, 5.0);
    key_double(k, "sim.dt_sim", [](RunConfig& rc) -> double& { return rc.sim.dt_sim; }, 1e-4, 1.0);

    key_double(k, "sampler.beta_min", [](RunConfig& rc) -> double& { return rc.sampler.beta_min; }, 0.0, 0.999999);
    key_double(k, "sampler.sigma_max", [](RunConfig& rc) -> double& { return rc.sampler.sigma_max; }, 0.0, 10.0);
    k.push_back({"sampler.mode",
                 [](const RunConfig& rc) {
                     return std::string(rc.sampler.mode == SamplerMode::normal ? "normal"
                                                                               : "linear");
                 },
                 [](RunConfig& rc, const std::string& v) {
                     if (v == "linear")
                         rc.sampler.mode = SamplerMode::linear;
                     else if (v == "normal")
                         rc.sampler.mode = SamplerMode::normal;
                     else
                         fail("sampler.mode", "expected linear or normal, got '" + v + "'");
                 }});

    key_int(k, "fdm.n", [](RunConfig& rc) -> int& { return rc.fdm.n; }, 1, 64);
    key_double(k, "fdm.dt_h", [](RunConfig& rc) -> double& { return rc.fdm.dt_h; }, 1e-4, 1.0);
    key_double(k, "fdm.dt_p", [](RunConfig& rc) -> double& { return rc.fdm.dt_p; }, 1e-3, 10.0);
    key_int(k, "fdm.history_hidden", [](RunConfig& rc) -> int& { return rc.fdm.history_hidden; }, 1, 4096);
    key_int(k, "fdm.history_layers", [](RunConfig& rc) -> int& { return rc.fdm.history_layers; }, 1, 8);
    key_int(k, "fdm.pred_hidden", [](RunConfig& rc) -> int& { return rc.fdm.pred_hidden; }, 1, 4096);
    key_int(k, "fdm.pred_layers", [](RunConfig& rc) -> int& { return rc.fdm.pred_layers; }, 1, 8);
    key_int(k, "fdm.action_enc", [](RunConfig& rc) -> int& { return rc.fdm.action_enc; }, 1, 4096);
    key_int(k, "fdm.state_head_hidden", [](RunConfig& rc) -> int& { return rc.fdm.state_head_hidden; }, 1, 4096);
    key_int(k, "fdm.risk_head_hidden", [](RunConfig& rc) -> int& { return rc.fdm.risk_head_hidden; }, 1, 4096);
    key_double(k, "fdm.dropout", [](RunConfig& rc) -> double& { return rc.fdm.dropout; }, 0.0, 0.95);
    key_double(k, "fdm.eps_pose", [](RunConfig& rc) -> double& { return rc.fdm.eps_pose; }, 0.0, 1e6);
    key_double(k, "fdm.eps_risk", [](RunConfig& rc) -> double& { return rc.fdm.eps_risk; }, 0.0, 1e6);
    key_double(k, "fdm.eps_stop", [](RunConfig& rc) -> double& { return rc.fdm.eps_stop; }, 0.0, 1e6);
    key_double(k, "fdm.delta_risk", [](RunConfig& rc) -> double& { return rc.fdm.delta_risk; }, 0.0, 1.0);
    key_bool(k, "fdm.use_scan", [](RunConfig& rc) -> bool& { return rc.fdm.use_scan; });
    key_bool(k, "fdm.use_proprio", [](RunConfig& rc) -> bool& { return rc.fdm.use_proprio; });
    key_int(k, "fdm.rounds", [](RunConfig& rc) -> int& { return rc.train.rounds; }, 0, 1000);
    key_int(k, "fdm.envs", [](RunConfig& rc) -> int& { return rc.train.envs; }, 1, 65536);
    key_int(k, "fdm.samples_per_round", [](RunConfig& rc) -> int& { return rc.train.samples_per_round; }, 1, 10'000'000);
    key_int(k, "fdm.epochs", [](RunConfig& rc) -> int& { return rc.train.epochs; }, 1, 10000);
    key_int(k, "fdm.batch", [](RunConfig& rc) -> int& { return rc.train.batch; }, 1, 65536);
    key_double(k, "fdm.lr_max", [](RunConfig& rc) -> double& { return rc.train.lr_max; }, 1e-12, 10.0);
    key_double(k, "fdm.lr_min", [](RunConfig& rc) -> double& { return rc.train.lr_min; }, 0.0, 10.0);
    key_double(k, "fdm.weight_decay", [](RunConfig& rc) -> double& { return rc.train.weight_decay; }, 0.0, 10.0);
    key_double(k, "fdm.rho_planner", [](RunConfig& rc) -> double& { return rc.train.rho_planner; }, 0.0, 1.0);
    key_int(k, "fdm.sequences_per_episode", [](RunConfig& rc) -> int& { return rc.train.sequences_per_episode; }, 1, 64);
    key_int(k, "fdm.max_waves", [](RunConfig& rc) -> int& { return rc.train.max_waves; }, 1, 10000);

    key_int(k, "mppi.population", [](RunConfig& rc) -> int& { return rc.mppi.population; }, 1, 65536);
    key_int(k, "mppi.iterations", [](RunConfig& rc) -> int& { return rc.mppi.iterations; }, 1, 64);
    key_double(k, "mppi.gamma", [](RunConfig& rc) -> double& { return rc.mppi.gamma; }, 1e-6, 100.0);
    key_double(k, "mppi.noise_vx", [](RunConfig& rc) -> double& { return rc.mppi.noise_std[0]; }, 0.0, 10.0);
    key_double(k, "mppi.noise_vy", [](RunConfig& rc) -> double& { return rc.mppi.noise_std[1]; }, 0.0, 10.0);
    key_double(k, "mppi.noise_w", [](RunConfig& rc) -> double& { return rc.mppi.noise_std[2]; }, 0.0, 10.0);
    key_double(k, "mppi.noise_smooth", [](RunConfig& rc) -> double& { return rc.mppi.noise_smooth; }, 0.0, 0.999999);
    key_double(k, "mppi.lambda_pose", [](RunConfig& rc) -> double& { return rc.mppi.lambda_pose; }, 0.0, 1e6);
    key_double(k, "mppi.lambda_risk", [](RunConfig& rc) -> double& { return rc.mppi.lambda_risk; }, 0.0, 1e6);
    key_double(k, "mppi.lambda_pull", [](RunConfig& rc) -> double& { return rc.mppi.lambda_pull; }, 0.0, 1e6);
    key_double(k, "mppi.delta_pose", [](RunConfig& rc) -> double& { return rc.mppi.delta_pose; }, 0.0, 100.0);
    key_double(k, "mppi.delta_risk", [](RunConfig& rc) -> double& { return rc.mppi.delta_risk; }, 0.0, 1.0);
    key_int(k, "mppi.q_neighbors", [](RunConfig& rc) -> int& { return rc.mppi.q_neighbors; }, 1, 1024);
    key_double(k, "mppi.replan_period", [](RunConfig& rc) -> double& { return rc.mppi.replan_period; }, 1e-3, 60.0);

    key_int(k, "eval.fdm_samples", [](RunConfig& rc) -> int& { return rc.eval.fdm_samples; }, 1, 10'000'000);
    key_int(k, "eval.plan_episodes", [](RunConfig& rc) -> int& { return rc.eval.plan_episodes; }, 1, 100000);
    key_int(k, "eval.batch", [](RunConfig& rc) -> int& { return rc.eval.batch; }, 1, 65536);
    key_double(k, "eval.delta_risk", [](RunConfig& rc) -> double& { return rc.eval.delta_risk; }, 0.0, 1.0);
    key_int(k, "eval.bootstrap", [](RunConfig& rc) -> int& { return rc.eval.bootstrap; }, 1, 1'000'000);
    key_double(k, "eval.goal_min", [](RunConfig& rc) -> double& { return rc.eval.goal_min; }, 0.0, 1000.0);
    key_double(k, "eval.goal_max", [](RunConfig& rc) -> double& { return rc.eval.goal_max; }, 0.0, 1000.0);
    key_double(k, "eval.max_time", [](RunConfig& rc) -> double& { return rc.eval.max_time; }, 0.1, 100000.0);
    key_double(k, "eval.goal_tolerance", [](RunConfig& rc) -> double& { return rc.eval.goal_tolerance; }, 0.01, 100.0);
    return k;
}

}  // namespace

RunConfig::RunConfig() {
    mppi.population = 128;
    mppi.iterations = 2;
    mppi.gamma = 0.5;
}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = build_registry();
    return keys;
}

void set_config_key(RunConfig& rc, const std::string& name, const std::string& value) {
    for (const ConfigKey& key : config_keys())
        if (key.name == name) {
            key.set(rc, value);
            return;
        }
    throw std::invalid_argument("unknown config key: " + name);
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
    static const std::vector<std::string> kSections = {"sim", "sampler", "fdm", "mppi", "eval"};
    RunConfig rc = std::move(base);
    std::string section;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) {
            if (pos > text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + fmt_int(line_no) +
                                            ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (std::find(kSections.begin(), kSections.end(), section) == kSections.end())
                throw std::invalid_argument("unknown config section: " + section);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + fmt_int(line_no) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        set_config_key(rc, section.empty() ? key : section + "." + key, value);
        if (pos > text.size()) break;
    }
    return rc;
}

std::string resolved_config(const RunConfig& rc) {
    std::string out;
    std::string section;
    for (const ConfigKey& key : config_keys()) {
        const std::size_t dot = key.name.find('.');
        const std::string sec = dot == std::string::npos ? "" : key.name.substr(0, dot);
        const std::string bare = dot == std::string::npos ? key.name : key.name.substr(dot + 1);
        if (sec != section) {
            section = sec;
            out += "\n[" + section + "]\n";
        }
        out += bare + " = " + key.get(rc) + "\n";
    }
    return out;
}

}  // namespace fdm
