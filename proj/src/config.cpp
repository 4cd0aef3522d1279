#include "guidance_lab/config.hpp"

#include "guidance_lab/theory.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace guidance_lab {

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
        throw ConfigError(where(at.Mark()) + message);
    }

    std::string where(const YAML::Mark& mark) const {
        if (mark.is_null() || mark.line < 0) return source_ + ": ";
        return source_ + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1) + ": ";
    }

    void require_map(const YAML::Node& node, const std::string& block) const {
        if (!node.IsMap()) fail(node, "block '" + block + "' must be a mapping");
    }

    void check_keys(const YAML::Node& node, const std::string& block, std::initializer_list<const char*> allowed) const {
        require_map(node, block);
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
                std::string list;
                for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
                fail(kv.first, "unknown key '" + key + "' in " + block + " (allowed: " + list + ")");
            }
        }
    }

    double real(const YAML::Node& node, const std::string& what) const {
        try {
            return node.as<double>();
        } catch (const YAML::Exception&) {
            fail(node, what + " must be a number");
        }
    }

    std::uint64_t count(const YAML::Node& node, const std::string& what) const {
        try {
            const auto v = node.as<long long>();
            if (v < 0) fail(node, what + " must be non-negative");
            return static_cast<std::uint64_t>(v);
        } catch (const YAML::Exception&) {
            fail(node, what + " must be a non-negative integer");
        }
    }

    std::string text(const YAML::Node& node, const std::string& what) const {
        if (!node.IsScalar()) fail(node, what + " must be a string");
        return node.as<std::string>();
    }

    std::vector<double> reals(const YAML::Node& node, const std::string& what) const {
        if (!node.IsSequence()) fail(node, what + " must be a list of numbers");
        std::vector<double> out;
        for (const auto& item : node) out.push_back(real(item, what));
        return out;
    }

    template <typename F>
    auto convert(const YAML::Node& node, const std::string& what, F&& f) const {
        try {
            return f(text(node, what));
        } catch (const std::invalid_argument& e) {
            fail(node, e.what());
        }
    }

private:
    std::string source_;
};

void read_if(const YAML::Node& block, const char* key, auto&& assign) {
    if (const YAML::Node v = block[key]; v) assign(v);
}

GaussianMixture read_gmm(const Reader& rd, const YAML::Node& node) {
    if (!node) throw ConfigError("config: missing required block 'gmm'");
    rd.check_keys(node, "gmm", {"dim", "means", "weights"});
    const YAML::Node means = node["means"];
    if (!means || !means.IsSequence() || means.size() == 0) rd.fail(node, "gmm.means must be a non-empty list of vectors");
    std::vector<Vector> mus;
    for (const auto& m : means) {
        const auto v = rd.reals(m, "gmm.means entry");
        mus.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    std::size_t dim = static_cast<std::size_t>(mus.front().size());
    if (const YAML::Node d = node["dim"]; d) dim = rd.count(d, "gmm.dim");
    std::vector<double> weights(mus.size(), 1.0 / static_cast<double>(mus.size()));
    if (const YAML::Node w = node["weights"]; w) weights = rd.reals(w, "gmm.weights");
    try {
        return GaussianMixture(dim, std::move(mus), std::move(weights));
    } catch (const std::invalid_argument& e) {
        rd.fail(node, std::string("gmm: ") + e.what());
    }
}

std::vector<Strategy> read_strategies(const Reader& rd, const YAML::Node& node, const std::string& what) {
    if (!node.IsSequence()) rd.fail(node, what + " must be a list of strategy names");
    std::vector<Strategy> out;
    for (const auto& s : node) out.push_back(rd.convert(s, what, strategy_from_string));
    return out;
}

ExperimentConfig decode(const YAML::Node& root, const Reader& rd) {
    rd.check_keys(root, "the top level",
                  {"gmm", "schedule", "grid", "guidance", "run", "c1", "norm", "sweep", "scatter", "flow", "prop1"});
    ExperimentConfig cfg(read_gmm(rd, root["gmm"]));

    read_if(root, "schedule", [&](const YAML::Node& n) {
        rd.check_keys(n, "schedule", {"beta_min", "beta_max", "T", "shape"});
        read_if(n, "beta_min", [&](auto& v) { cfg.schedule.beta_min = rd.real(v, "schedule.beta_min"); });
        read_if(n, "beta_max", [&](auto& v) { cfg.schedule.beta_max = rd.real(v, "schedule.beta_max"); });
        read_if(n, "T", [&](auto& v) { cfg.schedule.horizon = rd.real(v, "schedule.T"); });
        read_if(n, "shape", [&](auto& v) { cfg.schedule.shape = rd.convert(v, "schedule.shape", schedule_shape_from_string); });
    });

    read_if(root, "grid", [&](const YAML::Node& n) {
        rd.check_keys(n, "grid", {"steps", "t_end", "t_start"});
        read_if(n, "steps", [&](auto& v) { cfg.grid.steps = rd.count(v, "grid.steps"); });
        read_if(n, "t_end", [&](auto& v) { cfg.grid.t_end = rd.real(v, "grid.t_end"); });
        read_if(n, "t_start", [&](auto& v) { cfg.grid.t_start = rd.real(v, "grid.t_start"); });
    });

    read_if(root, "guidance", [&](const YAML::Node& n) {
        rd.check_keys(n, "guidance", {"strategy", "omega", "angle_cap", "cfgpp_lambda", "apg", "recfg_lambda",
                                      "pcg_inner_steps", "pcg_mode", "renoise"});
        auto& g = cfg.guidance;
        read_if(n, "strategy", [&](auto& v) { g.strategy = rd.convert(v, "guidance.strategy", strategy_from_string); });
        read_if(n, "omega", [&](auto& v) { g.omega = rd.real(v, "guidance.omega"); });
        read_if(n, "angle_cap", [&](auto& v) { g.angle_cap = rd.real(v, "guidance.angle_cap"); });
        read_if(n, "cfgpp_lambda", [&](auto& v) { g.cfgpp_lambda = rd.real(v, "guidance.cfgpp_lambda"); });
        read_if(n, "recfg_lambda", [&](const YAML::Node& v) {
            if (v.IsSequence()) {
                g.recfg_table = rd.reals(v, "guidance.recfg_lambda");
            } else {
                g.recfg_lambda = rd.real(v, "guidance.recfg_lambda");
            }
        });
        read_if(n, "pcg_inner_steps", [&](auto& v) { g.pcg_inner_steps = rd.count(v, "guidance.pcg_inner_steps"); });
        read_if(n, "pcg_mode", [&](auto& v) { g.pcg_mode = rd.convert(v, "guidance.pcg_mode", langevin_mode_from_string); });
        read_if(n, "renoise", [&](auto& v) { g.renoise = rd.convert(v, "guidance.renoise", renoise_mode_from_string); });
        read_if(n, "apg", [&](const YAML::Node& a) {
            rd.check_keys(a, "guidance.apg", {"eta", "beta", "r"});
            read_if(a, "eta", [&](auto& v) { g.apg.eta = rd.real(v, "guidance.apg.eta"); });
            read_if(a, "beta", [&](auto& v) { g.apg.beta = rd.real(v, "guidance.apg.beta"); });
            read_if(a, "r", [&](auto& v) { g.apg.r = rd.real(v, "guidance.apg.r"); });
        });
        try {
            g.validate();
        } catch (const std::invalid_argument& e) {
            rd.fail(n, std::string("guidance: ") + e.what());
        }
    });

    read_if(root, "run", [&](const YAML::Node& n) {
        rd.check_keys(n, "run", {"seeds", "seed_count", "first_seed", "condition", "output_dir", "sampler", "strategies"});
        auto& r = cfg.run;
        read_if(n, "seeds", [&](const YAML::Node& v) {
            if (!v.IsSequence()) rd.fail(v, "run.seeds must be a list of integers");
            for (const auto& s : v) r.seeds.push_back(rd.count(s, "run.seeds entry"));
        });
        read_if(n, "seed_count", [&](auto& v) { r.seed_count = rd.count(v, "run.seed_count"); });
        read_if(n, "first_seed", [&](auto& v) { r.first_seed = rd.count(v, "run.first_seed"); });
        read_if(n, "condition", [&](auto& v) { r.condition = rd.count(v, "run.condition"); });
        read_if(n, "output_dir", [&](auto& v) { r.output_dir = rd.text(v, "run.output_dir"); });
        read_if(n, "sampler", [&](auto& v) { r.sampler = rd.convert(v, "run.sampler", sampler_kind_from_string); });
        read_if(n, "strategies", [&](auto& v) { r.strategies = read_strategies(rd, v, "run.strategies"); });
    });

    read_if(root, "c1", [&](const YAML::Node& n) {
        rd.check_keys(n, "c1", {"alpha_bar", "t", "omegas", "k_max", "bisection_tol"});
        read_if(n, "alpha_bar", [&](auto& v) { cfg.c1.alpha_bar = rd.real(v, "c1.alpha_bar"); });
        read_if(n, "t", [&](auto& v) { cfg.c1.t = rd.real(v, "c1.t"); });
        read_if(n, "omegas", [&](auto& v) { cfg.c1.omegas = rd.reals(v, "c1.omegas"); });
        read_if(n, "k_max", [&](auto& v) { cfg.c1.k_max = rd.real(v, "c1.k_max"); });
        read_if(n, "bisection_tol", [&](auto& v) { cfg.c1.bisection_tol = rd.real(v, "c1.bisection_tol"); });
    });

    read_if(root, "norm", [&](const YAML::Node& n) {
        rd.check_keys(n, "norm", {"omegas", "seed_count"});
        read_if(n, "omegas", [&](auto& v) { cfg.norm.omegas = rd.reals(v, "norm.omegas"); });
        read_if(n, "seed_count", [&](auto& v) { cfg.norm.seed_count = rd.count(v, "norm.seed_count"); });
    });

    read_if(root, "sweep", [&](const YAML::Node& n) {
        rd.check_keys(n, "sweep", {"strategies", "omegas", "seed_count", "adg_factor"});
        read_if(n, "strategies", [&](auto& v) { cfg.sweep.strategies = read_strategies(rd, v, "sweep.strategies"); });
        read_if(n, "omegas", [&](auto& v) { cfg.sweep.omegas = rd.reals(v, "sweep.omegas"); });
        read_if(n, "seed_count", [&](auto& v) { cfg.sweep.seed_count = rd.count(v, "sweep.seed_count"); });
        read_if(n, "adg_factor", [&](auto& v) { cfg.sweep.adg_factor = rd.real(v, "sweep.adg_factor"); });
    });

    read_if(root, "scatter", [&](const YAML::Node& n) {
        rd.check_keys(n, "scatter", {"omegas", "seeds_per_class", "strategy"});
        read_if(n, "omegas", [&](auto& v) { cfg.scatter.omegas = rd.reals(v, "scatter.omegas"); });
        read_if(n, "seeds_per_class", [&](auto& v) { cfg.scatter.seeds_per_class = rd.count(v, "scatter.seeds_per_class"); });
        read_if(n, "strategy", [&](auto& v) { cfg.scatter.strategy = rd.convert(v, "scatter.strategy", strategy_from_string); });
    });

    read_if(root, "flow", [&](const YAML::Node& n) {
        rd.check_keys(n, "flow", {"sigma_min", "steps"});
        read_if(n, "sigma_min", [&](auto& v) { cfg.flow.sigma_min = rd.real(v, "flow.sigma_min"); });
        read_if(n, "steps", [&](auto& v) { cfg.flow.steps = rd.count(v, "flow.steps"); });
    });

    read_if(root, "prop1", [&](const YAML::Node& n) {
        rd.check_keys(n, "prop1", {"trials", "dims", "norm_min", "norm_max", "seed"});
        read_if(n, "trials", [&](auto& v) { cfg.prop1.trials = rd.count(v, "prop1.trials"); });
        read_if(n, "dims", [&](const YAML::Node& v) {
            if (!v.IsSequence()) rd.fail(v, "prop1.dims must be a list of integers");
            cfg.prop1.dims.clear();
            for (const auto& d : v) cfg.prop1.dims.push_back(rd.count(d, "prop1.dims entry"));
        });
        read_if(n, "norm_min", [&](auto& v) { cfg.prop1.norm_min = rd.real(v, "prop1.norm_min"); });
        read_if(n, "norm_max", [&](auto& v) { cfg.prop1.norm_max = rd.real(v, "prop1.norm_max"); });
        read_if(n, "seed", [&](auto& v) { cfg.prop1.seed = rd.count(v, "prop1.seed"); });
    });

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(rd.where(YAML::Mark::null_mark()) + e.what());
    }
    return cfg;
}

void apply_override(YAML::Node& root, const Override& ov) {
    std::vector<std::string> parts;
    std::stringstream ss(ov.first);
    for (std::string p; std::getline(ss, p, '.');) {
        if (p.empty()) throw ConfigError("override key '" + ov.first + "' has an empty component");
        parts.push_back(p);
    }
    if (parts.empty()) throw ConfigError("override key is empty");
    if (!root.IsMap()) root = YAML::Node(YAML::NodeType::Map);
    YAML::Node cur = root;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        YAML::Node next = cur[parts[i]];
        if (!next.IsMap()) {
            next = YAML::Node(YAML::NodeType::Map);
        }
        cur.reset(next);
    }
    try {
        cur[parts.back()] = YAML::Load(ov.second);
    } catch (const YAML::Exception& e) {
        throw ConfigError("override " + ov.first + ": cannot parse value '" + ov.second + "': " + e.msg);
    }
}

void require_omegas(const std::vector<double>& omegas, const std::string& what, bool strict) {
    if (omegas.empty()) throw std::invalid_argument(what + " must not be empty");
    for (double w : omegas) {
        if (strict ? !(w > 1.0) : !(w >= 1.0)) {
            throw std::invalid_argument(what + " entries must be " + (strict ? "> 1" : ">= 1"));
        }
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    schedule.validate();
    if (grid.steps == 0) throw std::invalid_argument("grid.steps must be at least 1");
    if (!(grid.t_start >= 0.0 && grid.t_start < grid.t_end && grid.t_end <= schedule.horizon)) {
        throw std::invalid_argument("grid needs 0 <= t_start < t_end <= schedule.T");
    }
    guidance.validate();
    if (run.condition >= gmm.size()) {
        throw std::invalid_argument("run.condition " + std::to_string(run.condition) + " is not a component index (mixture has " +
                                    std::to_string(gmm.size()) + ")");
    }
    if (run.seeds.empty() && run.seed_count == 0) throw std::invalid_argument("run needs at least one seed");
    if (std::set<std::uint64_t>(run.seeds.begin(), run.seeds.end()).size() != run.seeds.size()) {
        throw std::invalid_argument("run.seeds must be distinct");
    }
    if (run.output_dir.empty()) throw std::invalid_argument("run.output_dir must not be empty");
    if (c1.alpha_bar && !(*c1.alpha_bar > 0.0 && *c1.alpha_bar < 1.0)) throw std::invalid_argument("c1.alpha_bar must lie in (0,1)");
    if (!c1.alpha_bar && !(c1.t > 0.0 && c1.t <= schedule.horizon)) throw std::invalid_argument("c1.t must lie in (0, schedule.T]");
    require_omegas(c1.omegas, "c1.omegas", true);
    if (!(c1.k_max > kC1GridStart)) throw std::invalid_argument("c1.k_max must exceed 1e-6");
    if (!(c1.bisection_tol > 0.0)) throw std::invalid_argument("c1.bisection_tol must be positive");
    require_omegas(norm.omegas, "norm.omegas", false);
    if (norm.seed_count == 0) throw std::invalid_argument("norm.seed_count must be positive");
    require_omegas(sweep.omegas, "sweep.omegas", false);
    if (sweep.strategies.empty() || sweep.seed_count == 0) throw std::invalid_argument("sweep needs strategies and seeds");
    if (!(sweep.adg_factor >= 1.0)) throw std::invalid_argument("sweep.adg_factor must be >= 1");
    require_omegas(scatter.omegas, "scatter.omegas", false);
    if (scatter.seeds_per_class < 2) throw std::invalid_argument("scatter.seeds_per_class must be at least 2");
    if (!(flow.sigma_min >= 0.0 && flow.sigma_min < 1.0)) throw std::invalid_argument("flow.sigma_min must lie in [0,1)");
    if (flow.steps == 0) throw std::invalid_argument("flow.steps must be positive");
    if (prop1.dims.empty() || std::find(prop1.dims.begin(), prop1.dims.end(), 0u) != prop1.dims.end()) {
        throw std::invalid_argument("prop1.dims must be non-empty and positive");
    }
    if (!(prop1.norm_min > 0.0 && prop1.norm_max >= prop1.norm_min)) {
        throw std::invalid_argument("prop1 needs 0 < norm_min <= norm_max");
    }
}

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
    if (!run.seeds.empty()) return run.seeds;
    std::vector<std::uint64_t> out(run.seed_count);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = run.first_seed + i;
    return out;
}

TimeGrid ExperimentConfig::time_grid() const { return make_grid(schedule, grid.steps, grid.t_end, grid.t_start); }

std::vector<Strategy> ExperimentConfig::sample_strategies() const {
    return run.strategies.empty() ? std::vector<Strategy>{guidance.strategy} : run.strategies;
}

double ExperimentConfig::c1_alpha_bar() const { return c1.alpha_bar ? *c1.alpha_bar : schedule.alpha_bar_at(c1.t); }

Override parse_override(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' is not of the form key=value");
    return {text.substr(0, eq), text.substr(eq + 1)};
}

ExperimentConfig parse_config(const std::string& text, const std::vector<Override>& overrides, const std::string& source) {
    const Reader rd(source);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(rd.where(e.mark) + e.msg);
    }
    for (const auto& ov : overrides) apply_override(root, ov);
    if (!root.IsMap()) throw ConfigError(source + ": config must be a mapping with a 'gmm' block");
    return decode(root, rd);
}

ExperimentConfig load_config(const std::string& path, const std::vector<Override>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), overrides, path);
}

namespace {

template <typename T, typename F>
void emit_list(YAML::Emitter& out, const std::vector<T>& items, F&& f) {
    out << YAML::Flow << YAML::BeginSeq;
    for (const auto& it : items) out << f(it);
    out << YAML::EndSeq;
}

auto identity = [](const auto& v) { return v; };
auto strategy_name = [](Strategy s) { return to_string(s); };

}  // namespace

std::string dump_config(const ExperimentConfig& c) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;

    out << YAML::Key << "gmm" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "dim" << YAML::Value << c.gmm.dim();
    out << YAML::Key << "means" << YAML::Value << YAML::BeginSeq;
    for (const auto& m : c.gmm.means()) {
        out << YAML::Flow << YAML::BeginSeq;
        for (Eigen::Index i = 0; i < m.size(); ++i) out << m[i];
        out << YAML::EndSeq;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "weights" << YAML::Value;
    emit_list(out, c.gmm.weights(), identity);
    out << YAML::EndMap;

    out << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "beta_min" << YAML::Value << c.schedule.beta_min;
    out << YAML::Key << "beta_max" << YAML::Value << c.schedule.beta_max;
    out << YAML::Key << "T" << YAML::Value << c.schedule.horizon;
    out << YAML::Key << "shape" << YAML::Value << to_string(c.schedule.shape);
    out << YAML::EndMap;

    out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "steps" << YAML::Value << c.grid.steps;
    out << YAML::Key << "t_end" << YAML::Value << c.grid.t_end;
    out << YAML::Key << "t_start" << YAML::Value << c.grid.t_start;
    out << YAML::EndMap;

    const auto& g = c.guidance;
    out << YAML::Key << "guidance" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "strategy" << YAML::Value << to_string(g.strategy);
    out << YAML::Key << "omega" << YAML::Value << g.omega;
    out << YAML::Key << "angle_cap" << YAML::Value << g.angle_cap;
    out << YAML::Key << "cfgpp_lambda" << YAML::Value << g.cfgpp_lambda;
    out << YAML::Key << "apg" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "eta" << YAML::Value << g.apg.eta;
    out << YAML::Key << "beta" << YAML::Value << g.apg.beta;
    out << YAML::Key << "r" << YAML::Value << g.apg.r;
    out << YAML::EndMap;
    out << YAML::Key << "recfg_lambda" << YAML::Value;
    if (g.recfg_table.empty()) {
        out << g.recfg_lambda;
    } else {
        emit_list(out, g.recfg_table, identity);
    }
    out << YAML::Key << "pcg_inner_steps" << YAML::Value << g.pcg_inner_steps;
    out << YAML::Key << "pcg_mode" << YAML::Value << to_string(g.pcg_mode);
    out << YAML::Key << "renoise" << YAML::Value << to_string(g.renoise);
    out << YAML::EndMap;

    out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
    if (!c.run.seeds.empty()) {
        out << YAML::Key << "seeds" << YAML::Value;
        emit_list(out, c.run.seeds, identity);
    }
    out << YAML::Key << "seed_count" << YAML::Value << c.run.seed_count;
    out << YAML::Key << "first_seed" << YAML::Value << c.run.first_seed;
    out << YAML::Key << "condition" << YAML::Value << c.run.condition;
    out << YAML::Key << "output_dir" << YAML::Value << c.run.output_dir;
    out << YAML::Key << "sampler" << YAML::Value << to_string(c.run.sampler);
    if (!c.run.strategies.empty()) {
        out << YAML::Key << "strategies" << YAML::Value;
        emit_list(out, c.run.strategies, strategy_name);
    }
    out << YAML::EndMap;

    out << YAML::Key << "c1" << YAML::Value << YAML::BeginMap;
    if (c.c1.alpha_bar) out << YAML::Key << "alpha_bar" << YAML::Value << *c.c1.alpha_bar;
    out << YAML::Key << "t" << YAML::Value << c.c1.t;
    out << YAML::Key << "omegas" << YAML::Value;
    emit_list(out, c.c1.omegas, identity);
    out << YAML::Key << "k_max" << YAML::Value << c.c1.k_max;
    out << YAML::Key << "bisection_tol" << YAML::Value << c.c1.bisection_tol;
    out << YAML::EndMap;

    out << YAML::Key << "norm" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "omegas" << YAML::Value;
    emit_list(out, c.norm.omegas, identity);
    out << YAML::Key << "seed_count" << YAML::Value << c.norm.seed_count;
    out << YAML::EndMap;

    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "strategies" << YAML::Value;
    emit_list(out, c.sweep.strategies, strategy_name);
    out << YAML::Key << "omegas" << YAML::Value;
    emit_list(out, c.sweep.omegas, identity);
    out << YAML::Key << "seed_count" << YAML::Value << c.sweep.seed_count;
    out << YAML::Key << "adg_factor" << YAML::Value << c.sweep.adg_factor;
    out << YAML::EndMap;

    out << YAML::Key << "scatter" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "omegas" << YAML::Value;
    emit_list(out, c.scatter.omegas, identity);
    out << YAML::Key << "seeds_per_class" << YAML::Value << c.scatter.seeds_per_class;
    out << YAML::Key << "strategy" << YAML::Value << to_string(c.scatter.strategy);
    out << YAML::EndMap;

    out << YAML::Key << "flow" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "sigma_min" << YAML::Value << c.flow.sigma_min;
    out << YAML::Key << "steps" << YAML::Value << c.flow.steps;
    out << YAML::EndMap;

    out << YAML::Key << "prop1" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "trials" << YAML::Value << c.prop1.trials;
    out << YAML::Key << "dims" << YAML::Value;
    emit_list(out, c.prop1.dims, identity);
    out << YAML::Key << "norm_min" << YAML::Value << c.prop1.norm_min;
    out << YAML::Key << "norm_max" << YAML::Value << c.prop1.norm_max;
    out << YAML::Key << "seed" << YAML::Value << c.prop1.seed;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace guidance_lab
