#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dgflow/io.hpp"

namespace dgflow {

struct PenaltyConfig {
    std::string kind = "quadratic";
    std::optional<double> beta;
    std::optional<long> grid_n;
};

struct OperatorConfig {
    std::string kind = "dense_linear";
    std::string matrix_path;
    std::optional<double> gamma;
    std::optional<long> n;
    std::optional<double> c0_bound;
    std::optional<double> eta;
    std::optional<double> rho;
};

struct FlowConfig {
    std::string tableau = "explicit_euler";
    std::string custom_tableau_path;
    std::string step_mode = "scaled";
    std::optional<double> dt;
    double mu = 0.9;
    long max_steps = 100000;
    double stage_tol = 1e-12;
    int stage_max_iter = 200;
};

struct StopConfig {
    double tau = 2.5;
    bool refine = true;
    double refine_tol = 1e-3;
};

struct ExperimentConfig {
    std::string kind = "single";
    std::vector<double> deltas{0.0};
    std::vector<double> dts;
    std::uint64_t seed = 0;
    double nu = 2.0;
    std::optional<double> r_f;
    std::string truth = "ones";
    std::string truth_path;
    long sparse_k = 3;
    double horizon = 5.0;
};

struct RunConfig {
    PenaltyConfig penalty;
    OperatorConfig op;
    FlowConfig flow;
    StopConfig stop;
    ExperimentConfig experiment;
    std::string output = ".";
    std::string log_level = "info";
};

namespace detail {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flat dotted-key view of the file plus overrides; every key must be consumed.
class KeyBag {
public:
    void set(const std::string& key, const std::string& value) { entries_[key] = value; }

    std::optional<std::string> take(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        std::string v = it->second;
        entries_.erase(it);
        return v;
    }

    double take_double(const std::string& key, double fallback) {
        auto v = take(key);
        return v ? parse_named_double(key, *v) : fallback;
    }
    std::optional<double> take_opt_double(const std::string& key) {
        auto v = take(key);
        if (!v) return std::nullopt;
        return parse_named_double(key, *v);
    }
    long take_long(const std::string& key, long fallback) {
        auto v = take(key);
        if (!v) return fallback;
        try {
            std::size_t pos = 0;
            const long x = std::stol(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("trailing");
            return x;
        } catch (const std::exception&) {
            throw ConfigError("config: " + key + ": not an integer: '" + *v + "'");
        }
    }
    std::optional<long> take_opt_long(const std::string& key) {
        auto v = take(key);
        if (!v) return std::nullopt;
        set(key, *v);
        return take_long(key, 0);
    }
    bool take_bool(const std::string& key, bool fallback) {
        auto v = take(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw ConfigError("config: " + key + ": not a boolean: '" + *v + "'");
    }
    std::string take_string(const std::string& key, const std::string& fallback) {
        auto v = take(key);
        return v ? *v : fallback;
    }
    std::vector<double> take_list(const std::string& key, std::vector<double> fallback) {
        auto v = take(key);
        if (!v) return fallback;
        std::vector<double> out;
        std::string norm = *v;
        for (auto& ch : norm)
            if (ch == ',') ch = ' ';
        std::istringstream is(norm);
        std::string tok;
        while (is >> tok) out.push_back(parse_named_double(key, tok));
        if (out.empty()) throw ConfigError("config: " + key + ": empty list");
        return out;
    }

    void require_empty() const {
        if (!entries_.empty()) throw ConfigError("config: unknown key '" + entries_.begin()->first + "'");
    }

private:
    static double parse_named_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing");
            return x;
        } catch (const std::exception&) {
            throw ConfigError("config: " + key + ": not a number: '" + v + "'");
        }
    }

    std::map<std::string, std::string> entries_;
};

inline void check_member(const std::string& key, const std::string& value,
                         std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (value == a) return;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    throw ConfigError("config: " + key + ": '" + value + "' is not one of {" + list + "}");
}

inline void check_file_exists(const std::string& key, const std::string& path) {
    if (!std::filesystem::exists(path))
        throw ConfigError("config: " + key + ": file does not exist: '" + path + "'");
}

}  // namespace detail

/// Parses the sectioned key-value config file, applies dotted-key overrides
/// (later overrides win), validates every constraint it can check statically
/// and rejects unknown keys by name.
inline RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {}) {
    using detail::ConfigError;
    detail::KeyBag bag;
    std::istringstream in(text);
    std::string line, section;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("config: line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config: line " + std::to_string(lineno) + ": empty key");
        bag.set(section.empty() ? key : section + "." + key, value);
    }
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) throw ConfigError("config: override '" + ov + "' is not key=value");
        bag.set(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
    }

    RunConfig cfg;

    // the experiment kind decides below whether an operator must be assembled
    cfg.experiment.kind = bag.take_string("experiment.kind", "single");
    detail::check_member("experiment.kind", cfg.experiment.kind,
                         {"single", "rate_sweep", "order_study", "sparse_demo"});
    const bool needs_operator = cfg.experiment.kind != "sparse_demo";

    cfg.penalty.kind = bag.take_string("penalty.kind", "quadratic");
    detail::check_member("penalty.kind", cfg.penalty.kind, {"quadratic", "elastic_net", "tv_quadratic"});
    cfg.penalty.beta = bag.take_opt_double("penalty.beta");
    cfg.penalty.grid_n = bag.take_opt_long("penalty.grid_n");
    if (cfg.penalty.kind != "quadratic" && !cfg.penalty.beta)
        throw ConfigError("config: penalty.beta: required for " + cfg.penalty.kind);
    if (cfg.penalty.beta && *cfg.penalty.beta < 0.0)
        throw ConfigError("config: penalty.beta: must be nonnegative");
    if (cfg.penalty.kind == "tv_quadratic" && cfg.penalty.grid_n && *cfg.penalty.grid_n < 2)
        throw ConfigError("config: penalty.grid_n: must be at least 2");

    cfg.op.kind = bag.take_string("operator.kind", "dense_linear");
    detail::check_member("operator.kind", cfg.op.kind, {"dense_linear", "diagonal_cubic", "auto_convolution"});
    cfg.op.matrix_path = bag.take_string("operator.matrix_path", "");
    cfg.op.gamma = bag.take_opt_double("operator.gamma");
    cfg.op.n = bag.take_opt_long("operator.n");
    cfg.op.c0_bound = bag.take_opt_double("operator.c0_bound");
    cfg.op.eta = bag.take_opt_double("operator.eta");
    cfg.op.rho = bag.take_opt_double("operator.rho");
    if (cfg.op.kind == "dense_linear") {
        if (needs_operator && cfg.op.matrix_path.empty())
            throw ConfigError("config: operator.matrix_path: required for dense_linear");
        if (!cfg.op.matrix_path.empty()) detail::check_file_exists("operator.matrix_path", cfg.op.matrix_path);
    } else {
        if (!cfg.op.n) throw ConfigError("config: operator.n: required for " + cfg.op.kind);
        if (*cfg.op.n < 2) throw ConfigError("config: operator.n: must be at least 2");
    }
    if (cfg.op.kind == "diagonal_cubic" && !cfg.op.gamma)
        throw ConfigError("config: operator.gamma: required for diagonal_cubic");
    if (cfg.op.gamma && *cfg.op.gamma < 0.0) throw ConfigError("config: operator.gamma: must be nonnegative");
    if (cfg.op.eta && (*cfg.op.eta < 0.0 || *cfg.op.eta >= 1.0))
        throw ConfigError("config: operator.eta: must lie in [0, 1)");
    if (cfg.op.rho && *cfg.op.rho <= 0.0) throw ConfigError("config: operator.rho: must be positive");
    if (cfg.op.c0_bound && *cfg.op.c0_bound <= 0.0)
        throw ConfigError("config: operator.c0_bound: must be positive");

    cfg.flow.tableau = bag.take_string("flow.tableau", "explicit_euler");
    detail::check_member("flow.tableau", cfg.flow.tableau, {"explicit_euler", "implicit_euler", "heun", "custom"});
    cfg.flow.custom_tableau_path = bag.take_string("flow.custom_tableau_path", "");
    if (cfg.flow.tableau == "custom") {
        if (cfg.flow.custom_tableau_path.empty())
            throw ConfigError("config: flow.custom_tableau_path: required for custom tableau");
        detail::check_file_exists("flow.custom_tableau_path", cfg.flow.custom_tableau_path);
    }
    cfg.flow.step_mode = bag.take_string("flow.step_mode", "scaled");
    detail::check_member("flow.step_mode", cfg.flow.step_mode, {"fixed", "scaled"});
    cfg.flow.dt = bag.take_opt_double("flow.dt");
    if (cfg.flow.step_mode == "fixed") {
        if (!cfg.flow.dt) throw ConfigError("config: flow.dt: required in fixed step mode");
        if (!(*cfg.flow.dt > 0.0)) throw ConfigError("config: flow.dt: must be positive");
    }
    cfg.flow.mu = bag.take_double("flow.mu", 0.9);
    if (!(cfg.flow.mu > 0.0) || cfg.flow.mu > 1.0) throw ConfigError("config: flow.mu: must lie in (0, 1]");
    cfg.flow.max_steps = bag.take_long("flow.max_steps", 100000);
    if (cfg.flow.max_steps < 0) throw ConfigError("config: flow.max_steps: must be nonnegative");
    cfg.flow.stage_tol = bag.take_double("flow.stage_tol", 1e-12);
    if (!(cfg.flow.stage_tol > 0.0)) throw ConfigError("config: flow.stage_tol: must be positive");
    cfg.flow.stage_max_iter = static_cast<int>(bag.take_long("flow.stage_max_iter", 200));
    if (cfg.flow.stage_max_iter < 1) throw ConfigError("config: flow.stage_max_iter: must be positive");

    cfg.stop.tau = bag.take_double("stop.tau", 2.5);
    if (!(cfg.stop.tau > 1.0)) throw ConfigError("config: stop.tau: tau must exceed 1");
    cfg.stop.refine = bag.take_bool("stop.refine", true);
    cfg.stop.refine_tol = bag.take_double("stop.refine_tol", 1e-3);
    if (!(cfg.stop.refine_tol > 0.0)) throw ConfigError("config: stop.refine_tol: must be positive");

    cfg.experiment.deltas = bag.take_list("experiment.deltas", {0.0});
    for (double d : cfg.experiment.deltas)
        if (d < 0.0) throw ConfigError("config: experiment.deltas: must be nonnegative");
    cfg.experiment.dts = bag.take_list("experiment.dts", {});
    for (double d : cfg.experiment.dts)
        if (!(d > 0.0)) throw ConfigError("config: experiment.dts: must be positive");
    const long seed = bag.take_long("experiment.seed", 0);
    if (seed < 0) throw ConfigError("config: experiment.seed: must be nonnegative");
    cfg.experiment.seed = static_cast<std::uint64_t>(seed);
    cfg.experiment.nu = bag.take_double("experiment.nu", 2.0);
    if (cfg.experiment.nu < 1.0 || cfg.experiment.nu > 2.0)
        throw ConfigError("config: experiment.nu: must lie in [1, 2]");
    cfg.experiment.r_f = bag.take_opt_double("experiment.r_f");
    if (cfg.experiment.r_f && !(*cfg.experiment.r_f > 0.0))
        throw ConfigError("config: experiment.r_f: must be positive");
    cfg.experiment.truth = bag.take_string("experiment.truth", "ones");
    detail::check_member("experiment.truth", cfg.experiment.truth,
                         {"ones", "zero", "smooth", "sparse", "piecewise"});
    cfg.experiment.truth_path = bag.take_string("experiment.truth_path", "");
    if (!cfg.experiment.truth_path.empty())
        detail::check_file_exists("experiment.truth_path", cfg.experiment.truth_path);
    cfg.experiment.sparse_k = bag.take_long("experiment.sparse_k", 3);
    if (cfg.experiment.sparse_k < 0) throw ConfigError("config: experiment.sparse_k: must be nonnegative");
    cfg.experiment.horizon = bag.take_double("experiment.horizon", 5.0);
    if (!(cfg.experiment.horizon > 0.0)) throw ConfigError("config: experiment.horizon: must be positive");

    cfg.output = bag.take_string("output", ".");
    cfg.log_level = bag.take_string("log_level", "info");
    detail::check_member("log_level", cfg.log_level, {"info", "quiet"});

    bag.require_empty();
    return cfg;
}

inline RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw detail::ConfigError("config: cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), overrides);
}

}  // namespace dgflow
