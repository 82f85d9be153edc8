#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace frlab {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace detail

// Flat "key = value" configuration, one pair per line, '#' starts a comment.
class ConfigMap {
public:
    static ConfigMap parse(std::istream& in) {
        ConfigMap cfg;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw format_error("config line " + std::to_string(lineno)
                                   + ": expected 'key = value'");
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string value = detail::trim(line.substr(eq + 1));
            if (key.empty())
                throw format_error("config line " + std::to_string(lineno) + ": empty key");
            if (!cfg.kv_.emplace(key, value).second)
                throw format_error("config line " + std::to_string(lineno)
                                   + ": duplicate key '" + key + "'");
        }
        return cfg;
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        return parse_double(key, it->second);
    }

    long long get_int(const std::string& key, long long fallback) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        return parse_int(key, it->second);
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        try {
            // stoull would silently wrap a negative value around
            if (it->second.find('-') != std::string::npos)
                throw std::invalid_argument("negative");
            std::size_t pos = 0;
            const std::uint64_t v = std::stoull(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw validation_error("config key '" + key + "': not an unsigned integer: '"
                                   + it->second + "'");
        }
    }

    std::vector<double> get_list(const std::string& key,
                                 const std::vector<double>& fallback) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        std::vector<double> out;
        std::istringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(parse_double(key, detail::trim(item)));
        return out;
    }

    std::vector<int> get_int_list(const std::string& key,
                                  const std::vector<int>& fallback) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        std::vector<int> out;
        std::istringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(static_cast<int>(parse_int(key, detail::trim(item))));
        return out;
    }

    void require_known_keys(const std::set<std::string>& known) const {
        for (const auto& [key, value] : kv_)
            if (!known.count(key))
                throw validation_error("config: unknown key '" + key + "'");
    }

private:
    static double parse_double(const std::string& key, const std::string& s) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw validation_error("config key '" + key + "': not a number: '" + s + "'");
        }
    }

    static long long parse_int(const std::string& key, const std::string& s) {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw validation_error("config key '" + key + "': not an integer: '" + s + "'");
        }
    }

    std::map<std::string, std::string> kv_;
};

struct ExperimentConfig {
    // graph
    std::string graph = "vicsek";  // vicsek | edge_list
    int N = 2;
    int level = 3;
    std::string edge_list_path;
    long long vertex_budget = 2'000'000;

    // walk and backend
    double alpha = 0.5;
    std::string backend = "spectral";  // spectral | series
    int series_K = 0;                  // 0 = automatic truncation
    int dense_cap = 4000;

    // exponent grids
    std::vector<double> p_list = {1.5, 2.0};
    std::vector<double> q_list = {1.25, 1.5, 1.75};
    std::vector<double> beta_list = {0.5};

    // step and radius grids (0 entries mean "derive from the graph")
    int y = -1;  // base vertex; -1 = fractal center (or vertex 0)
    int k_min = 10;
    int k_max = 0;  // 0 = trusted horizon
    int k_count = 12;
    std::vector<int> volume_radii;
    std::vector<int> exit_radii = {9, 27, 81};
    std::vector<int> poincare_radii = {3, 9, 27};
    std::vector<double> tail_radii = {0.0, 3.0, 6.0};

    // model exponents and weights
    double m_exponent = 0.0;  // 0 = D + 1 for the configured fractal
    double c_weight = 0.02;   // exponential weight in the gradient estimate
    double ue_c = 0.05;       // sub-Gaussian branch constant
    double ue_c_gaussian = 2.0;

    // czd
    std::vector<double> lambda_list;  // empty = derive from min of the maximal function
    double spike_height = 100.0;

    // counterexample
    std::vector<int> levels = {2, 3, 4};

    // sampling
    long long trials = 10'000;
    int function_count = 20;
    std::uint64_t seed = 1;
};

inline ExperimentConfig load_experiment_config(std::istream& in) {
    const ConfigMap cfg = ConfigMap::parse(in);
    cfg.require_known_keys({
        "graph", "N", "level", "edge_list", "vertex_budget",
        "alpha", "backend", "series_K", "dense_cap",
        "p_list", "q_list", "beta_list",
        "y", "k_min", "k_max", "k_count",
        "volume_radii", "exit_radii", "poincare_radii", "tail_radii",
        "m_exponent", "c_weight", "ue_c", "ue_c_gaussian",
        "lambda_list", "spike_height", "levels",
        "trials", "function_count", "seed",
    });

    ExperimentConfig ec;
    ec.graph = cfg.get_string("graph", ec.graph);
    if (ec.graph != "vicsek" && ec.graph != "edge_list")
        throw validation_error("config key 'graph': expected vicsek or edge_list");
    ec.N = static_cast<int>(cfg.get_int("N", ec.N));
    ec.level = static_cast<int>(cfg.get_int("level", ec.level));
    ec.edge_list_path = cfg.get_string("edge_list", ec.edge_list_path);
    if (ec.graph == "edge_list" && ec.edge_list_path.empty())
        throw validation_error("config key 'edge_list': required when graph = edge_list");
    ec.vertex_budget = cfg.get_int("vertex_budget", ec.vertex_budget);

    ec.alpha = cfg.get_double("alpha", ec.alpha);
    ec.backend = cfg.get_string("backend", ec.backend);
    if (ec.backend != "spectral" && ec.backend != "series")
        throw validation_error("config key 'backend': expected spectral or series");
    ec.series_K = static_cast<int>(cfg.get_int("series_K", ec.series_K));
    ec.dense_cap = static_cast<int>(cfg.get_int("dense_cap", ec.dense_cap));

    ec.p_list = cfg.get_list("p_list", ec.p_list);
    ec.q_list = cfg.get_list("q_list", ec.q_list);
    ec.beta_list = cfg.get_list("beta_list", ec.beta_list);
    if (ec.p_list.empty() || ec.q_list.empty() || ec.beta_list.empty())
        throw validation_error("config: p_list, q_list, beta_list must be nonempty");
    for (double p : ec.p_list)
        if (!(p > 1.0))
            throw validation_error("config key 'p_list': every p must exceed 1");
    for (double q : ec.q_list)
        if (!(q > 1.0 && q < 2.0))
            throw validation_error("config key 'q_list': every q must lie in (1,2)");
    for (double b : ec.beta_list)
        if (!(b > 0.0 && b <= 1.0))
            throw validation_error("config key 'beta_list': every beta must lie in (0,1]");

    ec.y = static_cast<int>(cfg.get_int("y", ec.y));
    ec.k_min = static_cast<int>(cfg.get_int("k_min", ec.k_min));
    ec.k_max = static_cast<int>(cfg.get_int("k_max", ec.k_max));
    ec.k_count = static_cast<int>(cfg.get_int("k_count", ec.k_count));
    ec.volume_radii = cfg.get_int_list("volume_radii", ec.volume_radii);
    ec.exit_radii = cfg.get_int_list("exit_radii", ec.exit_radii);
    ec.poincare_radii = cfg.get_int_list("poincare_radii", ec.poincare_radii);
    ec.tail_radii = cfg.get_list("tail_radii", ec.tail_radii);

    ec.m_exponent = cfg.get_double("m_exponent", ec.m_exponent);
    ec.c_weight = cfg.get_double("c_weight", ec.c_weight);
    ec.ue_c = cfg.get_double("ue_c", ec.ue_c);
    ec.ue_c_gaussian = cfg.get_double("ue_c_gaussian", ec.ue_c_gaussian);

    ec.lambda_list = cfg.get_list("lambda_list", ec.lambda_list);
    ec.spike_height = cfg.get_double("spike_height", ec.spike_height);
    ec.levels = cfg.get_int_list("levels", ec.levels);

    ec.trials = cfg.get_int("trials", ec.trials);
    ec.function_count = static_cast<int>(cfg.get_int("function_count", ec.function_count));
    ec.seed = cfg.get_u64("seed", ec.seed);

    if (!(ec.alpha >= 0.0 && ec.alpha < 1.0))
        throw validation_error("config key 'alpha': must lie in [0,1)");
    if (ec.trials < 1)
        throw validation_error("config key 'trials': must be positive");
    return ec;
}

} // namespace frlab
