#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cache.hpp"
#include "calculus.hpp"
#include "config.hpp"
#include "counterexample.hpp"
#include "csv.hpp"
#include "cz.hpp"
#include "errors.hpp"
#include "estimates.hpp"
#include "fit.hpp"
#include "graph.hpp"
#include "kernels.hpp"
#include "markov.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "vicsek.hpp"
#include "walks.hpp"

namespace frlab {

struct GraphBundle {
    std::optional<VicsekGraph> fractal;
    std::optional<WeightedGraph> plain;
    std::string name;
    int level = 0;

    const WeightedGraph& graph() const { return fractal ? fractal->graph : *plain; }
};

namespace detail {

inline std::vector<double> random_vertex_function(int nv, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<double> f(nv);
    for (double& v : f) v = rng.next_normal();
    return f;
}

inline WeightedGraph random_connected_graph(int nv, std::uint64_t seed) {
    SplitMix64 rng(seed);
    GraphBuilder b(nv);
    std::set<std::pair<int, int>> used;
    for (int v = 1; v < nv; ++v) {
        const int parent = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(v)));
        b.add_edge(parent, v, 0.5 + rng.next_unit());
        used.emplace(std::min(parent, v), std::max(parent, v));
    }
    const int extra = nv / 4;
    for (int e = 0; e < extra; ++e) {
        const int u = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(nv)));
        const int v = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(nv)));
        if (u == v) continue;
        const auto key = std::make_pair(std::min(u, v), std::max(u, v));
        if (!used.insert(key).second) continue;
        b.add_edge(u, v, 0.5 + rng.next_unit());
    }
    return b.build();
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace detail

class Runner {
public:
    Runner(ExperimentConfig cfg, std::filesystem::path out_dir, int jobs)
        : cfg_(std::move(cfg)), out_(std::move(out_dir)), jobs_(std::max(1, jobs)) {
        std::filesystem::create_directories(out_);
        const char* env = std::getenv("FRLAB_CACHE");
        cache_ = KernelCache(env != nullptr ? std::filesystem::path(env) : out_ / "cache");
    }

    void set_input_digest(const std::string& name, std::uint64_t digest) {
        input_digests_[name] = digest;
    }

    int dispatch(const std::string& subcommand) {
        if (subcommand == "build-graph") run_build_graph();
        else if (subcommand == "heat-kernel") run_heat_kernel();
        else if (subcommand == "fit-exponents") run_fit_exponents();
        else if (subcommand == "riesz-ratios") run_riesz_ratios();
        else if (subcommand == "estimates") run_estimates();
        else if (subcommand == "czd") run_czd();
        else if (subcommand == "walk-exit") run_walk_exit();
        else if (subcommand == "counterexample") run_counterexample();
        else if (subcommand == "full-suite") run_full_suite();
        else throw validation_error("unknown subcommand '" + subcommand + "'");
        write_manifest(subcommand);
        return 0;
    }

private:
    GraphBundle make_bundle() {
        GraphBundle b;
        if (cfg_.graph == "vicsek") {
            b.fractal = build_vicsek(cfg_.N, cfg_.level, cfg_.vertex_budget);
            b.name = "vicsek" + std::to_string(cfg_.N);
            b.level = cfg_.level;
        } else {
            std::ifstream in(cfg_.edge_list_path);
            if (!in)
                throw resource_error("cannot open edge list " + cfg_.edge_list_path);
            b.plain = load_edge_list(in);
            b.name = std::filesystem::path(cfg_.edge_list_path).stem().string();
            input_digests_["edge_list"] = file_digest(cfg_.edge_list_path);
        }
        return b;
    }

    int base_vertex(const GraphBundle& b) const {
        if (cfg_.y >= 0) {
            if (cfg_.y >= b.graph().vertex_count())
                throw validation_error("config key 'y': vertex out of range");
            return cfg_.y;
        }
        return b.fractal ? b.fractal->z0 : 0;
    }

    double m_exponent(const GraphBundle& b) const {
        if (cfg_.m_exponent > 0.0) return cfg_.m_exponent;
        return b.fractal ? b.fractal->growth_exponent() + 1.0 : 2.0;
    }

    int k_upper(const GraphBundle& b) const {
        if (cfg_.k_max > 0) return cfg_.k_max;
        int k;
        if (b.fractal && b.level >= 1) {
            k = trusted_horizon(b.level, m_exponent(b));
        } else {
            const double half = diameter_estimate(b.graph()) / 2.0;
            k = static_cast<int>(0.1 * std::pow(half, m_exponent(b)));
        }
        return std::max(k, cfg_.k_min + 1);
    }

    CsvWriter open_csv(const std::string& filename) {
        outputs_.push_back(filename);
        return CsvWriter(out_ / filename);
    }

    void write_json(const std::string& filename, const nlohmann::json& j) {
        outputs_.push_back(filename);
        std::ofstream out(out_ / filename, std::ios::trunc);
        if (!out)
            throw resource_error("cannot write " + (out_ / filename).string());
        out << j.dump(2) << '\n';
    }

    void write_manifest(const std::string& command) {
        nlohmann::json m;
        m["command"] = command;
        m["created_utc"] = detail::utc_timestamp();
        m["seed"] = cfg_.seed;
        m["jobs"] = jobs_;
        nlohmann::json inputs = nlohmann::json::object();
        for (const auto& [name, digest] : input_digests_) {
            char buf[24];
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
            inputs[name] = buf;
        }
        m["inputs"] = inputs;
        nlohmann::json outs = nlohmann::json::array();
        for (const auto& name : outputs_) {
            const auto path = out_ / name;
            char buf[24];
            std::snprintf(buf, sizeof buf, "%016llx",
                          static_cast<unsigned long long>(file_digest(path)));
            outs.push_back({{"path", name},
                            {"bytes", std::filesystem::file_size(path)},
                            {"fnv64", buf}});
        }
        m["outputs"] = outs;
        std::ofstream out(out_ / "manifest.json", std::ios::trunc);
        out << m.dump(2) << '\n';
    }

    // ---- subcommands -----------------------------------------------------

    void run_build_graph() {
        const auto b = make_bundle();
        const auto& g = b.graph();
        {
            outputs_.push_back("graph.edges");
            std::ofstream out(out_ / "graph.edges", std::ios::trunc);
            save_edge_list(g, out);
        }
        if (g.coordinate_dim() > 0) {
            outputs_.push_back("graph.coords");
            std::ofstream out(out_ / "graph.coords", std::ios::trunc);
            save_coordinates(g, out);
        }
        auto csv = open_csv("graph_summary.csv");
        csv.row({"key", "value"});
        csv.row({"vertices", g.vertex_count()});
        csv.row({"edges", g.edge_count()});
        csv.row({"total_measure", g.total_measure()});
        csv.row({"max_degree", g.max_degree()});
        csv.row({"diameter", diameter_estimate(g)});
        if (b.fractal) {
            csv.row({"growth_exponent_formula", b.fractal->growth_exponent()});
            csv.row({"corner_distance", bfs_distances(g, b.fractal->z0)[b.fractal->corners[0]]});
            csv.row({"is_tree", g.edge_count() == g.vertex_count() - 1});
        }
        if (!cfg_.volume_radii.empty()) {
            const auto fit = volume_growth_fit(g, {base_vertex(b)}, cfg_.volume_radii);
            csv.row({"volume_exponent", fit.exponent});
            csv.row({"volume_exponent_stderr", fit.exponent_stderr});
            csv.row({"volume_r_squared", fit.r_squared});
        }
        std::cout << "build-graph: " << g.vertex_count() << " vertices, "
                  << g.edge_count() << " edges\n";
    }

    void run_heat_kernel() {
        const auto b = make_bundle();
        const auto& g = b.graph();
        const MarkovOperator op = make_walk(g, cfg_.alpha);
        const int y = base_vertex(b);
        const auto ks = geometric_steps(std::max(1, cfg_.k_min), k_upper(b), cfg_.k_count);
        const auto fp = graph_fingerprint(g);

        std::vector<KernelColumn> cols;
        bool all_hit = cache_.enabled();
        for (int k : ks) {
            auto hit = cache_.lookup(fp, y, cfg_.alpha, k, g.vertex_count());
            if (!cache_.last_warning().empty())
                std::cerr << cache_.last_warning() << '\n';
            if (!hit) {
                all_hit = false;
                cols.clear();
                break;
            }
            cols.push_back(std::move(*hit));
        }
        if (!all_hit) {
            cols = kernel_columns(op, y, ks);
            for (const auto& c : cols) cache_.store(fp, cfg_.alpha, c);
        }

        auto csv = open_csv("heat_kernel.csv");
        csv.row({"y", "k", "on_diag", "column_mass", "seed"});
        for (const auto& c : cols)
            csv.row({y, c.k, c.values[y], column_mass(g, c.values), cfg_.seed});
        std::cout << "heat-kernel: " << cols.size() << " columns at y=" << y
                  << (all_hit ? " (cache hit)" : "") << '\n';
    }

    void run_fit_exponents() {
        const auto b = make_bundle();
        const auto& g = b.graph();
        const MarkovOperator op = make_walk(g, cfg_.alpha);
        const int y = base_vertex(b);
        const double m_exp = m_exponent(b);

        std::vector<int> vradii = cfg_.volume_radii;
        if (vradii.empty()) {
            const int rmax = diameter_estimate(g) / 4;
            if (rmax >= 30) vradii = geometric_steps(3, rmax, 7);
        }

        auto csv = open_csv("fit_exponents.csv");
        csv.row({"quantity", "exponent", "std_error", "r_squared", "x_min", "x_max",
                 "points", "seed"});

        std::optional<ScalingFit> vol_fit;
        if (!vradii.empty()) {
            vol_fit = volume_growth_fit(g, {y}, vradii);
            csv.row({"volume_growth", vol_fit->exponent, vol_fit->exponent_stderr,
                     vol_fit->r_squared, vol_fit->x_min, vol_fit->x_max, vol_fit->points,
                     cfg_.seed});
            auto pts = open_csv("volume_points.csv");
            pts.row({"r", "volume"});
            const auto dist = bfs_distances(g, y);
            for (int r : vradii) pts.row({r, ball_measure(g, dist, r)});
        }

        const auto ks = geometric_steps(std::max(1, cfg_.k_min), k_upper(b), cfg_.k_count);
        const auto od = on_diagonal_fit(op, y, ks);
        csv.row({"on_diagonal", od.fit.exponent, od.fit.exponent_stderr, od.fit.r_squared,
                 od.fit.x_min, od.fit.x_max, od.fit.points, cfg_.seed});
        {
            auto pts = open_csv("ondiag_points.csv");
            pts.row({"k", "p_kk"});
            for (std::size_t i = 0; i < od.ks.size(); ++i) pts.row({od.ks[i], od.values[i]});
        }
        if (vol_fit) {
            csv.row({"predicted_on_diagonal", -vol_fit->exponent / m_exp, 0.0, 0.0,
                     0.0, 0.0, 0, cfg_.seed});
        }
        std::cout << "fit-exponents: on-diagonal slope " << fmt_g12(od.fit.exponent) << '\n';
    }

    void run_riesz_ratios() {
        const auto b = make_bundle();
        const auto& g = b.graph();
        const MarkovOperator op = make_walk(g, cfg_.alpha);

        std::optional<SpectralDecomposition> dec;
        std::optional<FracEngine> engine;
        if (cfg_.backend == "spectral") {
            dec.emplace(op, cfg_.dense_cap);
            engine.emplace(FracEngine::spectral(op, *dec));
        } else {
            engine.emplace(FracEngine::series(op, cfg_.series_K));
        }

        auto csv = open_csv("riesz_ratios.csv");
        csv.row({"fn_index", "p", "beta", "grad_norm", "frac_norm", "forward_ratio",
                 "reverse_ratio", "backend", "series_tail", "seed"});
        for (int i = 0; i < cfg_.function_count; ++i) {
            auto f = detail::random_vertex_function(g.vertex_count(),
                                                    substream_seed(cfg_.seed, i));
            f = centered(g, f);
            for (double p : cfg_.p_list)
                for (double beta : cfg_.beta_list) {
                    const auto r = ratio_report(*engine, f, p, beta);
                    csv.row({i, p, beta, r.grad_norm, r.frac_norm, r.forward_ratio,
                             r.reverse_ratio, backend_name(r.backend), r.series_tail,
                             cfg_.seed});
                }
        }
        std::cout << "riesz-ratios: " << cfg_.function_count << " functions, backend "
                  << cfg_.backend << '\n';
    }

    void run_estimates() {
        const auto b = make_bundle();
        const auto& g = b.graph();
        const MarkovOperator op = make_walk(g, cfg_.alpha);
        const int y = base_vertex(b);
        const double m_exp = m_exponent(b);
        const int k_hi = k_upper(b);
        const auto ks = geometric_steps(std::max(1, cfg_.k_min), k_hi, cfg_.k_count);

        auto csv = open_csv("estimates.csv");
        csv.row({"check_name", "graph", "level", "y", "q", "m", "c", "k", "lhs", "rhs",
                 "ratio", "pass"});
        const auto emit = [&](const char* check, double q, double c, int k, double lhs,
                              double rhs, bool pass) {
            csv.row({check, b.name, b.level, y, q, m_exp, c, k, lhs, rhs,
                     rhs != 0.0 ? lhs / rhs : 0.0, pass});
        };

        for (double q : cfg_.q_list) {
            for (int k : ks) {
                const auto snap = hardy_stein_snapshot(op, y, k, q);
                emit("jensen_min", q, 0.0, k, snap.jensen_min, -1e-12,
                     snap.jensen_min >= -1e-12);
                emit("holder_sum", q, 0.0, k, snap.jensen_sum, snap.holder_bound,
                     snap.jensen_sum <= snap.holder_bound * (1.0 + 1e-9));
                std::vector<double> uq(snap.u.size());
                for (std::size_t x = 0; x < snap.u.size(); ++x)
                    uq[x] = std::pow(snap.u[x], q);
                const auto lap = laplacian(op, uq);
                double s = 0.0;
                for (int x = 0; x < g.vertex_count(); ++x) s += lap[x] * g.measure(x);
                emit("laplacian_sum", q, 0.0, k, std::abs(s), 1e-10, std::abs(s) <= 1e-10);
            }
            const auto dom = check_gradient_domination(op, y, std::max(1, cfg_.k_min),
                                                       k_hi, q);
            const std::set<int> marks(ks.begin(), ks.end());
            for (const auto& row : dom.rows)
                if (marks.count(row.k))
                    emit("domination", q, 0.0, row.k, row.max_ratio, 0.0,
                         std::isfinite(row.max_ratio));
            emit("domination_sup", q, 0.0, 0, dom.max_ratio, 0.0,
                 std::isfinite(dom.max_ratio));
        }

        {
            std::vector<int> dyadic;
            for (int k = 16; k <= 2048; k *= 2) dyadic.push_back(k);
            for (double q : cfg_.q_list) {
                const auto rows = weighted_gradient_check(op, y, dyadic, q, m_exp,
                                                          cfg_.c_weight);
                double lo = rows.front().ratio, hi = rows.front().ratio;
                for (const auto& row : rows) {
                    emit("weighted_gradient", q, cfg_.c_weight, row.k, row.lhs, row.rhs, true);
                    lo = std::min(lo, row.ratio);
                    hi = std::max(hi, row.ratio);
                }
                emit("weighted_gradient_spread", q, cfg_.c_weight, 0, hi, lo,
                     lo > 0.0 && hi / lo < 4.0);
            }
        }

        {
            std::vector<int> tail_ks;
            tail_ks.push_back(ks.front());
            tail_ks.push_back(ks[ks.size() / 2]);
            tail_ks.push_back(ks.back());
            const auto rows = integrated_gradient_tail(op, y, tail_ks, cfg_.tail_radii,
                                                       m_exp, cfg_.ue_c);
            for (const auto& row : rows)
                emit("gradient_tail", 0.0, cfg_.ue_c, row.k, row.tail, row.implied_c,
                     std::isfinite(row.implied_c));

            if (ks.size() >= 3) {
                std::vector<double> r0_tails;
                const std::vector<double> r0{0.0};
                const auto all_k = integrated_gradient_tail(op, y, ks, r0, m_exp, cfg_.ue_c);
                std::vector<double> xs;
                for (const auto& row : all_k) {
                    xs.push_back(row.k);
                    r0_tails.push_back(row.tail);
                }
                const auto fit = loglog_fit(xs, r0_tails);
                emit("gradient_tail_fit", 0.0, cfg_.ue_c, 0, fit.exponent, -0.5,
                     fit.exponent >= -0.72 && fit.exponent <= -0.48);
            }
        }

        {
            std::vector<double> rs, lambdas;
            for (int r : cfg_.poincare_radii) {
                const double lam = poincare_constant(g, ball(g, y, r));
                emit("poincare", 0.0, 0.0, r, lam, rho(static_cast<double>(r), m_exp), true);
                rs.push_back(r);
                lambdas.push_back(lam);
            }
            if (rs.size() >= 3) {
                const auto fit = loglog_fit(rs, lambdas);
                emit("poincare_fit", 0.0, 0.0, 0, fit.exponent, m_exp,
                     std::abs(fit.exponent - m_exp) <= 0.35);
            }
        }
        std::cout << "estimates: wrote estimates.csv for " << b.name << " level "
                  << b.level << '\n';
    }

    void run_czd() {
        const auto b = make_bundle();
        const auto& g = b.graph();
        const MarkovOperator op = make_walk(g, cfg_.alpha);
        const int y = base_vertex(b);
        const double m_exp = m_exponent(b);

        std::vector<double> f(g.vertex_count(), 0.0);
        f[y] = cfg_.spike_height;

        std::vector<double> lambdas = cfg_.lambda_list;
        if (lambdas.empty()) {
            const auto mf = maximal_function(g, f, dyadic_radii(g));
            const double lam0 = 0.99 * (*std::min_element(mf.begin(), mf.end()));
            lambdas = {0.5 * lam0, lam0, 2.0 * lam0};
        }

        std::optional<SpectralDecomposition> dec;
        std::optional<FracEngine> engine;
        if (g.vertex_count() <= cfg_.dense_cap) {
            dec.emplace(op, cfg_.dense_cap);
            engine.emplace(FracEngine::spectral(op, *dec));
        }

        auto csv = open_csv("czd.csv");
        csv.row({"lambda", "n_balls", "overlap", "c1", "c2", "c3", "recon_error",
                 "meanzero_error", "support_ok", "halfballs_disjoint", "covers",
                 "max_tail_ratio", "pass", "seed"});
        nlohmann::json report = nlohmann::json::array();
        for (double lam : lambdas) {
            const auto dec_cz = cz_decompose(g, f, lam);
            const auto& c = dec_cz.check;
            double max_tail = 0.0;
            nlohmann::json balls = nlohmann::json::array();
            if (engine) {
                const auto tails = cz_tail_claim(op, *engine, dec_cz, m_exp);
                for (const auto& t : tails) {
                    max_tail = std::max(max_tail, t.ratio);
                    balls.push_back({{"center", t.center},
                                     {"radius", t.radius},
                                     {"b_l1", t.b_l1},
                                     {"tail_ratio", t.ratio}});
                }
            } else {
                for (const auto& part : dec_cz.parts)
                    balls.push_back({{"center", part.center},
                                     {"radius", part.whitney_radius},
                                     {"b_l1", part.l1}});
            }
            const bool pass = c.recon_error <= 1e-10 && c.meanzero_error <= 1e-9
                           && c.support_ok && c.halfballs_disjoint && c.covers_level_set;
            csv.row({lam, static_cast<long long>(dec_cz.parts.size()), c.overlap, c.c1,
                     c.c2, c.c3, c.recon_error, c.meanzero_error, c.support_ok,
                     c.halfballs_disjoint, c.covers_level_set, max_tail, pass, cfg_.seed});
            report.push_back({{"lambda", lam},
                              {"n_balls", dec_cz.parts.size()},
                              {"overlap", c.overlap},
                              {"constants",
                               {{"c1", c.c1}, {"c2", c.c2}, {"c3", c.c3}, {"c4", c.overlap}}},
                              {"per_ball", balls}});
        }
        write_json("czd.json", report);
        std::cout << "czd: " << lambdas.size() << " levels on " << b.name << '\n';
    }

    void run_walk_exit() {
        const auto b = make_bundle();
        const auto& g = b.graph();
        const MarkovOperator op = make_walk(g, cfg_.alpha);
        const int x = base_vertex(b);

        auto csv = open_csv("walk_exit.csv");
        csv.row({"graph", "level", "alpha", "x", "r", "trials", "mean", "stderr", "seed"});
        std::vector<ExitTimeStats> stats;
        for (int r : cfg_.exit_radii) {
            const auto s = simulate_exit(op, x, r, cfg_.trials,
                                         substream_seed(cfg_.seed, 1000 + r), jobs_);
            stats.push_back(s);
            csv.row({b.name, b.level, cfg_.alpha, x, r, s.trials, s.mean, s.std_error,
                     cfg_.seed});
        }
        if (stats.size() >= 3) {
            const auto fit = exit_exponent_fit(stats);
            csv.row({"fit", b.level, cfg_.alpha, x, 0, 0LL, fit.exponent,
                     fit.exponent_stderr, cfg_.seed});
            std::cout << "walk-exit: fitted exponent " << fmt_g12(fit.exponent) << '\n';
        } else {
            std::cout << "walk-exit: " << stats.size() << " radii (no fit)\n";
        }
    }

    void run_counterexample() {
        if (cfg_.graph != "vicsek")
            throw validation_error("counterexample: config must select a vicsek graph");
        const double D = std::log(1.0 + std::pow(2.0, cfg_.N)) / std::log(3.0);
        for (double beta : cfg_.beta_list) require_admissible_beta(D, beta, "counterexample");
        if (cfg_.levels.size() < 2)
            throw validation_error("counterexample: need at least two levels");

        struct LevelRow {
            int n;
            long long omega;
            double l1, lp_p, edge_sum, grad_norm, frac_norm;
        };
        // keyed by (p index, beta index), filled level by level so each level
        // is built and decomposed exactly once
        std::map<std::pair<std::size_t, std::size_t>, std::vector<LevelRow>> table;

        for (int n : cfg_.levels) {
            const auto v = build_vicsek(cfg_.N, n, cfg_.vertex_budget);
            const MarkovOperator op = make_walk(v.graph, cfg_.alpha);
            std::optional<SpectralDecomposition> dec;
            std::optional<FracEngine> engine;
            if (cfg_.backend == "spectral") {
                dec.emplace(op, cfg_.dense_cap);
                engine.emplace(FracEngine::spectral(op, *dec));
            } else {
                engine.emplace(FracEngine::series(op, cfg_.series_K));
            }
            const auto fam = build_gn(v);
            for (std::size_t pi = 0; pi < cfg_.p_list.size(); ++pi) {
                const double p = cfg_.p_list[pi];
                const auto norms = gn_norms(op, fam, p);
                for (std::size_t bi = 0; bi < cfg_.beta_list.size(); ++bi) {
                    const auto frac = engine->apply(fam.values, cfg_.beta_list[bi]);
                    LevelRow row{n, fam.vertex_count, norms.l1, norms.lp_p,
                                 norms.edge_sum, norms.grad_norm,
                                 lp_norm(v.graph, frac.value, p)};
                    table[{pi, bi}].push_back(row);
                }
            }
        }

        auto csv = open_csv("counterexample.csv");
        csv.row({"N", "n", "p", "beta", "l1", "lp_p", "edge_sum", "grad_norm",
                 "frac_norm", "forward_ratio", "reverse_ratio", "gap_pred", "slope_obs"});
        for (std::size_t pi = 0; pi < cfg_.p_list.size(); ++pi) {
            const double p = cfg_.p_list[pi];
            const double pprime = p / (p - 1.0);
            for (std::size_t bi = 0; bi < cfg_.beta_list.size(); ++bi) {
                const double beta = cfg_.beta_list[bi];
                const double gap = beta * (D + 1.0) / D - 1.0 / p - 1.0 / (pprime * D);
                const auto& rows = table[{pi, bi}];
                std::vector<double> omegas, ratios;
                for (const auto& r : rows) {
                    omegas.push_back(static_cast<double>(r.omega));
                    ratios.push_back(r.frac_norm / r.grad_norm);
                }
                double slope;
                if (rows.size() >= 3) {
                    slope = loglog_fit(omegas, ratios).exponent;
                } else {
                    slope = std::log(ratios[1] / ratios[0])
                          / std::log(omegas[1] / omegas[0]);
                }
                for (const auto& r : rows)
                    csv.row({cfg_.N, r.n, p, beta, r.l1, r.lp_p, r.edge_sum, r.grad_norm,
                             r.frac_norm, r.grad_norm / r.frac_norm,
                             r.frac_norm / r.grad_norm, gap, slope});
            }
        }
        std::cout << "counterexample: levels " << cfg_.levels.front() << ".."
                  << cfg_.levels.back() << " done\n";
    }

    // ---- full suite -------------------------------------------------------

    struct SummaryRow {
        std::string name;
        double value;
        double target;
        double tolerance;
        bool pass;
    };

    void run_full_suite();

    ExperimentConfig cfg_;
    std::filesystem::path out_;
    int jobs_;
    KernelCache cache_;
    std::vector<std::string> outputs_;
    std::map<std::string, std::uint64_t> input_digests_;
};

inline void Runner::run_full_suite() {
    std::vector<SummaryRow> summary;
    const std::uint64_t seed = cfg_.seed;
    const auto band = [&](std::string name, double value, double target, double tol) {
        summary.push_back({std::move(name), value, target, tol,
                           std::abs(value - target) <= tol});
    };
    const auto gate = [&](std::string name, double value, double bound, bool pass) {
        summary.push_back({std::move(name), value, 0.0, bound, pass});
    };

    // 1: Dirichlet-form and Riesz L2 identities on small graphs.
    {
        double dev_dirichlet = 0.0, dev_riesz = 0.0;
        const auto probe = [&](const WeightedGraph& g, std::uint64_t s) {
            const MarkovOperator op = make_walk(g, cfg_.alpha);
            const SpectralDecomposition dec(op, cfg_.dense_cap);
            const FracEngine engine = FracEngine::spectral(op, dec);
            auto f = detail::random_vertex_function(g.vertex_count(), s);
            const auto grad = gradient_length(op, f);
            const auto lap = laplacian(op, f);
            const double lhs = lp_norm(g, grad, 2.0);
            const double rhs = std::sqrt(std::max(0.0, inner_m(g, lap, f)));
            dev_dirichlet = std::max(dev_dirichlet, std::abs(lhs * lhs - rhs * rhs));
            const auto riesz = riesz_apply(engine, f);
            const double lhs2 = lp_norm(g, riesz, 2.0);
            const double rhs2 = lp_norm(g, centered(g, f), 2.0);
            dev_riesz = std::max(dev_riesz, std::abs(lhs2 - rhs2));
        };
        for (int i = 0; i < 50; ++i)
            probe(detail::random_connected_graph(20 + 3 * i, substream_seed(seed, 100 + i)),
                  substream_seed(seed, 200 + i));
        for (int N = 1; N <= 2; ++N)
            for (int n = 0; n <= 3; ++n)
                probe(build_vicsek(N, n, cfg_.vertex_budget).graph,
                      substream_seed(seed, 300 + 10 * N + n));
        gate("c1_identity_dirichlet", dev_dirichlet, 1e-8, dev_dirichlet < 1e-8);
        gate("c1_identity_riesz_l2", dev_riesz, 1e-8, dev_riesz < 1e-8);
    }

    // 2 and 4: structure identities and the exact edge-increment sums.
    {
        auto csv = open_csv("suite_edge_sums.csv");
        csv.row({"N", "n", "p", "edge_sum", "formula", "rel_err"});
        int structure_failures = 0;
        double worst_rel = 0.0;
        for (int N = 1; N <= 3; ++N) {
            for (int n = 1; n <= 4; ++n) {
                const auto v = build_vicsek(N, n, cfg_.vertex_budget);
                const auto& g = v.graph;
                if (g.vertex_count() != v.vertex_count_formula()) ++structure_failures;
                if (g.edge_count() != g.vertex_count() - 1) ++structure_failures;
                const auto dist = bfs_distances(g, v.z0);
                long long want = 1;
                for (int i = 0; i < n; ++i) want *= 3;
                for (int corner : v.corners)
                    if (dist[corner] != want) ++structure_failures;
                const MarkovOperator op = make_walk(g, cfg_.alpha);
                const auto fam = build_gn(v);
                for (double p : {1.5, 2.0, 3.0}) {
                    const auto norms = gn_norms(op, fam, p);
                    const double formula = std::pow(2.0, N)
                                         * std::pow(3.0, -static_cast<double>(n) * (p - 1.0));
                    const double rel = std::abs(norms.edge_sum - formula) / formula;
                    worst_rel = std::max(worst_rel, rel);
                    csv.row({N, n, p, norms.edge_sum, formula, rel});
                }
            }
        }
        gate("c2_structure_failures", structure_failures, 0.0, structure_failures == 0);
        gate("c4_edge_sum_max_rel_err", worst_rel, 1e-12, worst_rel < 1e-12);
    }

    // 3: exponent triangle on the level-5 fractal, then 10: the
    // upper-estimate dichotomy on the same graph.  Level 5 gives the
    // Gaussian misfit room to grow: the center sees distances up to 243,
    // so the k = 1000 scan is not cut short by the graph boundary.
    {
        const auto v = build_vicsek(2, 5, cfg_.vertex_budget);
        const auto& g = v.graph;
        const MarkovOperator op = make_walk(g, cfg_.alpha);
        const auto vol = volume_growth_fit(g, {v.z0}, {9, 14, 21, 32, 48, 72, 108});

        auto csv = open_csv("suite_triangle.csv");
        csv.row({"graph", "level", "alpha", "x", "r", "trials", "mean", "stderr", "seed"});
        std::vector<ExitTimeStats> stats;
        for (int r : {9, 27, 81}) {
            const auto s = simulate_exit(op, v.z0, r, cfg_.trials,
                                         substream_seed(seed, 1000 + r), jobs_);
            stats.push_back(s);
            csv.row({"vicsek2", 5, cfg_.alpha, v.z0, r, s.trials, s.mean, s.std_error, seed});
        }
        const auto walk_fit = exit_exponent_fit(stats);
        csv.row({"fit", 5, cfg_.alpha, v.z0, 0, 0LL, walk_fit.exponent,
                 walk_fit.exponent_stderr, seed});

        const auto od = on_diagonal_fit(op, v.z0, geometric_steps(50, 2000, 25));
        const double d_ref = std::log(5.0) / std::log(3.0);
        band("c3_volume_exponent", vol.exponent, d_ref, 0.10);
        band("c3_walk_exponent", walk_fit.exponent, d_ref + 1.0, 0.20);
        band("c3_ondiag_exponent", od.fit.exponent, -vol.exponent / walk_fit.exponent, 0.07);

        const double m_exp = v.growth_exponent() + 1.0;
        const auto ue_sub_100 = verify_ue(op, v.z0, 100, m_exp, 0.05);
        const auto ue_sub_1000 = verify_ue(op, v.z0, 1000, m_exp, 0.05);
        const auto ue_gauss_100 = verify_ue(op, v.z0, 100, 2.0, 2.0);
        const auto ue_gauss_1000 = verify_ue(op, v.z0, 1000, 2.0, 2.0);
        const double sub_growth = std::exp(ue_sub_1000.sup_log - ue_sub_100.sup_log);
        const double gauss_log_growth = ue_gauss_1000.sup_log - ue_gauss_100.sup_log;
        auto ucsv = open_csv("suite_ue.csv");
        ucsv.row({"m", "c", "k_max", "sup_log", "seed"});
        for (const auto* rep : {&ue_sub_100, &ue_sub_1000, &ue_gauss_100, &ue_gauss_1000})
            ucsv.row({rep->m_exp, rep->c, rep->trace.back().k, rep->sup_log, seed});
        gate("c10_subgaussian_growth", sub_growth, 2.0, sub_growth < 2.0);
        gate("c10_gaussian_log_growth", gauss_log_growth, std::log(10.0),
             gauss_log_growth > std::log(10.0));
    }

    // 5 and 6: reverse-Riesz growth for p < 2, stability at p = 2, and the
    // forward-ratio stability proxy, sharing one decomposition per level.
    {
        auto csv = open_csv("suite_riesz.csv");
        csv.row({"n", "omega", "p", "reverse_ratio", "forward_max", "seed"});
        std::vector<double> omegas, rev15, rev20;
        double forward_max_l3 = 0.0, forward_max_l4 = 0.0;
        for (int n : {2, 3, 4}) {
            const auto v = build_vicsek(2, n, cfg_.vertex_budget);
            const MarkovOperator op = make_walk(v.graph, cfg_.alpha);
            const SpectralDecomposition dec(op, cfg_.dense_cap);
            const FracEngine engine = FracEngine::spectral(op, dec);
            const auto fam = build_gn(v);
            omegas.push_back(static_cast<double>(fam.vertex_count));
            double fwd_max = 0.0;
            if (n >= 3) {
                for (int i = 0; i < 100; ++i) {
                    auto f = detail::random_vertex_function(v.graph.vertex_count(),
                                                            substream_seed(seed, 5000 + i));
                    f = centered(v.graph, f);
                    const auto r = ratio_report(engine, f, 1.5, 0.5);
                    fwd_max = std::max(fwd_max, r.forward_ratio);
                }
                (n == 3 ? forward_max_l3 : forward_max_l4) = fwd_max;
            }
            for (double p : {1.5, 2.0}) {
                const auto norms = gn_norms(op, fam, p);
                const auto frac = engine.apply(fam.values, 0.5);
                const double ratio = lp_norm(v.graph, frac.value, p) / norms.grad_norm;
                (p == 1.5 ? rev15 : rev20).push_back(ratio);
                csv.row({n, fam.vertex_count, p, ratio, fwd_max, seed});
            }
        }
        const auto fit = loglog_fit(omegas, rev15);
        gate("c5_reverse_growth_ci_low", fit.ci_low(), 0.0, fit.ci_low() > 0.0);
        const double spread = *std::max_element(rev20.begin(), rev20.end())
                            / *std::min_element(rev20.begin(), rev20.end());
        gate("c5_p2_ratio_spread", spread, 2.0, spread < 2.0);
        gate("c6_forward_growth_factor", forward_max_l4 / forward_max_l3, 1.25,
             forward_max_l4 <= 1.25 * forward_max_l3);
    }

    // 7 and 8: Hardy-Stein suite and the weighted gradient ratio, on (2,4).
    {
        const auto v = build_vicsek(2, 4, cfg_.vertex_budget);
        const auto& g = v.graph;
        const MarkovOperator op = make_walk(g, cfg_.alpha);
        const double m_exp = v.growth_exponent() + 1.0;
        const int horizon = trusted_horizon(4, m_exp);

        double jensen_min = 0.0, lap_max = 0.0, dom_max = 0.0;
        auto csv = open_csv("suite_hardy_stein.csv");
        csv.row({"q", "k", "jensen_min", "laplacian_sum", "domination_max", "seed"});
        for (double q : {1.25, 1.5, 1.75}) {
            const auto marks = geometric_steps(10, horizon, 8);
            const std::set<int> mark_set(marks.begin(), marks.end());
            KernelWalk walk(op, v.z0);
            walk.advance_to(9);
            std::vector<double> u = walk.values();
            for (int k = 10; k <= horizon; ++k) {
                walk.advance(1);
                const auto& u_next = walk.values();
                const auto jg = jensen_gap(op, u, u_next, q);
                const double jmin = *std::min_element(jg.begin(), jg.end());
                jensen_min = std::min(jensen_min, jmin);

                std::vector<double> uq(u.size());
                for (std::size_t x = 0; x < u.size(); ++x) uq[x] = std::pow(u[x], q);
                const auto lap = laplacian(op, uq);
                double s = 0.0;
                for (int x = 0; x < g.vertex_count(); ++x) s += lap[x] * g.measure(x);
                lap_max = std::max(lap_max, std::abs(s));

                const auto nq = pseudo_gradient(op, u, u_next, q);
                const auto anq = averaging(g, nq);
                double kdom = 0.0;
                for (int x = 0; x < g.vertex_count(); ++x) {
                    if (!(u[x] > 0.0) || !(anq[x] > 1e-300)) continue;
                    double grad_sq = 0.0;
                    auto nbrs = g.neighbors(x);
                    auto wts = g.weights(x);
                    for (std::size_t i = 0; i < nbrs.size(); ++i) {
                        const double d = u[nbrs[i]] - u[x];
                        grad_sq += wts[i] * d * d;
                    }
                    grad_sq *= 0.5 * (1.0 - cfg_.alpha) / g.measure(x);
                    kdom = std::max(kdom, grad_sq / anq[x]);
                }
                dom_max = std::max(dom_max, kdom);
                if (mark_set.count(k)) csv.row({q, k, jmin, std::abs(s), kdom, seed});
                u = u_next;
            }
        }
        gate("c7_jensen_min", jensen_min, -1e-12, jensen_min >= -1e-12);
        gate("c7_laplacian_identity_max", lap_max, 1e-10, lap_max <= 1e-10);
        gate("c7_domination_sup", dom_max, 20.0, std::isfinite(dom_max) && dom_max <= 20.0);

        std::vector<int> dyadic;
        for (int k = 16; k <= 2048; k *= 2) dyadic.push_back(k);
        const auto rows = weighted_gradient_check(op, v.z0, dyadic, 1.5, m_exp, 0.02);
        auto wcsv = open_csv("suite_weighted.csv");
        wcsv.row({"k", "lhs", "rhs", "ratio", "seed"});
        double lo = rows.front().ratio, hi = rows.front().ratio;
        for (const auto& row : rows) {
            wcsv.row({row.k, row.lhs, row.rhs, row.ratio, seed});
            lo = std::min(lo, row.ratio);
            hi = std::max(hi, row.ratio);
        }
        gate("c8_weighted_ratio_spread", hi / lo, 4.0, lo > 0.0 && hi / lo < 4.0);
    }

    // 9: CZ properties on three graphs, 200 random (f, lambda) pairs each,
    // plus the spike tail claim.
    {
        auto csv = open_csv("suite_cz.csv");
        csv.row({"graph", "pairs", "recon_max", "meanzero_max", "c1_max", "c2_max",
                 "c3_max", "overlap_max", "structure_ok", "seed"});
        double recon_all = 0.0, meanzero_all = 0.0;
        double c1_all = 0.0, c2_all = 0.0, c3_all = 0.0;
        int overlap_all = 0;
        bool structure_all = true;

        int graph_index = 0;
        const auto run_graph = [&](const WeightedGraph& g, const std::string& name) {
            double recon = 0.0, meanzero = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
            int overlap = 0;
            bool structure = true;
            for (int i = 0; i < 200; ++i) {
                SplitMix64 rng(substream_seed(seed, 9000 + 500 * graph_index + i));
                std::vector<double> f(g.vertex_count());
                for (double& x : f) x = rng.next_normal();
                const auto mf = maximal_function(g, f, dyadic_radii(g));
                std::vector<double> sorted_mf = mf;
                std::sort(sorted_mf.begin(), sorted_mf.end());
                const std::size_t idx = static_cast<std::size_t>(
                    rng.next_below(static_cast<std::uint64_t>(sorted_mf.size())));
                const double lam = sorted_mf[idx] * (0.5 + rng.next_unit());
                if (!(lam > 0.0)) continue;
                const auto dec = cz_decompose(g, f, lam);
                const auto& c = dec.check;
                recon = std::max(recon, c.recon_error);
                meanzero = std::max(meanzero, c.meanzero_error);
                c1 = std::max(c1, c.c1);
                c2 = std::max(c2, c.c2);
                c3 = std::max(c3, c.c3);
                overlap = std::max(overlap, c.overlap);
                structure = structure && c.support_ok && c.halfballs_disjoint
                          && c.covers_level_set;
            }
            csv.row({name, 200, recon, meanzero, c1, c2, c3, overlap, structure, seed});
            recon_all = std::max(recon_all, recon);
            meanzero_all = std::max(meanzero_all, meanzero);
            c1_all = std::max(c1_all, c1);
            c2_all = std::max(c2_all, c2);
            c3_all = std::max(c3_all, c3);
            overlap_all = std::max(overlap_all, overlap);
            structure_all = structure_all && structure;
            ++graph_index;
        };
        {
            GraphBuilder b(55);
            for (int i = 0; i + 1 < 55; ++i) b.add_edge(i, i + 1, 1.0);
            run_graph(b.build(), "path55");
        }
        run_graph(build_vicsek(2, 2, cfg_.vertex_budget).graph, "vicsek2_2");
        run_graph(build_vicsek(2, 3, cfg_.vertex_budget).graph, "vicsek2_3");

        gate("c9_recon_max", recon_all, 1e-10, recon_all <= 1e-10);
        gate("c9_meanzero_max", meanzero_all, 1e-9, meanzero_all <= 1e-9);
        gate("c9_c1_max", c1_all, 20.0, c1_all <= 20.0);
        gate("c9_c2_max", c2_all, 5.0, c2_all <= 5.0);
        gate("c9_c3_max", c3_all, 30.0, c3_all <= 30.0);
        gate("c9_overlap_max", overlap_all, 50.0, overlap_all <= 50);
        gate("c9_structure_ok", structure_all ? 1.0 : 0.0, 1.0, structure_all);

        // spike tail claim on (2,3)
        const auto v = build_vicsek(2, 3, cfg_.vertex_budget);
        const auto& g = v.graph;
        const MarkovOperator op = make_walk(g, cfg_.alpha);
        const SpectralDecomposition sdec(op, cfg_.dense_cap);
        const FracEngine engine = FracEngine::spectral(op, sdec);
        std::vector<double> f(g.vertex_count(), 0.0);
        f[v.z0] = 100.0;
        const auto mf = maximal_function(g, f, dyadic_radii(g));
        const double lam0 = 0.99 * (*std::min_element(mf.begin(), mf.end()));
        double tail_max = 0.0;
        for (double lam : {0.5 * lam0, lam0, 2.0 * lam0}) {
            const auto dec = cz_decompose(g, f, lam);
            for (const auto& row :
                 cz_tail_claim(op, engine, dec, v.growth_exponent() + 1.0))
                tail_max = std::max(tail_max, row.ratio);
        }
        gate("c9_tail_ratio_max", tail_max, 0.5, tail_max <= 0.5);
    }

    auto csv = open_csv("summary.csv");
    csv.row({"criterion", "value", "target", "tolerance", "pass"});
    int failures = 0;
    for (const auto& row : summary) {
        csv.row({row.name, row.value, row.target, row.tolerance, row.pass});
        if (!row.pass) ++failures;
    }
    std::cout << "full-suite: " << summary.size() - failures << "/" << summary.size()
              << " checks passed\n";
}

} // namespace frlab
