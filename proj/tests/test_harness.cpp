#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "frlab/cache.hpp"
#include "frlab/config.hpp"
#include "frlab/csv.hpp"
#include "frlab/errors.hpp"
#include "frlab/graph.hpp"
#include "frlab/kernels.hpp"
#include "frlab/rng.hpp"
#include "frlab/run.hpp"
#include "frlab/vicsek.hpp"

using namespace frlab;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return load_experiment_config(in);
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("frlab_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int line_count(const fs::path& path) {
    const std::string text = slurp(path);
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

WeightedGraph small_weighted() {
    GraphBuilder b(5);
    b.add_edge(0, 1, 1.25);
    b.add_edge(1, 2, 2.0);
    b.add_edge(2, 3, 0.5);
    b.add_edge(3, 4, 1.0);
    b.add_edge(4, 0, 3.0);
    return b.build();
}

} // namespace

TEST(Config, DefaultsAndOverrides) {
    const auto ec = parse_config(
        "# walk setup\n"
        "graph = vicsek\n"
        "N = 3   # three-dimensional\n"
        "level=2\n"
        "alpha = 0.25\n"
        "p_list = 1.5, 2.0, 3\n"
        "exit_radii = 3,9\n"
        "seed = 42\n");
    EXPECT_EQ(ec.graph, "vicsek");
    EXPECT_EQ(ec.N, 3);
    EXPECT_EQ(ec.level, 2);
    EXPECT_DOUBLE_EQ(ec.alpha, 0.25);
    ASSERT_EQ(ec.p_list.size(), 3u);
    EXPECT_DOUBLE_EQ(ec.p_list[2], 3.0);
    ASSERT_EQ(ec.exit_radii.size(), 2u);
    EXPECT_EQ(ec.exit_radii[1], 9);
    EXPECT_EQ(ec.seed, 42u);
    EXPECT_EQ(ec.backend, "spectral");
    EXPECT_EQ(ec.dense_cap, 4000);
    EXPECT_EQ(ec.k_min, 10);
}

TEST(Config, Rejections) {
    EXPECT_THROW(parse_config("graph vicsek\n"), format_error);
    EXPECT_THROW(parse_config("N = 2\nN = 3\n"), format_error);
    EXPECT_THROW(parse_config("= 3\n"), format_error);
    try {
        parse_config("grpah = vicsek\n");
        FAIL() << "unknown key must be rejected";
    } catch (const validation_error& e) {
        EXPECT_NE(std::string(e.what()).find("grpah"), std::string::npos);
    }
    try {
        parse_config("alpha = fast\n");
        FAIL() << "non-numeric value must be rejected";
    } catch (const validation_error& e) {
        EXPECT_NE(std::string(e.what()).find("alpha"), std::string::npos);
    }
    EXPECT_THROW(parse_config("graph = lattice\n"), validation_error);
    EXPECT_THROW(parse_config("backend = dense\n"), validation_error);
    EXPECT_THROW(parse_config("graph = edge_list\n"), validation_error);
    EXPECT_THROW(parse_config("alpha = 1.0\n"), validation_error);
    EXPECT_THROW(parse_config("q_list = 2.5\n"), validation_error);
    EXPECT_THROW(parse_config("p_list = 1.0\n"), validation_error);
    EXPECT_THROW(parse_config("beta_list = 1.5\n"), validation_error);
    EXPECT_THROW(parse_config("trials = 0\n"), validation_error);
    EXPECT_THROW(parse_config("seed = -1\n"), validation_error);
    EXPECT_NO_THROW(parse_config("seed = 18446744073709551615\n"));
}

TEST(Format, TwelveSignificantDigits) {
    EXPECT_EQ(fmt_g12(0.5), "0.5");
    EXPECT_EQ(fmt_g12(2.0), "2");
    EXPECT_EQ(fmt_g12(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(fmt_g12(1e21), "1e+21");
    EXPECT_EQ(fmt_g12(-1.5e-9), "-1.5e-09");
}

TEST(Format, CsvWriterRows) {
    const auto dir = fresh_dir("csv");
    {
        CsvWriter csv(dir / "t.csv");
        csv.row({"a", "b", "c"});
        csv.row({1, 0.25, true});
        csv.row({std::string("x"), 7LL, false});
    }
    EXPECT_EQ(slurp(dir / "t.csv"), "a,b,c\n1,0.25,1\nx,7,0\n");
}

TEST(Digest, KnownFnvVectors) {
    EXPECT_EQ(fnv1a64(std::string("")), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64(std::string("a")), 0xaf63dc4c8601ec8cULL);
    const auto dir = fresh_dir("digest");
    {
        std::ofstream out(dir / "f.bin", std::ios::binary);
        out << "a";
    }
    EXPECT_EQ(file_digest(dir / "f.bin"), 0xaf63dc4c8601ec8cULL);
    EXPECT_THROW(file_digest(dir / "missing.bin"), resource_error);
}

TEST(Digest, GraphFingerprintCanonicalForm) {
    const auto g = small_weighted();
    EXPECT_EQ(graph_fingerprint(g), graph_fingerprint(small_weighted()));

    // independent re-derivation from the sorted edge list
    std::string text;
    char line[96];
    for (int x = 0; x < g.vertex_count(); ++x) {
        auto nbrs = g.neighbors(x);
        auto wts = g.weights(x);
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            if (nbrs[i] < x) continue;
            std::snprintf(line, sizeof line, "%d %d %.17g\n", x, nbrs[i], wts[i]);
            text += line;
        }
    }
    EXPECT_EQ(graph_fingerprint(g), fnv1a64(text));

    GraphBuilder b(5);
    b.add_edge(0, 1, 1.25);
    b.add_edge(1, 2, 2.0);
    b.add_edge(2, 3, 0.5);
    b.add_edge(3, 4, 1.0);
    b.add_edge(4, 0, 3.0 + 1e-12);
    EXPECT_NE(graph_fingerprint(g), graph_fingerprint(b.build()));
}

TEST(Cache, RoundTripIsBitExact) {
    const auto dir = fresh_dir("cache_rt");
    KernelCache cache(dir);
    EXPECT_TRUE(cache.enabled());
    const auto g = small_weighted();
    const auto fp = graph_fingerprint(g);

    KernelColumn col;
    col.y = 2;
    col.k = 7;
    SplitMix64 rng(5);
    col.values.resize(g.vertex_count());
    for (double& v : col.values) v = rng.next_normal();

    EXPECT_FALSE(cache.lookup(fp, 2, 0.5, 7, g.vertex_count()).has_value());
    cache.store(fp, 0.5, col);
    const auto hit = cache.lookup(fp, 2, 0.5, 7, g.vertex_count());
    ASSERT_TRUE(hit.has_value());
    EXPECT_TRUE(cache.last_warning().empty());
    EXPECT_EQ(hit->y, 2);
    EXPECT_EQ(hit->k, 7);
    for (std::size_t i = 0; i < col.values.size(); ++i)
        EXPECT_EQ(hit->values[i], col.values[i]);

    // different alpha or k is a clean miss with no warning
    EXPECT_FALSE(cache.lookup(fp, 2, 0.25, 7, g.vertex_count()).has_value());
    EXPECT_TRUE(cache.last_warning().empty());
}

TEST(Cache, MismatchAndTruncationAreMisses) {
    const auto dir = fresh_dir("cache_bad");
    KernelCache cache(dir);
    const auto g = small_weighted();
    const auto fp = graph_fingerprint(g);
    KernelColumn col;
    col.y = 0;
    col.k = 3;
    col.values.assign(g.vertex_count(), 1.5);
    cache.store(fp, 0.5, col);

    // wrong vertex count: header mismatch
    EXPECT_FALSE(cache.lookup(fp, 0, 0.5, 3, g.vertex_count() + 1).has_value());
    EXPECT_NE(cache.last_warning().find("header mismatch"), std::string::npos);

    // truncate the data block behind the header
    fs::path entry;
    for (const auto& e : fs::directory_iterator(dir)) entry = e.path();
    ASSERT_FALSE(entry.empty());
    const std::string text = slurp(entry);
    const auto nl = text.find('\n');
    ASSERT_NE(nl, std::string::npos);
    {
        std::ofstream out(entry, std::ios::binary | std::ios::trunc);
        out << text.substr(0, nl + 1 + 8);
    }
    EXPECT_FALSE(cache.lookup(fp, 0, 0.5, 3, g.vertex_count()).has_value());
    EXPECT_NE(cache.last_warning().find("truncated"), std::string::npos);

    KernelCache off;
    EXPECT_FALSE(off.enabled());
    EXPECT_FALSE(off.lookup(fp, 0, 0.5, 3, g.vertex_count()).has_value());
    off.store(fp, 0.5, col);  // no-op
}

TEST(Runner, BuildGraphWritesManifest) {
    unsetenv("FRLAB_CACHE");
    const auto dir = fresh_dir("run_build");
    ExperimentConfig cfg;
    cfg.graph = "vicsek";
    cfg.N = 2;
    cfg.level = 2;
    cfg.seed = 9;
    Runner runner(cfg, dir, 1);
    runner.set_input_digest("config", 0xdeadbeefULL);
    EXPECT_EQ(runner.dispatch("build-graph"), 0);

    EXPECT_TRUE(fs::exists(dir / "graph.edges"));
    EXPECT_TRUE(fs::exists(dir / "graph.coords"));
    EXPECT_TRUE(fs::exists(dir / "graph_summary.csv"));

    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(m.at("command"), "build-graph");
    EXPECT_EQ(m.at("seed").get<std::uint64_t>(), 9u);
    EXPECT_EQ(m.at("jobs"), 1);
    EXPECT_EQ(m.at("inputs").at("config"), "00000000deadbeef");
    ASSERT_TRUE(m.at("outputs").is_array());
    bool saw_summary = false;
    for (const auto& o : m.at("outputs")) {
        const fs::path p = dir / o.at("path").get<std::string>();
        EXPECT_TRUE(fs::exists(p));
        char buf[24];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(file_digest(p)));
        EXPECT_EQ(o.at("fnv64").get<std::string>(), buf);
        EXPECT_EQ(o.at("bytes").get<std::uint64_t>(), fs::file_size(p));
        if (o.at("path") == "graph_summary.csv") saw_summary = true;
    }
    EXPECT_TRUE(saw_summary);

    const std::string summary = slurp(dir / "graph_summary.csv");
    EXPECT_NE(summary.find("vertices,101"), std::string::npos);
    EXPECT_NE(summary.find("is_tree,1"), std::string::npos);

    EXPECT_THROW(runner.dispatch("bogus"), validation_error);
}

TEST(Runner, EdgeListGraphRoundTrips) {
    unsetenv("FRLAB_CACHE");
    const auto dir = fresh_dir("run_edges");
    const auto g = small_weighted();
    const fs::path input = dir / "input.edges";
    {
        std::ofstream out(input);
        save_edge_list(g, out);
    }
    ExperimentConfig cfg;
    cfg.graph = "edge_list";
    cfg.edge_list_path = input.string();
    Runner runner(cfg, dir / "out", 1);
    runner.dispatch("build-graph");

    EXPECT_EQ(slurp(dir / "out" / "graph.edges"), slurp(input));
    EXPECT_FALSE(fs::exists(dir / "out" / "graph.coords"));
    const auto m = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(file_digest(input)));
    EXPECT_EQ(m.at("inputs").at("edge_list").get<std::string>(), buf);
}

TEST(Runner, HeatKernelWarmsAndReusesTheCache) {
    unsetenv("FRLAB_CACHE");
    const auto dir = fresh_dir("run_hk");
    ExperimentConfig cfg;
    cfg.graph = "vicsek";
    cfg.N = 2;
    cfg.level = 2;
    cfg.k_min = 2;
    cfg.k_max = 20;
    cfg.k_count = 5;
    {
        Runner runner(cfg, dir, 1);
        runner.dispatch("heat-kernel");
    }
    ASSERT_TRUE(fs::exists(dir / "heat_kernel.csv"));
    ASSERT_TRUE(fs::exists(dir / "cache"));
    const auto first = file_digest(dir / "heat_kernel.csv");

    const auto v = build_vicsek(2, 2);
    const auto fp = graph_fingerprint(v.graph);
    KernelCache probe(dir / "cache");
    for (int k : geometric_steps(2, 20, 5)) {
        const auto hit = probe.lookup(fp, v.z0, 0.5, k, v.graph.vertex_count());
        EXPECT_TRUE(hit.has_value()) << "k=" << k;
    }

    {
        Runner runner(cfg, dir, 1);
        runner.dispatch("heat-kernel");
    }
    EXPECT_EQ(file_digest(dir / "heat_kernel.csv"), first);
}

TEST(Runner, CacheDirectoryEnvOverride) {
    const auto dir = fresh_dir("run_env");
    const fs::path kc = dir / "elsewhere";
    setenv("FRLAB_CACHE", kc.c_str(), 1);
    ExperimentConfig cfg;
    cfg.graph = "vicsek";
    cfg.N = 1;
    cfg.level = 2;
    cfg.k_min = 2;
    cfg.k_max = 10;
    cfg.k_count = 3;
    {
        Runner runner(cfg, dir / "out", 1);
        runner.dispatch("heat-kernel");
    }
    unsetenv("FRLAB_CACHE");
    EXPECT_TRUE(fs::exists(kc));
    EXPECT_FALSE(fs::exists(dir / "out" / "cache"));
    bool has_entry = false;
    for (const auto& e : fs::directory_iterator(kc)) has_entry |= e.is_regular_file();
    EXPECT_TRUE(has_entry);
}

TEST(Runner, RieszRatiosAreSeedDeterministic) {
    unsetenv("FRLAB_CACHE");
    const auto dir = fresh_dir("run_rr");
    ExperimentConfig cfg;
    cfg.graph = "vicsek";
    cfg.N = 2;
    cfg.level = 2;
    cfg.function_count = 3;
    cfg.p_list = {1.5, 2.0};
    cfg.beta_list = {0.5};
    cfg.seed = 11;

    Runner(cfg, dir / "a", 1).dispatch("riesz-ratios");
    Runner(cfg, dir / "b", 1).dispatch("riesz-ratios");
    EXPECT_EQ(file_digest(dir / "a" / "riesz_ratios.csv"),
              file_digest(dir / "b" / "riesz_ratios.csv"));

    cfg.seed = 12;
    Runner(cfg, dir / "c", 1).dispatch("riesz-ratios");
    EXPECT_NE(file_digest(dir / "a" / "riesz_ratios.csv"),
              file_digest(dir / "c" / "riesz_ratios.csv"));

    const std::string text = slurp(dir / "a" / "riesz_ratios.csv");
    EXPECT_EQ(line_count(dir / "a" / "riesz_ratios.csv"), 1 + 3 * 2);
    EXPECT_NE(text.find("fn_index,p,beta,"), std::string::npos);
    EXPECT_NE(text.find("spectral"), std::string::npos);
}

TEST(Runner, FitExponentsOutputs) {
    unsetenv("FRLAB_CACHE");
    const auto dir = fresh_dir("run_fit");
    ExperimentConfig cfg;
    cfg.graph = "vicsek";
    cfg.N = 2;
    cfg.level = 3;
    cfg.volume_radii = {1, 2, 3, 5, 7, 10, 13};
    Runner(cfg, dir, 1).dispatch("fit-exponents");
    const std::string text = slurp(dir / "fit_exponents.csv");
    EXPECT_NE(text.find("volume_growth,"), std::string::npos);
    EXPECT_NE(text.find("on_diagonal,"), std::string::npos);
    EXPECT_NE(text.find("predicted_on_diagonal,"), std::string::npos);
    EXPECT_GE(line_count(dir / "volume_points.csv"), 8);
    EXPECT_GE(line_count(dir / "ondiag_points.csv"), 4);
}

TEST(Runner, EstimatesChecksAreAllPresent) {
    unsetenv("FRLAB_CACHE");
    const auto dir = fresh_dir("run_est");
    ExperimentConfig cfg;
    cfg.graph = "vicsek";
    cfg.N = 2;
    cfg.level = 3;
    cfg.q_list = {1.5};
    Runner(cfg, dir, 1).dispatch("estimates");
    const std::string text = slurp(dir / "estimates.csv");
    for (const char* check :
         {"jensen_min", "holder_sum", "laplacian_sum", "domination", "domination_sup",
          "weighted_gradient", "weighted_gradient_spread", "gradient_tail",
          "gradient_tail_fit", "poincare", "poincare_fit"})
        EXPECT_NE(text.find(check), std::string::npos) << check;
    // the universal identities must pass on the canonical fractal
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
        const auto cells = split_csv(line);
        ASSERT_EQ(cells.size(), 12u);
        if (cells[0] == "jensen_min" || cells[0] == "laplacian_sum"
            || cells[0] == "holder_sum")
            EXPECT_EQ(cells[11], "1") << line;
    }
}

TEST(Runner, CzdSpikeReport) {
    unsetenv("FRLAB_CACHE");
    const auto dir = fresh_dir("run_czd");
    ExperimentConfig cfg;
    cfg.graph = "vicsek";
    cfg.N = 2;
    cfg.level = 2;
    Runner(cfg, dir, 1).dispatch("czd");
    EXPECT_EQ(line_count(dir / "czd.csv"), 4);
    std::istringstream lines(slurp(dir / "czd.csv"));
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        const auto cells = split_csv(line);
        ASSERT_EQ(cells.size(), 14u);
        EXPECT_EQ(cells[12], "1") << line;  // pass column
    }
    const auto report = nlohmann::json::parse(slurp(dir / "czd.json"));
    ASSERT_TRUE(report.is_array());
    ASSERT_EQ(report.size(), 3u);
    for (const auto& entry : report) {
        EXPECT_TRUE(entry.at("constants").contains("c4"));
        ASSERT_TRUE(entry.at("per_ball").is_array());
        if (!entry.at("per_ball").empty())
            EXPECT_TRUE(entry.at("per_ball").front().contains("tail_ratio"));
    }
}

TEST(Runner, WalkExitFitsWhenThreeRadii) {
    unsetenv("FRLAB_CACHE");
    const auto dir = fresh_dir("run_we");
    ExperimentConfig cfg;
    cfg.graph = "vicsek";
    cfg.N = 2;
    cfg.level = 3;
    cfg.exit_radii = {3, 6, 12};
    cfg.trials = 500;
    Runner(cfg, dir, 2).dispatch("walk-exit");
    EXPECT_EQ(line_count(dir / "walk_exit.csv"), 5);
    std::istringstream lines(slurp(dir / "walk_exit.csv"));
    std::string line, last;
    while (std::getline(lines, line)) last = line;
    EXPECT_EQ(split_csv(last)[0], "fit");
}

TEST(Runner, CounterexampleTable) {
    unsetenv("FRLAB_CACHE");
    const auto dir = fresh_dir("run_ce");
    ExperimentConfig cfg;
    cfg.graph = "vicsek";
    cfg.N = 2;
    cfg.levels = {1, 2};
    cfg.p_list = {1.5};
    cfg.beta_list = {0.5};
    Runner(cfg, dir, 1).dispatch("counterexample");
    EXPECT_EQ(line_count(dir / "counterexample.csv"), 3);
    std::istringstream lines(slurp(dir / "counterexample.csv"));
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        const auto cells = split_csv(line);
        ASSERT_EQ(cells.size(), 13u);
        EXPECT_EQ(cells[0], "2");
    }

    cfg.graph = "edge_list";
    cfg.edge_list_path = "unused";
    EXPECT_THROW(Runner(cfg, dir, 1).dispatch("counterexample"), validation_error);
}
