#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lia/error.hpp"
#include "lia/harness.hpp"

using namespace lia;
using namespace lia::harness;
namespace fs = std::filesystem;

namespace {

SweepConfig small(std::vector<topology::Kind> kinds, std::vector<int> n, int instances) {
    auto c = SweepConfig::defaults_for(RunKind::Sweep);
    c.topologies = std::move(kinds);
    c.n_list = std::move(n);
    c.instances = instances;
    c.bootstrap_resamples = 200;
    c.measure_compute_time = false;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("lia_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

TEST_CASE("config parsing") {
    const auto base = SweepConfig::defaults_for(RunKind::Sweep);
    SUBCASE("fields overlay the defaults") {
        const auto c = config_from_json(nlohmann::json::parse(R"({"topologies":["internet"],"n_list":[10],"instances":10,"seed":7})"), base);
        CHECK(c.topologies == std::vector<topology::Kind>{topology::Kind::Internet100});
        CHECK(c.instances == 10);
        CHECK(c.seed == 7);
        CHECK(c.mechanisms == base.mechanisms);
    }
    SUBCASE("error_model object form") {
        const auto c = config_from_json(nlohmann::json::parse(R"({"error_model":{"model":"iid","epsilon_ms":2}})"), base);
        CHECK(c.error_models == std::vector<std::string>{"iid"});
        CHECK(c.epsilon_list == std::vector<double>{2.0});
    }
    SUBCASE("unknown keys name the field") {
        try {
            config_from_json(nlohmann::json::parse(R"({"instances":5,"lamda_list":[1]})"), base);
            FAIL("expected a config error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Config);
            CHECK(std::string(e.what()).find("lamda_list") != std::string::npos);
        }
    }
    SUBCASE("type errors name the field") {
        try {
            config_from_json(nlohmann::json::parse(R"({"instances":"many"})"), base);
            FAIL("expected a config error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("instances") != std::string::npos);
        }
    }
    SUBCASE("invalid values") {
        for (const char* doc : {R"({"instances":0})", R"({"n_list":[]})", R"({"mechanisms":[]})", R"({"mechanisms":["dutch"]})",
                                R"({"epsilon_list":[-1]})", R"({"target_feasible":1.5})", R"({"topologies":["moon"]})",
                                R"({"error_models":["gaussian"]})", R"({"value_lo":5,"value_hi":1})"}) {
            CAPTURE(doc);
            CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(doc), base), Error);
        }
    }
    SUBCASE("round trip") {
        auto c = base;
        c.emission_window_ms = 12.0;
        const auto back = config_from_json(config_to_json(c), SweepConfig{});
        CHECK(config_to_json(back) == config_to_json(c));
    }
    SUBCASE("run kind defaults") {
        const auto r = SweepConfig::defaults_for(RunKind::Robustness);
        CHECK(r.error_models.size() == 4);
        CHECK(r.epsilon_list == std::vector<double>{0, 0.5, 1, 2, 5, 10});
        CHECK(SweepConfig::defaults_for(RunKind::Large).n_list == std::vector<int>{1000});
    }
    SUBCASE("variants expand lambda and batch lists") {
        auto c = base;
        c.mechanisms = {"lia", "batch_vcg", "sync_vcg"};
        const auto v = c.variants();
        CHECK(v.size() == 3 + 2 + 1);
        CHECK(v[3].label() == "batch_vcg_B10");
    }
}

TEST_CASE("minimal sweep produces the documented files quickly") {
    const auto dir = scratch("minimal");
    auto c = small({topology::Kind::Internet100}, {10}, 10);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run_sweep(c);
    write_records_csv(r, (dir / "records.csv").string());
    write_summary_json(r, (dir / "summary.json").string());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 5.0);
    CHECK(r.records.size() == 10 * c.variants().size());

    std::ifstream in(dir / "records.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "topology,mechanism,n,lambda_per_s,epsilon_ms,error_model,seed,sw_ratio_all,sw_ratio_feas,reachability,rev_ratio,"
          "clearing_latency_ms,compute_time_ms,lai_sup,lai_marginal_1ms");
    std::string row;
    std::size_t rows = 0;
    while (std::getline(in, row)) {
        const auto cells = split(row);
        REQUIRE(cells.size() == csv_columns().size());
        CHECK(cells[0] == "internet");
        CHECK(cells[12].empty());  // timing disabled
        if (cells[1] == "sync_vcg") CHECK(cells[3].empty());
        if (cells[1] == "lia") CHECK_FALSE(cells[3].empty());
        ++rows;
    }
    CHECK(rows == r.records.size());

    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["run"] == "sweep");
    CHECK(summary["cells"].size() == 1);
    CHECK(summary["groups"].size() == c.variants().size());
    CHECK(summary["checks"]["welfare_bound_violations"] == 0);
    const auto& g0 = summary["groups"][0]["metrics"]["sw_ratio_all"];
    CHECK(g0["ci_lo"].get<double>() <= g0["mean"].get<double>());
    CHECK(g0["ci_hi"].get<double>() >= g0["mean"].get<double>());
    fs::remove_all(dir);
}

TEST_CASE("records are identical across runs and worker counts") {
    auto c = small({topology::Kind::Starlink200, topology::Kind::Dsn30}, {10, 30}, 40);
    const auto dir = scratch("determinism");
    std::vector<std::string> csvs, summaries;
    for (int jobs : {1, 3, 1}) {
        c.jobs = jobs;
        const auto r = run_sweep(c);
        const auto path = dir / ("records_" + std::to_string(csvs.size()) + ".csv");
        write_records_csv(r, path.string());
        csvs.push_back(slurp(path));
        summaries.push_back(summarize(r).dump());
    }
    CHECK(csvs[0] == csvs[1]);
    CHECK(csvs[0] == csvs[2]);
    CHECK(summaries[0] == summaries[1]);

    SUBCASE("a different seed changes the records") {
        c.seed = 2;
        const auto r = run_sweep(c);
        write_records_csv(r, (dir / "other.csv").string());
        CHECK(slurp(dir / "other.csv") != csvs[0]);
    }
    fs::remove_all(dir);
}

TEST_CASE("sweep invariants") {
    auto c = small({topology::Kind::Starlink200, topology::Kind::Internet100}, {20}, 100);
    c.mechanisms = {"lia", "sync_vcg", "fast_vcg", "batch_vcg", "holdback"};
    const auto r = run_sweep(c);
    CHECK(r.checks.ok());
    CHECK(r.checks.sync_holdback_compared == 200);
    CHECK(r.checks.welfare_bound_checked > 0);

    SUBCASE("LIA never rewards being faster") {
        for (const auto& rec : r.records)
            if (rec.mechanism == "lia") CHECK(rec.lai_sup == 0.0);
    }
    SUBCASE("waiting order per instance") {
        std::map<std::tuple<std::size_t, std::size_t>, std::map<std::string, double>> lat;
        for (const auto& rec : r.records)
            if (!std::isnan(rec.clearing_latency_ms)) lat[{rec.cell, rec.instance}][rec.mechanism + (std::isnan(rec.lambda_per_s) ? "" : std::to_string(rec.lambda_per_s))] = rec.clearing_latency_ms;
        for (const auto& [key, m] : lat) {
            const double fast = m.at("fast_vcg"), sync = m.at("sync_vcg");
            CHECK(fast <= m.at("batch_vcg_B10") + 1e-9);
            CHECK(m.at("batch_vcg_B10") <= m.at("batch_vcg_B50") + 1e-9);
            CHECK(m.at("batch_vcg_B50") <= sync + 1e-9);
            for (const auto& [name, v] : m)
                if (name.rfind("lia", 0) == 0) CHECK(v <= sync + 1e-9);
        }
    }
    SUBCASE("paired differences line up by instance") {
        const auto d = paired_differences(r, "sync_vcg", metrics::kNaN, "holdback", metrics::kNaN, "sw_ratio_all");
        CHECK(d.size() == 200);
        for (double x : d) CHECK(x == 0.0);
        CHECK(paired_differences(r, "lia", 1.0, "sync_vcg", metrics::kNaN, "sw_ratio_all", "starlink").size() == 100);
    }
    SUBCASE("comparison table lists every variant") {
        const auto table = comparison_table(r);
        for (const auto& v : c.variants()) CHECK(table.find(v.label()) != std::string::npos);
    }
}

TEST_CASE("robustness runs") {
    auto c = SweepConfig::defaults_for(RunKind::Robustness);
    c.instances = 60;
    c.bootstrap_resamples = 0;
    c.measure_compute_time = false;
    c.epsilon_list = {0.0, 2.0, 10.0};
    const auto r = run_robustness(c);
    CHECK(r.checks.ok());
    CHECK(r.checks.clock_bias_compared > 0);

    // epsilon = 0 reproduces the noiseless outcome for every model
    std::map<std::tuple<std::size_t, std::size_t>, std::vector<const Record*>> zero;
    for (const auto& rec : r.records)
        if (rec.epsilon_ms == 0.0) zero[{rec.cell, rec.instance}].push_back(&rec);
    for (const auto& [_, recs] : zero)
        for (const Record* rec : recs) {
            CHECK(rec->winners == recs.front()->winners);
            CHECK(rec->payments == recs.front()->payments);
        }
    for (const auto& rec : r.records) CHECK(rec.lai_sup == 0.0);

    auto no_lia = c;
    no_lia.mechanisms = {"sync_vcg"};
    CHECK_THROWS_AS(run_robustness(no_lia), Error);
}

TEST_CASE("LAI curves file") {
    auto c = SweepConfig::defaults_for(RunKind::Lai);
    c.topologies = {topology::Kind::Starlink200};
    c.instances = 80;
    c.bootstrap_resamples = 100;
    c.measure_compute_time = false;
    c.mechanisms = {"lia", "fast_vcg", "sync_vcg"};
    c.lambda_list = {1.0};
    const auto r = run(RunKind::Lai, c);
    const auto dir = scratch("lai");
    write_lai_curves_csv(r, (dir / "lai_curves.csv").string());
    std::ifstream in(dir / "lai_curves.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "topology,mechanism,lambda,delta_ms,g_mean,g_ci_lo,g_ci_hi");
    std::map<std::string, std::vector<double>> curves;
    while (std::getline(in, line)) {
        const auto cells = split(line);
        REQUIRE(cells.size() == 7);
        curves[cells[1]].push_back(std::stod(cells[4]));
        CHECK(std::stod(cells[5]) <= std::stod(cells[4]) + 1e-12);
    }
    for (double g : curves["lia"]) CHECK(g <= 1e-12);
    for (double g : curves["sync_vcg"]) CHECK(g == 0.0);
    REQUIRE(curves["fast_vcg"].size() >= 3);
    CHECK(curves["fast_vcg"][0] <= curves["fast_vcg"][1]);
    CHECK(curves["fast_vcg"][1] <= curves["fast_vcg"][2]);
    fs::remove_all(dir);
}

TEST_CASE("custom topology file") {
    const auto dir = scratch("custom");
    topology::Topology t;
    t.kind = topology::Kind::Custom;
    for (std::size_t i = 0; i < 4; ++i) t.nodes.push_back({i, {0, 0, 0}, 0});
    topology::add_undirected(t, 0, 1, 2.0);
    topology::add_undirected(t, 1, 2, 3.0);
    topology::add_undirected(t, 0, 3, 9.0);
    topology::save(t, (dir / "t.json").string());
    auto c = small({}, {5}, 20);
    c.topology_file = (dir / "t.json").string();
    const auto r = run_sweep(c);
    CHECK(r.cells.size() == 1);
    CHECK(r.cells[0].topology == "custom");
    CHECK(r.cells[0].emission_window_ms == doctest::Approx(7.0));
    fs::remove_all(dir);
}

TEST_CASE("emission window defaults") {
    topology::DelayMap d{0, {0.0, 2.0, 9.0, INFINITY}};
    CHECK(default_emission_window(topology::Kind::Custom, d) == doctest::Approx(7.0));
    CHECK(default_emission_window(topology::Kind::Starlink200, d) > 0.0);
}
