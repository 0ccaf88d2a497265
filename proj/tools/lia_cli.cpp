// Command-line front end. Everything goes through the C interface in lia.h.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lia/lia.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kAssertion = 3 };

int exit_for(lia_status s) {
    switch (s) {
        case LIA_OK: return kOk;
        case LIA_ERR_CONFIG: return kConfig;
        case LIA_ERR_ASSERTION:
        case LIA_ERR_INTERNAL: return kAssertion;
        default: return kUsage;
    }
}

int report(lia_status s, const std::string& context) {
    if (s != LIA_OK) std::cerr << "lia: " << context << ": " << lia_last_error() << '\n';
    return exit_for(s);
}

std::string take(char* s) {
    std::string out = s ? s : "";
    lia_string_free(s);
    return out;
}

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<int> instances;
    bool quiet = false;
    bool no_timing = false;
};

int run_experiment(lia_run_kind kind, const RunOptions& opt, bool with_curves) {
    json config = json::object();
    if (!opt.config_path.empty()) {
        const auto text = read_file(opt.config_path);
        if (!text) {
            std::cerr << "lia: cannot read config file " << opt.config_path << '\n';
            return kConfig;
        }
        try {
            config = json::parse(*text);
        } catch (const json::parse_error& e) {
            std::cerr << "lia: " << opt.config_path << ": " << e.what() << '\n';
            return kConfig;
        }
        if (!config.is_object()) {
            std::cerr << "lia: " << opt.config_path << ": top level must be a JSON object\n";
            return kConfig;
        }
    }
    if (kind == LIA_RUN_LAI && config.contains("mechanisms") && config["mechanisms"].is_array() && config["mechanisms"].empty()) {
        std::cerr << "lia: lai needs at least one mechanism\n";
        return kUsage;
    }
    if (opt.seed) config["seed"] = *opt.seed;
    if (opt.jobs) config["jobs"] = *opt.jobs;
    if (opt.instances) config["instances"] = *opt.instances;
    if (opt.no_timing) config["measure_compute_time"] = false;

    std::string out_dir = opt.out_dir;
    if (const char* env = std::getenv("LIA_OUT"); env && *env) out_dir = env;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
        std::cerr << "lia: cannot create output directory " << out_dir << '\n';
        return kUsage;
    }
    config["artifact_dir"] = out_dir;

    lia_run* run = nullptr;
    const lia_status s = lia_run_execute(kind, config.dump().c_str(), &run);
    if (s != LIA_OK) return report(s, opt.config_path.empty() ? "run" : opt.config_path);

    const fs::path dir(out_dir);
    int rc = kOk;
    if (lia_status w = lia_run_write_records(run, (dir / "records.csv").string().c_str()); w != LIA_OK) rc = report(w, "records.csv");
    if (rc == kOk)
        if (lia_status w = lia_run_write_summary(run, (dir / "summary.json").string().c_str()); w != LIA_OK) rc = report(w, "summary.json");
    if (rc == kOk && with_curves)
        if (lia_status w = lia_run_write_lai_curves(run, (dir / "lai_curves.csv").string().c_str()); w != LIA_OK) rc = report(w, "lai_curves.csv");

    if (rc == kOk && !opt.quiet) {
        char* table = nullptr;
        if (lia_run_table(run, &table) == LIA_OK) std::cout << take(table);
        std::cout << "wrote " << (dir / "records.csv").string() << ", " << (dir / "summary.json").string();
        if (with_curves) std::cout << ", " << (dir / "lai_curves.csv").string();
        std::cout << '\n';
    }
    int checks_ok = 1;
    lia_run_checks_ok(run, &checks_ok);
    if (rc == kOk && !checks_ok) {
        std::cerr << "lia: inline checks failed; see the \"checks\" block of summary.json\n";
        rc = kAssertion;
    }
    lia_run_free(run);
    return rc;
}

void add_run_flags(CLI::App* cmd, RunOptions& opt) {
    cmd->add_option("--config", opt.config_path, "JSON config; its fields override the defaults")->check(CLI::ExistingFile);
    cmd->add_option("--out", opt.out_dir, "output directory (LIA_OUT overrides)");
    cmd->add_option("--seed", opt.seed, "master seed");
    cmd->add_option("--jobs", opt.jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--instances", opt.instances, "instances per cell")->check(CLI::PositiveNumber);
    cmd->add_flag("--quiet", opt.quiet, "suppress the comparison table");
    cmd->add_flag("--no-timing", opt.no_timing, "leave compute_time_ms empty so records are byte-reproducible");
}

int topology_gen(const std::string& kind, std::uint64_t seed, const std::string& out, bool quiet) {
    lia_topology* t = nullptr;
    if (lia_status s = lia_topology_generate(kind.c_str(), seed, &t); s != LIA_OK) return report(s, "topology gen");
    int rc = kOk;
    if (!out.empty()) rc = report(lia_topology_save(t, out.c_str()), out);
    if (rc == kOk && !quiet) {
        char* info = nullptr;
        if (lia_topology_info(t, &info) == LIA_OK) std::cout << take(info) << '\n';
    }
    lia_topology_free(t);
    return rc;
}

int topology_inspect(const std::string& path) {
    lia_topology* t = nullptr;
    if (lia_status s = lia_topology_load(path.c_str(), &t); s != LIA_OK) return report(s, path);
    char* info = nullptr;
    const lia_status s = lia_topology_info(t, &info);
    if (s == LIA_OK) std::cout << take(info) << '\n';
    lia_topology_free(t);
    return report(s, path);
}

int clear(const std::string& topo_path, const std::string& instance_path, const std::string& mechanism) {
    const auto instance = read_file(instance_path);
    if (!instance) {
        std::cerr << "lia: cannot read " << instance_path << '\n';
        return kUsage;
    }
    lia_topology* t = nullptr;
    if (lia_status s = lia_topology_load(topo_path.c_str(), &t); s != LIA_OK) return report(s, topo_path);
    std::string mech = mechanism;
    if (mech.empty() || mech.front() != '{') mech = json{{"mechanism", mechanism}}.dump();
    char* outcome = nullptr;
    const lia_status s = lia_clear_json(t, instance->c_str(), mech.c_str(), &outcome);
    if (s == LIA_OK) std::cout << take(outcome) << '\n';
    lia_topology_free(t);
    return report(s, "clear");
}

int verify(bool quick, std::optional<int> jobs) {
    json opts = json::object();
    if (quick) opts = {{"instances", 200}, {"large_instances", 50}, {"spread_instances", 2000}};
    if (jobs) opts["jobs"] = *jobs;
    char* text = nullptr;
    size_t failures = 0;
    if (lia_status s = lia_verify(opts.dump().c_str(), &text, &failures); s != LIA_OK) return report(s, "verify");
    std::cout << take(text);
    return failures == 0 ? kOk : kAssertion;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Slack-discounted auction simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", lia_version());

    auto* topo = app.add_subcommand("topology", "generate or inspect network topologies");
    topo->require_subcommand(1);
    std::string kind = "starlink", topo_out, inspect_path;
    std::uint64_t topo_seed = 1;
    bool topo_quiet = false;
    auto* gen = topo->add_subcommand("gen", "generate a topology");
    gen->add_option("--kind", kind, "starlink | internet | dsn")->check(CLI::IsMember({"starlink", "internet", "dsn"}));
    gen->add_option("--seed", topo_seed, "generator seed");
    gen->add_option("--out", topo_out, "write the topology JSON here");
    gen->add_flag("--quiet", topo_quiet, "do not print the summary");
    auto* inspect = topo->add_subcommand("inspect", "summarise a topology file");
    inspect->add_option("file", inspect_path, "topology JSON")->required()->check(CLI::ExistingFile);

    RunOptions sweep_opt, robust_opt, large_opt, lai_opt;
    auto* sweep = app.add_subcommand("sweep", "mechanism comparison across topologies and market sizes");
    add_run_flags(sweep, sweep_opt);
    auto* robust = app.add_subcommand("robustness", "LIA under slack-estimation noise");
    add_run_flags(robust, robust_opt);
    auto* large = app.add_subcommand("large", "large-market runs (n = 1000)");
    add_run_flags(large, large_opt);
    auto* lai = app.add_subcommand("lai", "latency-arbitrage curves");
    add_run_flags(lai, lai_opt);

    bool quick = false;
    std::optional<int> verify_jobs;
    auto* ver = app.add_subcommand("verify", "run the built-in golden checks");
    ver->add_flag("--quick", quick, "smaller simulated samples");
    ver->add_option("--jobs", verify_jobs, "worker threads")->check(CLI::NonNegativeNumber);

    std::string clear_topo, clear_instance, clear_mech = "lia";
    auto* clr = app.add_subcommand("clear", "clear one auction instance");
    clr->add_option("--topology", clear_topo, "topology JSON")->required()->check(CLI::ExistingFile);
    clr->add_option("--instance", clear_instance, "instance JSON")->required()->check(CLI::ExistingFile);
    clr->add_option("--mechanism", clear_mech, "mechanism name or JSON object");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (*topo) {
        if (*gen) return topology_gen(kind, topo_seed, topo_out, topo_quiet);
        return topology_inspect(inspect_path);
    }
    if (*sweep) return run_experiment(LIA_RUN_SWEEP, sweep_opt, false);
    if (*robust) return run_experiment(LIA_RUN_ROBUSTNESS, robust_opt, false);
    if (*large) return run_experiment(LIA_RUN_LARGE, large_opt, false);
    if (*lai) return run_experiment(LIA_RUN_LAI, lai_opt, true);
    if (*ver) return verify(quick, verify_jobs);
    if (*clr) return clear(clear_topo, clear_instance, clear_mech);
    return kUsage;
}
