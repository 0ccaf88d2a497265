// Acceptance run: one PASS/FAIL line per criterion, sub-checks indented below.
// Exit status is nonzero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "lia/error.hpp"
#include "lia/harness.hpp"
#include "lia/mechanisms.hpp"
#include "lia/metrics.hpp"
#include "lia/verify.hpp"

namespace fs = std::filesystem;
using namespace lia;
using harness::Record;
using harness::RunResult;
using harness::SweepConfig;

namespace {

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

struct Criterion {
    std::string id;
    std::string title;
    std::vector<std::tuple<bool, std::string, std::string>> subs;

    void check(bool ok, std::string name, std::string detail) { subs.emplace_back(ok, std::move(name), std::move(detail)); }
    void band(const std::string& name, double value, double target, double tol) {
        check(std::abs(value - target) <= tol, name, num(value) + " (target " + num(target) + " +/- " + num(tol) + ")");
    }
    bool ok() const {
        if (subs.empty()) return false;
        for (const auto& s : subs)
            if (!std::get<0>(s)) return false;
        return true;
    }
};

std::vector<Criterion> g_results;

void report(Criterion c, double seconds) {
    std::printf("%s %s: %s  (%.1f s)\n", c.ok() ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(), seconds);
    for (const auto& [ok, name, detail] : c.subs) std::printf("    [%s] %s: %s\n", ok ? "ok" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    g_results.push_back(std::move(c));
}

template <class F>
void criterion(const std::string& id, const std::string& title, F&& body) {
    Criterion c{id, title, {}};
    const auto start = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.check(false, "unexpected error", e.what());
    }
    report(std::move(c), std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

SweepConfig base(harness::RunKind kind) {
    auto c = SweepConfig::defaults_for(kind);
    c.bootstrap_resamples = 0;
    c.measure_compute_time = false;
    c.artifact_dir = (fs::temp_directory_path() / "lia_acceptance_artifacts").string();
    return c;
}

bool is_lia(const Record& r) { return r.mechanism == "lia"; }

double mean_of(const RunResult& r, const std::string& topo, int n, const std::string& mechanism, double lambda, const std::string& metric) {
    std::vector<double> xs;
    for (const auto& rec : r.records) {
        if (!topo.empty() && rec.topology != topo) continue;
        if (n && rec.n != n) continue;
        if (rec.mechanism != mechanism) continue;
        if (!std::isnan(lambda) && rec.lambda_per_s != lambda) continue;
        const double v = harness::metric_value(rec, metric);
        if (!std::isnan(v)) xs.push_back(v);
    }
    return metrics::mean(xs);
}

// Independent recomputation of the LIA welfare guarantee from stored records.
std::pair<std::size_t, std::size_t> recheck_bound(const RunResult& r) {
    std::size_t checked = 0, bad = 0;
    for (const auto& rec : r.records) {
        if (!is_lia(rec) || rec.winners.empty()) continue;
        const double lam = rec.lambda_per_s / 1000.0;
        const double bound = std::exp(-lam * (rec.delta_spread_ms + rec.error_spread_ms)) * rec.opt_feas;
        ++checked;
        if (rec.winner_value < bound * (1.0 - 1e-12)) ++bad;
    }
    return {checked, bad};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LIA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

int main() {
    const auction::DiscountParams lam05{0.05};

    criterion("AC1", "worked examples", [&](Criterion& c) {
        const std::vector<auction::Bid> two{{1, 100, 100, 0, 0}, {2, 120, 120, 0, 0}};
        const auto o = mechanisms::lia_single(two, verify::profile_from_slacks({10.0, 0.0}), lam05);
        c.check(o.winners == std::vector<int>{2}, "timing-rent winner", o.winners.empty() ? "none" : std::to_string(o.winners[0]));
        c.band("timing-rent payment", o.payments.empty() ? NAN : o.payments[0], 60.6, 0.05);

        const std::vector<auction::Bid> four{{1, 100, 100, 0, 0}, {2, 120, 120, 0, 0}, {3, 90, 90, 0, 0}, {4, 80, 80, 0, 0}};
        const auto k = mechanisms::lia_k_items(four, verify::profile_from_slacks({10.0, 30.0, 5.0, 2.0}), lam05, 2);
        c.check(k.winners.size() == 2 && k.wins(3) && k.wins(4), "K-items winners", "expected {3, 4}");
        c.band("K-items payment of bidder 3", k.payment_of(3), 77.88, 0.01);
        c.band("K-items payment of bidder 4", k.payment_of(4), 67.03, 0.01);

        const auto per_s = auction::DiscountParams::per_second(1.0);
        c.band("bound factor at 50.98 ms", auction::discount(1.0, 50.98, per_s), 0.950, 0.001);
        c.band("bound factor at 13.15 ms", auction::discount(1.0, 13.15, per_s), 0.987, 0.001);
        c.band("noisy bound factor at 20 ms + 2 x 2 ms", auction::discount(1.0, 20.0 + 2.0 * 2.0, per_s), 0.976, 0.001);
    });

    criterion("AC2", "truthfulness and individual rationality", [&](Criterion& c) {
        const auto s = verify::truthfulness_suite(10'000, 2024);
        c.check(s.ok() && s.trials == 10'000, "10,000 misreport triples",
                std::to_string(s.violations) + " violations in " + std::to_string(s.trials) + (s.ok() ? "" : "; " + s.first_violation));
    });

    // One desk-scale sweep serves criteria 3 through 6.
    RunResult sweep;
    std::string sweep_error;
    const auto sweep_start = std::chrono::steady_clock::now();
    try {
        sweep = harness::run_sweep(base(harness::RunKind::Sweep));
    } catch (const std::exception& e) {
        sweep_error = e.what();
    }
    const double sweep_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - sweep_start).count();
    std::printf("(desk-scale sweep: %zu records in %.1f s)\n", sweep.records.size(), sweep_secs);
    auto need_sweep = [&] {
        if (!sweep_error.empty()) throw Error(ErrorKind::Assertion, "sweep failed: " + sweep_error);
    };

    criterion("AC3", "welfare bound over the full sweep and under noise", [&](Criterion& c) {
        need_sweep();
        const auto& ch = sweep.checks;
        c.check(ch.welfare_bound_checked >= 45'000 && ch.welfare_bound_violations == 0, "inline check, noiseless sweep",
                std::to_string(ch.welfare_bound_violations) + " violations in " + std::to_string(ch.welfare_bound_checked));
        const auto [checked, bad] = recheck_bound(sweep);
        c.check(checked >= 45'000 && bad == 0, "recomputed from records", std::to_string(bad) + " violations in " + std::to_string(checked));

        auto cfg = base(harness::RunKind::Robustness);
        cfg.topologies = {topology::Kind::Starlink200, topology::Kind::Internet100, topology::Kind::Dsn30};
        cfg.n_list = {10, 50};
        cfg.instances = 300;
        cfg.epsilon_list = {2.0, 10.0};
        cfg.lambda_list = {0.5, 1.0, 2.0};
        cfg.lai = false;
        const auto noisy = harness::run_robustness(cfg);
        const auto [nchecked, nbad] = recheck_bound(noisy);
        c.check(noisy.checks.welfare_bound_violations == 0 && nbad == 0 && nchecked > 0, "noisy bound with error spread",
                std::to_string(nbad) + " violations in " + std::to_string(nchecked));
    });

    criterion("AC4", "welfare reproduction", [&](Criterion& c) {
        need_sweep();
        c.band("starlink n=50", mean_of(sweep, "starlink", 50, "lia", 1.0, "sw_ratio_all"), 0.997, 0.005);
        c.band("internet n=50", mean_of(sweep, "internet", 50, "lia", 1.0, "sw_ratio_all"), 0.9988, 0.004);
        c.band("dsn n=10", mean_of(sweep, "dsn", 10, "lia", 1.0, "sw_ratio_all"), 0.769, 0.05);
        c.band("dsn n=50", mean_of(sweep, "dsn", 50, "lia", 1.0, "sw_ratio_all"), 0.946, 0.03);

        auto cfg = base(harness::RunKind::Large);
        cfg.instances = 200;
        cfg.mechanisms = {"lia"};
        cfg.lambda_list = {1.0};
        cfg.lai = false;
        const auto large = harness::run_large(cfg);
        c.band("starlink n=1000", mean_of(large, "starlink", 1000, "lia", 1.0, "sw_ratio_all"), 0.998, 0.004);
        c.band("internet n=1000", mean_of(large, "internet", 1000, "lia", 1.0, "sw_ratio_all"), 0.9992, 0.003);
        c.band("dsn n=1000", mean_of(large, "dsn", 1000, "lia", 1.0, "sw_ratio_all"), 0.996, 0.005);
    });

    criterion("AC5", "latency arbitrage", [&](Criterion& c) {
        need_sweep();
        for (const std::string topo : {"starlink", "internet"}) {
            for (double lam : {0.5, 1.0, 2.0}) {
                double worst = 0.0;
                std::size_t seen = 0;
                for (const auto& r : sweep.records)
                    if (is_lia(r) && r.topology == topo && r.n == 50 && r.lambda_per_s == lam && !std::isnan(r.lai_sup)) {
                        worst = std::max(worst, r.lai_sup);
                        ++seen;
                    }
                c.check(seen > 0 && worst == 0.0, topo + " LIA LAI, lambda " + num(lam), "max gain " + num(worst) + " over " + std::to_string(seen));
            }
        }
        const double fast = mean_of(sweep, "starlink", 50, "fast_vcg", NAN, "lai_sup");
        c.band("starlink n=50 fast-vcg LAI", fast, 314.95, 0.15 * 314.95);
        double sync_max = 0.0;
        for (const auto& r : sweep.records)
            if (r.mechanism == "sync_vcg" && !std::isnan(r.lai_sup)) sync_max = std::max(sync_max, r.lai_sup);
        for (const std::string topo : {"starlink", "internet", "dsn"}) {
            const double f = mean_of(sweep, topo, 50, "fast_vcg", NAN, "lai_sup");
            c.check(f > 100.0 * sync_max && f > 0.0, topo + " fast-vcg LAI vs sync residual",
                    "fast " + num(f) + ", largest sync residual " + num(sync_max));
        }
    });

    criterion("AC6", "latency frontier", [&](Criterion& c) {
        need_sweep();
        // (cell, instance) -> mechanism label -> latency
        std::map<std::pair<std::size_t, std::size_t>, std::map<std::string, double>> lat;
        for (const auto& r : sweep.records) {
            if (std::isnan(r.clearing_latency_ms)) continue;
            std::string key = r.mechanism;
            if (r.mechanism == "lia") key += "@" + num(r.lambda_per_s);
            lat[{r.cell, r.instance}][key] = r.clearing_latency_ms;
        }
        std::size_t compared = 0, bad = 0;
        const double tol = 1e-9;
        for (const auto& [k, m] : lat) {
            auto get = [&](const std::string& name) {
                const auto it = m.find(name);
                return it == m.end() ? NAN : it->second;
            };
            const double fast = get("fast_vcg"), sync = get("sync_vcg");
            if (std::isnan(fast) || std::isnan(sync)) continue;
            ++compared;
            for (const auto& [name, v] : m) {
                if (name.rfind("batch_vcg", 0) == 0 && !(fast <= v + tol && v <= sync + tol)) ++bad;
                if (name.rfind("lia@", 0) == 0 && !(v <= sync + tol)) ++bad;
            }
        }
        c.check(compared > 10'000 && bad == 0, "per-instance ordering", std::to_string(bad) + " violations over " + std::to_string(compared) + " instances");
        c.band("starlink n=50 batch B=50 welfare", mean_of(sweep, "starlink", 50, "batch_vcg_B50", NAN, "sw_ratio_all"), 0.994, 0.01);
        c.band("starlink n=50 batch B=50 latency", mean_of(sweep, "starlink", 50, "batch_vcg_B50", NAN, "clearing_latency_ms"), 66.2, 3.0);
    });

    criterion("AC7", "robustness to slack-estimation error", [&](Criterion& c) {
        auto cfg = base(harness::RunKind::Robustness);
        cfg.topologies = {topology::Kind::Starlink200, topology::Kind::Internet100};
        cfg.n_list = {50};
        cfg.lambda_list = {1.0};
        cfg.mechanisms = {"lia"};
        cfg.error_models = {"iid", "clock_bias", "distance", "subnet"};
        cfg.epsilon_list.clear();
        for (int e = 0; e <= 10; ++e) cfg.epsilon_list.push_back(e);
        cfg.lai = true;
        const auto r = harness::run_robustness(cfg);
        std::map<std::pair<std::string, double>, std::vector<double>> sw;
        double worst_lai = 0.0;
        for (const auto& rec : r.records) {
            if (!is_lia(rec)) continue;
            sw[{rec.error_model, rec.epsilon_ms}].push_back(rec.sw_ratio_all);
            if (!std::isnan(rec.lai_sup)) worst_lai = std::max(worst_lai, rec.lai_sup);
        }
        double lowest = 1.0;
        std::string where;
        for (const auto& [k, xs] : sw) {
            const double m = metrics::mean(xs);
            if (m < lowest) {
                lowest = m;
                where = k.first + " eps=" + num(k.second);
            }
        }
        c.check(sw.size() == 44 && lowest >= 0.99, "lowest mean welfare across 4 models x 11 eps", num(lowest) + " at " + where);
        c.check(worst_lai == 0.0, "LIA LAI under noise", "max gain " + num(worst_lai));
        c.check(r.checks.clock_bias_compared > 0 && r.checks.clock_bias_mismatches == 0, "clock bias matches noiseless outcome",
                std::to_string(r.checks.clock_bias_mismatches) + " mismatches in " + std::to_string(r.checks.clock_bias_compared));
    });

    criterion("AC8", "oracle equivalence", [&](Criterion& c) {
        auto line = [&](const std::string& name, const verify::SuiteResult& s) {
            c.check(s.ok(), name, std::to_string(s.violations) + " violations in " + std::to_string(s.trials) + (s.ok() ? "" : "; " + s.first_violation));
        };
        line("shortest paths vs enumeration, 500 graphs <= 8 nodes", verify::shortest_path_suite(500, 8, 81));
        line("critical value vs bisection, 1,000 instances", verify::critical_value_suite(1000, 82));
        line("K=1 vs single item, 1,000 instances", verify::k1_equivalence_suite(1000, 83));
    });

    criterion("AC9", "winner-determination time", [&](Criterion& c) {
        const std::vector<int> ns{10, 20, 50, 100, 200, 500, 1000};
        std::vector<double> lx, ly;
        double at_1000 = NAN;
        for (int n : ns) {
            auto cfg = base(harness::RunKind::Large);
            cfg.topologies = {topology::Kind::Starlink200};
            cfg.n_list = {n};
            cfg.instances = 200;
            cfg.mechanisms = {"lia"};
            cfg.lambda_list = {1.0};
            cfg.lai = false;
            cfg.check_welfare_bound = false;
            cfg.measure_compute_time = true;
            cfg.jobs = 1;
            const auto r = harness::run_large(cfg);
            std::vector<double> t;
            for (const auto& rec : r.records) t.push_back(rec.compute_time_ms);
            const double med = metrics::quantile(t, 0.5);
            lx.push_back(std::log(n));
            ly.push_back(std::log(std::max(med, 1e-9)));
            if (n == 1000) at_1000 = metrics::mean(t);
        }
        const double mx = metrics::mean(lx), my = metrics::mean(ly);
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        const double slope = sxy / sxx;
        c.check(at_1000 <= 1.0, "mean time at n=1000", num(at_1000) + " ms (limit 1 ms)");
        c.check(slope <= 1.1, "log-log slope of median time over n=10..1000", num(slope) + " (limit 1.1)");
    });

    criterion("AC10", "determinism of records.csv", [&](Criterion& c) {
        const auto dir = fs::temp_directory_path() / "lia_acceptance_cli";
        fs::remove_all(dir);
        fs::create_directories(dir);
        const auto cfg = dir / "cfg.json";
        std::ofstream(cfg) << R"({"n_list":[10,50],"instances":100,"bootstrap_resamples":100})";
        const std::string common = "sweep --quiet --no-timing --config " + cfg.string() + " --out ";
        const int a = run_cli(common + (dir / "a").string() + " --jobs 1");
        const int b = run_cli(common + (dir / "b").string() + " --jobs 2");
        const int d = run_cli(common + (dir / "c").string() + " --jobs 1");
        c.check(a == 0 && b == 0 && d == 0, "three CLI runs", "exit codes " + std::to_string(a) + ", " + std::to_string(b) + ", " + std::to_string(d));
        const auto ra = slurp(dir / "a" / "records.csv");
        c.check(!ra.empty() && ra == slurp(dir / "b" / "records.csv"), "--jobs 1 vs --jobs 2", std::to_string(ra.size()) + " bytes");
        c.check(!ra.empty() && ra == slurp(dir / "c" / "records.csv"), "repeat run", std::to_string(ra.size()) + " bytes");
        c.check(slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json"), "summary.json across jobs", "");
        fs::remove_all(dir);
    });

    std::size_t failed = 0;
    for (const auto& c : g_results) failed += c.ok() ? 0 : 1;
    std::printf("%zu of %zu criteria passed\n", g_results.size() - failed, g_results.size());
    return failed == 0 ? 0 : 1;
}
