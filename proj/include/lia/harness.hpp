#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lia/metrics.hpp"

namespace lia::harness {

enum class RunKind { Sweep, Robustness, Large, Lai };
std::string run_kind_name(RunKind kind);

struct SweepConfig {
    std::vector<topology::Kind> topologies{topology::Kind::Starlink200, topology::Kind::Internet100, topology::Kind::Dsn30};
    std::uint64_t topology_seed = 1;
    std::string topology_file;  // when set, replaces `topologies` with one loaded graph
    std::vector<int> n_list{10, 20, 30, 40, 50};
    std::vector<std::string> mechanisms{"lia", "sync_vcg", "fast_vcg", "batch_vcg", "holdback"};
    std::vector<double> lambda_list{0.5, 1.0, 2.0};  // per second
    std::vector<double> batch_list{10.0, 50.0};      // ms
    int k = 2;
    int instances = 1000;
    std::vector<std::string> error_models{"none"};
    std::vector<double> epsilon_list{0.0};  // ms
    double value_lo = 0.0;
    double value_hi = 1000.0;
    double target_feasible = 0.95;
    double decay_rate_per_s = 1.0;
    std::optional<double> emission_window_ms;
    int pilot_instances = auction::kMinPilotInstances;
    std::uint64_t seed = 1;
    int jobs = 0;  // 0 = all cores
    bool lai = true;
    bool measure_compute_time = true;
    bool check_welfare_bound = true;
    int bootstrap_resamples = 10'000;
    double ci_level = 0.95;
    std::string artifact_dir;  // where a failing instance is written

    static SweepConfig defaults_for(RunKind kind);
    std::vector<mechanisms::MechanismConfig> variants() const;
    void validate() const;
};

// Overlays the fields present in `doc` onto `base`; unknown keys are rejected.
SweepConfig config_from_json(const nlohmann::json& doc, SweepConfig base);
nlohmann::json config_to_json(const SweepConfig& config);

struct Record {
    // CSV columns
    std::string topology;
    std::string mechanism;
    int n = 0;
    double lambda_per_s = metrics::kNaN;
    double epsilon_ms = 0.0;
    std::string error_model = "none";
    std::uint64_t seed = 0;
    double sw_ratio_all = 0.0;
    double sw_ratio_feas = metrics::kNaN;
    double reachability = 0.0;
    double rev_ratio = 0.0;
    double clearing_latency_ms = metrics::kNaN;
    double compute_time_ms = metrics::kNaN;
    double lai_sup = metrics::kNaN;
    double lai_marginal_1ms = metrics::kNaN;

    // Bookkeeping kept in memory for summaries and checks.
    std::size_t cell = 0;
    std::size_t instance = 0;
    std::size_t variant = 0;
    std::size_t setting = 0;  // index into the expanded error-model list
    double sw_eff = 0.0;
    double decision_time_ms = 0.0;
    double delta_spread_ms = 0.0;
    double error_spread_ms = 0.0;
    double winner_value = 0.0;
    double opt_feas = 0.0;
    std::vector<int> winners;
    std::vector<double> payments;
    std::vector<double> lai_curve;  // per cell grid point
};

struct CellInfo {
    std::string topology;
    int n = 0;
    std::uint64_t seed = 0;
    double horizon_ms = 0.0;
    double pilot_fraction = 0.0;
    bool horizon_target_met = true;
    double emission_window_ms = 0.0;
    std::vector<double> lai_grid;
    double feasible_fraction = 0.0;  // over the cell's instances
    double slack_spread_median = 0.0;
    double slack_spread_p95 = 0.0;
};

struct Checks {
    std::size_t welfare_bound_checked = 0;
    std::size_t welfare_bound_violations = 0;
    std::size_t sync_holdback_compared = 0;
    std::size_t sync_holdback_mismatches = 0;
    std::size_t clock_bias_compared = 0;
    std::size_t clock_bias_mismatches = 0;

    bool ok() const { return welfare_bound_violations == 0 && sync_holdback_mismatches == 0 && clock_bias_mismatches == 0; }
};

struct RunResult {
    RunKind kind = RunKind::Sweep;
    SweepConfig config;
    std::vector<CellInfo> cells;
    std::vector<Record> records;  // ordered by (cell, instance, noise setting, mechanism)
    Checks checks;
};

// Emission window used when the config does not pin one (ms).
double default_emission_window(topology::Kind kind, const topology::DelayMap& delays);

struct AuctionInstance {
    auction::ClearingHorizon horizon;
    std::vector<auction::Bid> bids;
    std::uint64_t seed = 0;
};

AuctionInstance gen_instance(const topology::Topology& topo, const topology::DelayMap& delays, int n, double horizon_ms,
                             double emission_window, double value_lo, double value_hi, std::uint64_t seed);

// Runs every configured cell. A welfare-bound violation throws
// lia::Error(Assertion) after writing the instance to artifact_dir.
RunResult run(RunKind kind, const SweepConfig& config);
RunResult run_sweep(const SweepConfig& config);
RunResult run_robustness(const SweepConfig& config);
RunResult run_large(const SweepConfig& config);

// Paired difference A - B of `metric` over instances both mechanisms share.
std::vector<double> paired_differences(const RunResult& result, const std::string& mechanism_a, double lambda_a,
                                       const std::string& mechanism_b, double lambda_b, const std::string& metric,
                                       const std::string& topology = "", int n = 0);

double metric_value(const Record& r, const std::string& metric);
const std::vector<std::string>& csv_columns();

void write_records_csv(const RunResult& result, const std::string& path);
void write_lai_curves_csv(const RunResult& result, const std::string& path);
nlohmann::json summarize(const RunResult& result);
void write_summary_json(const RunResult& result, const std::string& path);
// Human-readable mechanism comparison at the largest n of each topology.
std::string comparison_table(const RunResult& result);

}  // namespace lia::harness
