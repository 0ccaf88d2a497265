#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lia/harness.hpp"

// Independent reference implementations and the self-check suites built on them.
namespace lia::verify {

// ---- Oracles ----------------------------------------------------------------

// Shortest delay u -> v by enumerating every simple path. Exponential; meant
// for graphs of at most ~10 nodes.
std::vector<std::vector<double>> enumerate_all_pairs(const topology::Topology& topo);
std::vector<std::vector<double>> floyd_warshall(const topology::Topology& topo);

// Random directed graph with `nodes` nodes, edge probability p and delays in [lo, hi].
topology::Topology random_graph(Rng& rng, std::size_t nodes, double p, double lo, double hi);

// Profile for hand-built instances: arrival = horizon - slack, no noise.
auction::SlackProfile profile_from_slacks(const std::vector<double>& slacks, double horizon_ms = 0.0);

// Smallest report at which bid i still wins lia_single, found by bisection
// on the allocation rule alone.
double bisection_critical_value(std::size_t i, const std::vector<auction::Bid>& bids, const auction::SlackProfile& profile,
                                const auction::DiscountParams& params, double rel_tol = 1e-13);

// Highest feasible report wins (lowest id on ties) and pays the runner-up report.
mechanisms::Outcome second_price_oracle(const std::vector<auction::Bid>& bids, const auction::SlackProfile& profile);

// ---- Checks -----------------------------------------------------------------

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct Report {
    std::vector<Check> checks;

    void add(std::string name, bool passed, std::string detail);
    std::size_t failures() const;
    bool ok() const { return failures() == 0; }
    std::string text() const;
    nlohmann::json to_json() const;
};

struct SuiteResult {
    std::size_t trials = 0;
    std::size_t violations = 0;
    std::string first_violation;

    bool ok() const { return violations == 0; }
};

// Random (instance, bidder, misreport) triples under lia_single and
// lia_k_items with fixed slacks: truthful utility must dominate and
// truthful winners must never pay above value.
SuiteResult truthfulness_suite(int triples, std::uint64_t seed);
SuiteResult shortest_path_suite(int graphs, std::size_t max_nodes, std::uint64_t seed);
SuiteResult critical_value_suite(int instances, std::uint64_t seed);
SuiteResult k1_equivalence_suite(int instances, std::uint64_t seed);
SuiteResult endogenous_slack_suite(int draws, std::uint64_t seed);
// Shifting every slack estimate by one constant leaves winners and payments unchanged.
SuiteResult common_shift_suite(int instances, std::uint64_t seed);

struct GoldenOptions {
    int instances = 1000;        // per simulated cell
    int large_instances = 200;   // n = 1000 cells
    int spread_instances = 10'000;
    int jobs = 0;
    std::uint64_t seed = 1;
};

// Every documented worked example and calibration band, at the per-operation
// tolerances. Simulation-backed checks use `options`.
Report golden_checks(const GoldenOptions& options = {});

}  // namespace lia::verify
