#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "lia/mechanisms.hpp"

namespace lia::metrics {

using auction::Bid;
using auction::SlackProfile;
using mechanisms::Outcome;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct WelfareRatios {
    double sw_all = 0.0;
    double sw_feas = kNaN;  // NaN when no bid is feasible
    double reachability = 0.0;
    double welfare = 0.0;  // sum of winners' true values
    double opt_all = 0.0;
    double opt_feas = 0.0;
};

WelfareRatios welfare_ratios(const Outcome& outcome, const std::vector<Bid>& bids, const SlackProfile& profile);
// Revenue over OPT_all; 0 when every value is 0.
double revenue_ratio(const Outcome& outcome, const std::vector<Bid>& bids);
// NaN when the outcome allocated nothing.
double clearing_latency(const Outcome& outcome, const std::vector<Bid>& bids);
double effective_welfare(double winner_true_value, double t_clear_ms, double rate_per_ms);

// ---- Latency Arbitrage Index --------------------------------------------------

// Reduction grid in ms: the base ladder stretched to the topology's delay
// scale, always containing 1 ms.
std::vector<double> lai_grid(const topology::DelayMap& delays);

struct CounterfactualGains {
    std::vector<double> gain;  // per grid point, NaN where Δ exceeds the agent's delay
    double at_full_reduction = kNaN;  // Δ equal to the agent's whole delay
    double sup = 0.0;                 // max(0, every finite gain above)
    double at_one_ms = kNaN;
};

// Utility change for bid `agent` when its effective delay shrinks by Δ: its
// arrival moves earlier and its slack (true and estimated) grows by Δ, while
// every other bid and the horizon stay fixed. Values are held at the truth.
CounterfactualGains lai_gains(const mechanisms::MechanismConfig& config, const std::vector<Bid>& bids,
                              const SlackProfile& profile, const auction::ClearingHorizon& horizon, std::size_t agent,
                              double agent_delay, const std::vector<double>& grid);

// max(0, max finite g): the supremum over (0, d] sits at the Δ→0 limit when
// every sampled gain is negative.
double lai_index(const std::vector<double>& curve);

// ---- Aggregation --------------------------------------------------------------

class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

double mean(const std::vector<double>& xs);
// Linear interpolation between order statistics; xs need not be sorted.
double quantile(std::vector<double> xs, double q);

struct BootstrapCI {
    double lo = 0.0;
    double hi = 0.0;
    double mean = 0.0;
};

// Percentile bootstrap of the mean. Deterministic for a given seed.
BootstrapCI bootstrap_ci(const std::vector<double>& samples, double level, int resamples, std::uint64_t seed);

struct Summary {
    std::size_t count = 0;
    double mean = kNaN;
    double median = kNaN;
    double p10 = kNaN;
    double p90 = kNaN;
    double ci_lo = kNaN;
    double ci_hi = kNaN;
};

// NaN samples are dropped before summarising. resamples <= 0 skips the CI.
Summary summarize(const std::vector<double>& samples, double level, int resamples, std::uint64_t seed);

}  // namespace lia::metrics
