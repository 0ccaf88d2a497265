#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lia/auction.hpp"

namespace lia::mechanisms {

using auction::Bid;
using auction::ClearingHorizon;
using auction::DiscountParams;
using auction::SlackProfile;

enum class Kind { Lia, SyncVcg, FastVcg, BatchVcg, HoldBack, LiaK };

std::string kind_name(Kind kind);
Kind parse_kind(std::string_view name);

struct MechanismConfig {
    Kind kind = Kind::Lia;
    double lambda_per_s = 1.0;  // Lia, LiaK
    double batch_ms = 50.0;     // BatchVcg
    int k = 1;                  // LiaK

    bool uses_lambda() const { return kind == Kind::Lia || kind == Kind::LiaK; }
    // Distinguishes parameterised variants that share a λ column, e.g. batch_vcg_B10.
    std::string label() const;
    void validate() const;
};

struct Outcome {
    std::string mechanism;
    std::vector<int> winners;      // bidder ids, in allocation order
    std::vector<double> payments;  // aligned with winners
    double decision_time = 0.0;    // ms
    double compute_time_ms = 0.0;

    bool no_feasible() const { return winners.empty(); }
    double payment_of(int bidder) const;
    bool wins(int bidder) const;
};

// Arrivals closer than this are treated as simultaneous by Fast-VCG.
inline constexpr double kArrivalTieMs = 1e-9;

Outcome lia_single(const std::vector<Bid>& bids, const SlackProfile& profile, const DiscountParams& params);
Outcome lia_k_items(const std::vector<Bid>& bids, const SlackProfile& profile, const DiscountParams& params, int k);
// Throws lia::Error(Input) when bid index i is infeasible.
double critical_value(std::size_t i, const std::vector<Bid>& bids, const SlackProfile& profile, const DiscountParams& params);
Outcome sync_vcg(const std::vector<Bid>& bids, const SlackProfile& profile, const ClearingHorizon& horizon);
Outcome fast_vcg(const std::vector<Bid>& bids, const SlackProfile& profile);
Outcome batch_vcg(const std::vector<Bid>& bids, const SlackProfile& profile, const ClearingHorizon& horizon, double batch_ms);
Outcome holdback(const std::vector<Bid>& bids, const SlackProfile& profile, const ClearingHorizon& horizon);

// Dispatches on config. compute_time_ms is filled when `timed` is set.
Outcome run(const MechanismConfig& config, const std::vector<Bid>& bids, const SlackProfile& profile,
            const ClearingHorizon& horizon, bool timed = true);

double utility(int bidder, const Outcome& outcome, double true_value);

struct EndogenousSlackReport {
    double competitor_value = 0.0;
    double utility_at_delta = 0.0;
    double utility_at_delta_prime = 0.0;
};

// Two-bidder construction showing that shrinking one's own slack from δ to δ'
// turns a loss into a win when the competitor sits between the two discounted bids.
EndogenousSlackReport endogenous_slack_demo(double theta, double delta, double delta_prime, const DiscountParams& params);

nlohmann::json outcome_to_json(const Outcome& outcome);

}  // namespace lia::mechanisms
