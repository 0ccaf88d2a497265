#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lia/rng.hpp"
#include "lia/topology.hpp"

namespace lia::auction {

using topology::NodeId;

struct Bid {
    int bidder = 0;
    double true_value = 0.0;
    double reported_value = 0.0;
    NodeId node = 0;
    double emission = 0.0;  // ms
};

struct ClearingHorizon {
    NodeId node = 0;
    double time = 0.0;  // ms
};

struct DiscountParams {
    double lambda = 0.0;  // per ms

    static DiscountParams per_second(double lambda_per_s) { return {lambda_per_s / 1000.0}; }
    double per_second_value() const { return lambda * 1000.0; }
};

struct SlackProfile {
    std::vector<double> arrival;     // emission + delay to the horizon node
    std::vector<double> true_slack;  // may be negative or -inf
    std::vector<double> est_slack;
    std::vector<double> eta;
    std::vector<char> feasible;
    double delta_spread = 0.0;
    double error_spread = 0.0;

    std::size_t size() const { return true_slack.size(); }
    std::size_t feasible_count() const;
};

enum class ErrorKind { None, Iid, ClockBias, DistanceBiased, SubnetCorrelated };

struct ErrorModel {
    ErrorKind kind = ErrorKind::None;
    double epsilon = 0.0;  // ms
};

std::string error_kind_name(ErrorKind kind);
// Accepts "none", "iid", "clock_bias", "distance", "subnet".
ErrorKind parse_error_kind(std::string_view name);

SlackProfile compute_slacks(const std::vector<Bid>& bids, const ClearingHorizon& horizon, const topology::DelayMap& delays);

// Recomputes Δ over feasible true slacks and B_η over all bids.
void refresh_spreads(SlackProfile& profile);

SlackProfile apply_error_model(const SlackProfile& profile, const std::vector<Bid>& bids, const topology::Topology& topo,
                               const topology::DelayMap& delays, const ErrorModel& model, std::uint64_t seed);

double discount(double value, double slack, const DiscountParams& params);
// log(value) - λ·slack. Comparing in log space keeps rankings intact when
// e^{-λδ} underflows, as it does for interplanetary slacks.
double log_discounted(double value, double slack, const DiscountParams& params);

// How bids are drawn for a (topology, n) cell.
struct BidSampler {
    int n = 1;
    double emission_window = 0.0;  // ms
    double value_lo = 0.0;
    double value_hi = 1000.0;
};

std::vector<Bid> sample_bids(const topology::Topology& topo, NodeId horizon_node, const BidSampler& sampler, Rng& rng);

struct HorizonChoice {
    double time = 0.0;               // τ_H
    double achieved_fraction = 0.0;  // feasible share on the pilot set
    bool target_met = true;
};

inline constexpr int kMinPilotInstances = 200;

HorizonChoice choose_horizon(const topology::Topology& topo, const topology::DelayMap& delays, const BidSampler& sampler,
                             double target_feasible, std::uint64_t pilot_seed, int pilot_instances = kMinPilotInstances);

nlohmann::json instance_to_json(const std::string& topology_ref, const ClearingHorizon& horizon, const std::vector<Bid>& bids);
void instance_from_json(const nlohmann::json& doc, std::string& topology_ref, ClearingHorizon& horizon, std::vector<Bid>& bids);
nlohmann::json error_model_to_json(const ErrorModel& model);
ErrorModel error_model_from_json(const nlohmann::json& doc);

}  // namespace lia::auction
