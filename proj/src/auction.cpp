#include "lia/auction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lia/error.hpp"

namespace lia::auction {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::size_t SlackProfile::feasible_count() const {
    return static_cast<std::size_t>(std::count(feasible.begin(), feasible.end(), char{1}));
}

std::string error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::None: return "none";
        case ErrorKind::Iid: return "iid";
        case ErrorKind::ClockBias: return "clock_bias";
        case ErrorKind::DistanceBiased: return "distance";
        case ErrorKind::SubnetCorrelated: return "subnet";
    }
    return "none";
}

ErrorKind parse_error_kind(std::string_view name) {
    if (name == "none") return ErrorKind::None;
    if (name == "iid") return ErrorKind::Iid;
    if (name == "clock_bias") return ErrorKind::ClockBias;
    if (name == "distance") return ErrorKind::DistanceBiased;
    if (name == "subnet") return ErrorKind::SubnetCorrelated;
    fail(lia::ErrorKind::Config, "unknown error model '" + std::string(name) + "' (expected none|iid|clock_bias|distance|subnet)");
}

void refresh_spreads(SlackProfile& p) {
    double lo = std::numeric_limits<double>::infinity(), hi = kNegInf;
    std::size_t count = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p.feasible[i]) continue;
        lo = std::min(lo, p.true_slack[i]);
        hi = std::max(hi, p.true_slack[i]);
        ++count;
    }
    p.delta_spread = count >= 2 ? hi - lo : 0.0;
    if (p.eta.empty()) {
        p.error_spread = 0.0;
    } else {
        const auto [mn, mx] = std::minmax_element(p.eta.begin(), p.eta.end());
        p.error_spread = *mx - *mn;
    }
}

SlackProfile compute_slacks(const std::vector<Bid>& bids, const ClearingHorizon& horizon, const topology::DelayMap& delays) {
    if (delays.horizon_node != horizon.node)
        fail(lia::ErrorKind::Input, "delay map was built for a different horizon node");
    SlackProfile p;
    const std::size_t n = bids.size();
    p.arrival.resize(n);
    p.true_slack.resize(n);
    p.est_slack.resize(n);
    p.eta.assign(n, 0.0);
    p.feasible.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.arrival[i] = topology::earliest_arrival(bids[i].node, bids[i].emission, delays);
        p.true_slack[i] = std::isinf(p.arrival[i]) ? kNegInf : horizon.time - p.arrival[i];
        p.est_slack[i] = p.true_slack[i];
        p.feasible[i] = p.true_slack[i] >= 0.0;
    }
    refresh_spreads(p);
    return p;
}

SlackProfile apply_error_model(const SlackProfile& profile, const std::vector<Bid>& bids, const topology::Topology& topo,
                               const topology::DelayMap& delays, const ErrorModel& model, std::uint64_t seed) {
    if (model.epsilon < 0.0) fail(lia::ErrorKind::Config, "error model epsilon must be non-negative");
    SlackProfile p = profile;
    if (model.kind == ErrorKind::None || model.epsilon == 0.0) return p;

    const double eps = model.epsilon;
    Rng rng(seed);
    const std::size_t n = bids.size();
    switch (model.kind) {
        case ErrorKind::Iid:
            for (std::size_t i = 0; i < n; ++i) p.eta[i] = uniform(rng, -eps, eps);
            break;
        case ErrorKind::ClockBias: {
            const double shared = uniform(rng, -eps, eps);
            std::fill(p.eta.begin(), p.eta.end(), shared);
            break;
        }
        case ErrorKind::DistanceBiased: {
            double far = 0.0;
            for (const Bid& b : bids)
                if (std::isfinite(delays.dist[b.node])) far = std::max(far, delays.dist[b.node]);
            for (std::size_t i = 0; i < n; ++i) {
                const double d = delays.dist[bids[i].node];
                p.eta[i] = !std::isfinite(d) ? -eps : (far > 0.0 ? -eps * d / far : 0.0);
            }
            break;
        }
        case ErrorKind::SubnetCorrelated: {
            std::vector<double> by_region(static_cast<std::size_t>(topo.region_count));
            for (double& e : by_region) e = uniform(rng, -eps, eps);
            for (std::size_t i = 0; i < n; ++i) p.eta[i] = by_region[static_cast<std::size_t>(topo.nodes[bids[i].node].region)];
            break;
        }
        case ErrorKind::None: break;
    }
    for (std::size_t i = 0; i < n; ++i) p.est_slack[i] = p.true_slack[i] + p.eta[i];
    refresh_spreads(p);
    return p;
}

double discount(double value, double slack, const DiscountParams& params) { return value * std::exp(-params.lambda * slack); }

double log_discounted(double value, double slack, const DiscountParams& params) {
    return std::log(value) - params.lambda * slack;
}

std::vector<Bid> sample_bids(const topology::Topology& topo, NodeId horizon_node, const BidSampler& sampler, Rng& rng) {
    if (sampler.n < 1) fail(lia::ErrorKind::Config, "bidder count must be at least 1");
    if (topo.size() < 2) fail(lia::ErrorKind::Input, "topology needs at least one node besides the clearing site");
    std::vector<Bid> bids(static_cast<std::size_t>(sampler.n));
    for (int i = 0; i < sampler.n; ++i) {
        Bid& b = bids[static_cast<std::size_t>(i)];
        b.bidder = i + 1;
        NodeId v = uniform_index(rng, topo.size() - 1);
        if (v >= horizon_node) ++v;
        b.node = v;
        b.true_value = uniform(rng, sampler.value_lo, sampler.value_hi);
        b.reported_value = b.true_value;
        b.emission = sampler.emission_window > 0.0 ? uniform(rng, 0.0, sampler.emission_window) : 0.0;
    }
    return bids;
}

HorizonChoice choose_horizon(const topology::Topology& topo, const topology::DelayMap& delays, const BidSampler& sampler,
                             double target_feasible, std::uint64_t pilot_seed, int pilot_instances) {
    if (!(target_feasible > 0.0 && target_feasible <= 1.0)) fail(lia::ErrorKind::Config, "target feasibility must lie in (0, 1]");
    pilot_instances = std::max(pilot_instances, kMinPilotInstances);

    std::vector<double> arrivals;
    arrivals.reserve(static_cast<std::size_t>(pilot_instances) * static_cast<std::size_t>(sampler.n));
    for (int k = 0; k < pilot_instances; ++k) {
        Rng rng(derive_seed(pilot_seed, static_cast<std::uint64_t>(k)));
        for (const Bid& b : sample_bids(topo, delays.horizon_node, sampler, rng))
            arrivals.push_back(topology::earliest_arrival(b.node, b.emission, delays));
    }
    std::sort(arrivals.begin(), arrivals.end());

    // Linear interpolation between order statistics.
    const double pos = target_feasible * static_cast<double>(arrivals.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, arrivals.size() - 1);
    double tau = arrivals[lo] + (pos - static_cast<double>(lo)) * (arrivals[hi] - arrivals[lo]);

    HorizonChoice choice;
    if (!std::isfinite(tau)) {
        auto last_finite = std::find_if(arrivals.rbegin(), arrivals.rend(), [](double a) { return std::isfinite(a); });
        tau = last_finite == arrivals.rend() ? 0.0 : *last_finite;
        choice.target_met = false;
    }
    choice.time = tau;
    const auto covered = std::upper_bound(arrivals.begin(), arrivals.end(), tau) - arrivals.begin();
    choice.achieved_fraction = static_cast<double>(covered) / static_cast<double>(arrivals.size());
    return choice;
}

nlohmann::json instance_to_json(const std::string& topology_ref, const ClearingHorizon& horizon, const std::vector<Bid>& bids) {
    nlohmann::json list = nlohmann::json::array();
    for (const Bid& b : bids)
        list.push_back({{"bidder", b.bidder}, {"true_value", b.true_value}, {"reported_value", b.reported_value}, {"node", b.node}, {"emission_ms", b.emission}});
    return {{"topology_ref", topology_ref}, {"horizon", {{"node", horizon.node}, {"time_ms", horizon.time}}}, {"bids", list}};
}

void instance_from_json(const nlohmann::json& doc, std::string& topology_ref, ClearingHorizon& horizon, std::vector<Bid>& bids) {
    try {
        topology_ref = doc.value("topology_ref", std::string{});
        horizon.node = doc.at("horizon").at("node").get<NodeId>();
        horizon.time = doc.at("horizon").at("time_ms").get<double>();
        bids.clear();
        for (const auto& b : doc.at("bids")) {
            Bid bid;
            bid.bidder = b.at("bidder").get<int>();
            bid.true_value = b.at("true_value").get<double>();
            bid.reported_value = b.value("reported_value", bid.true_value);
            bid.node = b.at("node").get<NodeId>();
            bid.emission = b.at("emission_ms").get<double>();
            if (bid.true_value < 0 || bid.reported_value < 0 || bid.emission < 0)
                fail(lia::ErrorKind::Input, "bid " + std::to_string(bid.bidder) + " has a negative value or emission time");
            bids.push_back(bid);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(lia::ErrorKind::Input, std::string("malformed instance document: ") + e.what());
    }
    if (horizon.time < 0) fail(lia::ErrorKind::Input, "horizon time must be non-negative");
}

nlohmann::json error_model_to_json(const ErrorModel& model) {
    return {{"model", error_kind_name(model.kind)}, {"epsilon_ms", model.epsilon}};
}

ErrorModel error_model_from_json(const nlohmann::json& doc) {
    ErrorModel m;
    try {
        m.kind = parse_error_kind(doc.at("model").get<std::string>());
        m.epsilon = doc.value("epsilon_ms", 0.0);
    } catch (const nlohmann::json::exception& e) {
        fail(lia::ErrorKind::Config, std::string("malformed error model: ") + e.what());
    }
    if (m.epsilon < 0) fail(lia::ErrorKind::Config, "epsilon_ms must be non-negative");
    return m;
}

}  // namespace lia::auction
