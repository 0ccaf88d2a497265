#include "lia/mechanisms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "lia/error.hpp"

namespace lia::mechanisms {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Strict ordering used for every ranking: higher key first, then lower id.
bool ranks_before(double key_a, int id_a, double key_b, int id_b) {
    return key_a > key_b || (key_a == key_b && id_a < id_b);
}

struct TopTwo {
    std::ptrdiff_t first = -1;
    std::ptrdiff_t second = -1;
};

template <class Key, class Include>
TopTwo top_two(const std::vector<Bid>& bids, Key key, Include include) {
    TopTwo t;
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (!include(i)) continue;
        const auto idx = static_cast<std::ptrdiff_t>(i);
        if (t.first < 0 || ranks_before(key(i), bids[i].bidder, key(t.first), bids[t.first].bidder)) {
            t.second = t.first;
            t.first = idx;
        } else if (t.second < 0 || ranks_before(key(i), bids[i].bidder, key(t.second), bids[t.second].bidder)) {
            t.second = idx;
        }
    }
    return t;
}

// Second-price clearing of the bids selected by `include`.
template <class Include>
Outcome second_price(const std::vector<Bid>& bids, Include include, std::string tag, double decision_time) {
    Outcome out;
    out.mechanism = std::move(tag);
    out.decision_time = decision_time;
    const auto t = top_two(bids, [&](std::size_t i) { return bids[i].reported_value; }, include);
    if (t.first < 0) return out;
    out.winners.push_back(bids[t.first].bidder);
    out.payments.push_back(t.second < 0 ? 0.0 : bids[t.second].reported_value);
    return out;
}

double last_feasible_arrival(const SlackProfile& profile) {
    double last = kNegInf;
    for (std::size_t i = 0; i < profile.size(); ++i)
        if (profile.feasible[i]) last = std::max(last, profile.arrival[i]);
    return last;
}

double first_feasible_arrival(const SlackProfile& profile) {
    double first = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < profile.size(); ++i)
        if (profile.feasible[i]) first = std::min(first, profile.arrival[i]);
    return first;
}

void check_sizes(const std::vector<Bid>& bids, const SlackProfile& profile) {
    if (bids.size() != profile.size()) fail(ErrorKind::Input, "slack profile does not match the bid list");
}

}  // namespace

std::string kind_name(Kind kind) {
    switch (kind) {
        case Kind::Lia: return "lia";
        case Kind::SyncVcg: return "sync_vcg";
        case Kind::FastVcg: return "fast_vcg";
        case Kind::BatchVcg: return "batch_vcg";
        case Kind::HoldBack: return "holdback";
        case Kind::LiaK: return "lia_k";
    }
    return "lia";
}

Kind parse_kind(std::string_view name) {
    if (name == "lia") return Kind::Lia;
    if (name == "sync_vcg") return Kind::SyncVcg;
    if (name == "fast_vcg") return Kind::FastVcg;
    if (name == "batch_vcg") return Kind::BatchVcg;
    if (name == "holdback") return Kind::HoldBack;
    if (name == "lia_k") return Kind::LiaK;
    fail(ErrorKind::Config, "unknown mechanism '" + std::string(name) + "' (expected lia|sync_vcg|fast_vcg|batch_vcg|holdback|lia_k)");
}

std::string MechanismConfig::label() const {
    auto trimmed = [](double v) {
        std::string s = std::to_string(v);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    };
    switch (kind) {
        case Kind::BatchVcg: return "batch_vcg_B" + trimmed(batch_ms);
        case Kind::LiaK: return "lia_k_K" + std::to_string(k);
        default: return kind_name(kind);
    }
}

void MechanismConfig::validate() const {
    if (uses_lambda() && !(lambda_per_s >= 0.0 && std::isfinite(lambda_per_s)))
        fail(ErrorKind::Config, label() + ": lambda must be finite and non-negative");
    if (kind == Kind::BatchVcg && !(batch_ms > 0.0)) fail(ErrorKind::Config, "batch_vcg: batch interval B must be positive");
    if (kind == Kind::LiaK && k < 1) fail(ErrorKind::Config, "lia_k: K must be at least 1");
}

double Outcome::payment_of(int bidder) const {
    for (std::size_t i = 0; i < winners.size(); ++i)
        if (winners[i] == bidder) return payments[i];
    return 0.0;
}

bool Outcome::wins(int bidder) const { return std::find(winners.begin(), winners.end(), bidder) != winners.end(); }

Outcome lia_single(const std::vector<Bid>& bids, const SlackProfile& profile, const DiscountParams& params) {
    check_sizes(bids, profile);
    Outcome out;
    out.mechanism = kind_name(Kind::Lia);
    const auto score = [&](std::size_t i) { return auction::log_discounted(bids[i].reported_value, profile.est_slack[i], params); };
    const auto t = top_two(bids, score, [&](std::size_t i) { return profile.feasible[i] != 0; });
    if (t.first < 0) return out;
    out.winners.push_back(bids[t.first].bidder);
    double pay = 0.0;
    if (t.second >= 0 && bids[t.second].reported_value > 0.0) {
        // b_j e^{-λδ̂_j} / e^{-λδ̂_w}, grouped so the exponent stays small.
        pay = bids[t.second].reported_value * std::exp(-params.lambda * (profile.est_slack[t.second] - profile.est_slack[t.first]));
    }
    out.payments.push_back(pay);
    out.decision_time = last_feasible_arrival(profile);
    return out;
}

Outcome lia_k_items(const std::vector<Bid>& bids, const SlackProfile& profile, const DiscountParams& params, int k) {
    check_sizes(bids, profile);
    if (k < 1) fail(ErrorKind::Input, "K must be at least 1");
    Outcome out;
    out.mechanism = kind_name(Kind::LiaK);
    std::vector<std::size_t> order;
    std::vector<double> score(bids.size(), kNegInf);
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (!profile.feasible[i]) continue;
        score[i] = auction::log_discounted(bids[i].reported_value, profile.est_slack[i], params);
        order.push_back(i);
    }
    if (order.empty()) return out;
    const auto better = [&](std::size_t a, std::size_t b) { return ranks_before(score[a], bids[a].bidder, score[b], bids[b].bidder); };
    const std::size_t keep = std::min(order.size(), static_cast<std::size_t>(k) + 1);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), better);

    const std::size_t winners = std::min(order.size(), static_cast<std::size_t>(k));
    const bool has_threshold = order.size() > winners;
    const std::size_t threshold = has_threshold ? order[winners] : 0;
    for (std::size_t r = 0; r < winners; ++r) {
        const std::size_t w = order[r];
        out.winners.push_back(bids[w].bidder);
        double pay = 0.0;
        if (has_threshold && bids[threshold].reported_value > 0.0)
            pay = bids[threshold].reported_value * std::exp(-params.lambda * (profile.est_slack[threshold] - profile.est_slack[w]));
        out.payments.push_back(pay);
    }
    out.decision_time = last_feasible_arrival(profile);
    return out;
}

double critical_value(std::size_t i, const std::vector<Bid>& bids, const SlackProfile& profile, const DiscountParams& params) {
    check_sizes(bids, profile);
    if (i >= bids.size() || !profile.feasible[i]) fail(ErrorKind::Input, "critical value is defined only for feasible bidders");
    double best = 0.0;
    for (std::size_t j = 0; j < bids.size(); ++j) {
        if (j == i || !profile.feasible[j] || bids[j].reported_value <= 0.0) continue;
        best = std::max(best, bids[j].reported_value * std::exp(-params.lambda * (profile.est_slack[j] - profile.est_slack[i])));
    }
    return best;
}

Outcome sync_vcg(const std::vector<Bid>& bids, const SlackProfile& profile, const ClearingHorizon& horizon) {
    check_sizes(bids, profile);
    return second_price(bids, [&](std::size_t i) { return profile.feasible[i] != 0; }, kind_name(Kind::SyncVcg), horizon.time);
}

Outcome fast_vcg(const std::vector<Bid>& bids, const SlackProfile& profile) {
    check_sizes(bids, profile);
    const double first = first_feasible_arrival(profile);
    const auto in_batch = [&](std::size_t i) { return profile.feasible[i] && profile.arrival[i] <= first + kArrivalTieMs; };
    double latest = first;
    for (std::size_t i = 0; i < bids.size(); ++i)
        if (in_batch(i)) latest = std::max(latest, profile.arrival[i]);
    Outcome out = second_price(bids, in_batch, kind_name(Kind::FastVcg), latest);
    if (out.no_feasible()) out.decision_time = 0.0;
    return out;
}

Outcome batch_vcg(const std::vector<Bid>& bids, const SlackProfile& profile, const ClearingHorizon& horizon, double batch_ms) {
    check_sizes(bids, profile);
    if (!(batch_ms > 0.0)) fail(ErrorKind::Input, "batch interval must be positive");
    // The batch opens with the first feasible arrival and closes B later, or
    // at the public horizon if that comes first: nothing feasible can follow it.
    const double first = first_feasible_arrival(profile);
    const double close = std::min(first + batch_ms, horizon.time);
    Outcome out = second_price(bids, [&](std::size_t i) { return profile.feasible[i] && profile.arrival[i] <= close; },
                               kind_name(Kind::BatchVcg), close);
    if (out.no_feasible()) out.decision_time = 0.0;
    return out;
}

Outcome holdback(const std::vector<Bid>& bids, const SlackProfile& profile, const ClearingHorizon& horizon) {
    Outcome out = sync_vcg(bids, profile, horizon);
    out.mechanism = kind_name(Kind::HoldBack);
    out.decision_time = horizon.time;
    return out;
}

Outcome run(const MechanismConfig& config, const std::vector<Bid>& bids, const SlackProfile& profile,
            const ClearingHorizon& horizon, bool timed) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    const auto params = DiscountParams::per_second(config.lambda_per_s);
    switch (config.kind) {
        case Kind::Lia: out = lia_single(bids, profile, params); break;
        case Kind::LiaK: out = lia_k_items(bids, profile, params, config.k); break;
        case Kind::SyncVcg: out = sync_vcg(bids, profile, horizon); break;
        case Kind::FastVcg: out = fast_vcg(bids, profile); break;
        case Kind::BatchVcg: out = batch_vcg(bids, profile, horizon, config.batch_ms); break;
        case Kind::HoldBack: out = holdback(bids, profile, horizon); break;
    }
    if (timed) {
        const auto stop = std::chrono::steady_clock::now();
        out.compute_time_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    }
    out.mechanism = config.label();
    return out;
}

double utility(int bidder, const Outcome& outcome, double true_value) {
    for (std::size_t i = 0; i < outcome.winners.size(); ++i)
        if (outcome.winners[i] == bidder) return true_value - outcome.payments[i];
    return 0.0;
}

EndogenousSlackReport endogenous_slack_demo(double theta, double delta, double delta_prime, const DiscountParams& params) {
    if (!(delta_prime >= 0.0 && delta_prime < delta)) fail(ErrorKind::Input, "need 0 <= delta' < delta");
    if (!(theta > 0.0) || !(params.lambda > 0.0)) fail(ErrorKind::Input, "need a positive value and a positive discount rate");
    const double low = auction::discount(theta, delta, params);
    const double high = auction::discount(theta, delta_prime, params);
    if (!(low < high)) fail(ErrorKind::Input, "no competitor value separates the two discounted bids");

    EndogenousSlackReport report;
    report.competitor_value = 0.5 * (low + high);
    const std::vector<Bid> bids{{1, theta, theta, 0, 0.0}, {2, report.competitor_value, report.competitor_value, 0, 0.0}};
    auto evaluate = [&](double own_slack) {
        SlackProfile p;
        p.arrival = {0.0, 0.0};
        p.true_slack = p.est_slack = {own_slack, 0.0};
        p.eta = {0.0, 0.0};
        p.feasible = {1, 1};
        auction::refresh_spreads(p);
        return utility(1, lia_single(bids, p, params), theta);
    };
    report.utility_at_delta = evaluate(delta);
    report.utility_at_delta_prime = evaluate(delta_prime);
    return report;
}

nlohmann::json outcome_to_json(const Outcome& o) {
    return {{"mechanism", o.mechanism}, {"winners", o.winners}, {"payments", o.payments},
            {"decision_time_ms", o.decision_time}, {"compute_time_ms", o.compute_time_ms}};
}

}  // namespace lia::mechanisms
