#include "lia/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "lia/error.hpp"
#include "lia/rng.hpp"

namespace lia::metrics {

WelfareRatios welfare_ratios(const Outcome& outcome, const std::vector<Bid>& bids, const SlackProfile& profile) {
    WelfareRatios r;
    bool any_feasible = false;
    for (std::size_t i = 0; i < bids.size(); ++i) {
        r.opt_all = std::max(r.opt_all, bids[i].true_value);
        if (profile.feasible[i]) {
            any_feasible = true;
            r.opt_feas = std::max(r.opt_feas, bids[i].true_value);
        }
        if (outcome.wins(bids[i].bidder)) r.welfare += bids[i].true_value;
    }
    if (r.opt_all > 0.0) {
        r.sw_all = r.welfare / r.opt_all;
        r.reachability = r.opt_feas / r.opt_all;
    }
    if (any_feasible) r.sw_feas = r.opt_feas > 0.0 ? r.welfare / r.opt_feas : 1.0;
    return r;
}

double revenue_ratio(const Outcome& outcome, const std::vector<Bid>& bids) {
    double opt_all = 0.0;
    for (const Bid& b : bids) opt_all = std::max(opt_all, b.true_value);
    if (opt_all <= 0.0) return 0.0;
    double revenue = 0.0;
    for (double p : outcome.payments) revenue += p;
    return revenue / opt_all;
}

double clearing_latency(const Outcome& outcome, const std::vector<Bid>& bids) {
    if (outcome.no_feasible() || bids.empty()) return kNaN;
    double first = bids.front().emission;
    for (const Bid& b : bids) first = std::min(first, b.emission);
    return outcome.decision_time - first;
}

double effective_welfare(double winner_true_value, double t_clear_ms, double rate_per_ms) {
    if (rate_per_ms < 0.0) fail(ErrorKind::Input, "decay rate must be non-negative");
    return winner_true_value * std::exp(-rate_per_ms * t_clear_ms);
}

std::vector<double> lai_grid(const topology::DelayMap& delays) {
    static constexpr double kBase[] = {0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0};
    double far = 0.0;
    for (double d : delays.dist)
        if (std::isfinite(d)) far = std::max(far, d);
    const double scale = std::max(1.0, far / kBase[std::size(kBase) - 1]);
    std::vector<double> grid;
    for (double b : kBase) grid.push_back(b * scale);
    grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

CounterfactualGains lai_gains(const mechanisms::MechanismConfig& config, const std::vector<Bid>& bids,
                              const SlackProfile& profile, const auction::ClearingHorizon& horizon, std::size_t agent,
                              double agent_delay, const std::vector<double>& grid) {
    if (agent >= bids.size()) fail(ErrorKind::Input, "LAI agent index out of range");
    std::vector<Bid> truthful = bids;
    truthful[agent].reported_value = truthful[agent].true_value;
    const int id = truthful[agent].bidder;
    const double theta = truthful[agent].true_value;
    const double base = mechanisms::utility(id, mechanisms::run(config, truthful, profile, horizon, false), theta);

    SlackProfile shifted = profile;
    auto gain_at = [&](double delta) {
        shifted.arrival[agent] = profile.arrival[agent] - delta;
        shifted.true_slack[agent] = profile.true_slack[agent] + delta;
        shifted.est_slack[agent] = profile.est_slack[agent] + delta;
        shifted.feasible[agent] = shifted.true_slack[agent] >= 0.0;
        return mechanisms::utility(id, mechanisms::run(config, truthful, shifted, horizon, false), theta) - base;
    };

    CounterfactualGains out;
    out.gain.reserve(grid.size());
    for (double delta : grid) {
        const double g = delta <= agent_delay ? gain_at(delta) : kNaN;
        out.gain.push_back(g);
        if (delta == 1.0) out.at_one_ms = g;
    }
    if (std::isfinite(agent_delay) && agent_delay > 0.0) out.at_full_reduction = gain_at(agent_delay);

    std::vector<double> all = out.gain;
    all.push_back(out.at_full_reduction);
    out.sup = lai_index(all);
    return out;
}

double lai_index(const std::vector<double>& curve) {
    double best = 0.0;
    for (double g : curve)
        if (!std::isnan(g)) best = std::max(best, g);
    return best;
}

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) carry_ += (sum_ - t) + x;
    else carry_ += (x - t) + sum_;
    sum_ = t;
}

double mean(const std::vector<double>& xs) {
    if (xs.empty()) return kNaN;
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value() / static_cast<double>(xs.size());
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) return kNaN;
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

namespace {

// Lemire's multiply-shift reduction over a SplitMix64 stream; resampling
// draws tens of millions of indices, so this stays off the mt19937 path.
class IndexStream {
public:
    explicit IndexStream(std::uint64_t seed) : state_(seed) {}
    std::size_t next(std::size_t bound) {
        const unsigned __int128 m = static_cast<unsigned __int128>(splitmix64(state_)) * bound;
        return static_cast<std::size_t>(m >> 64);
    }

private:
    std::uint64_t state_;
};

}  // namespace

BootstrapCI bootstrap_ci(const std::vector<double>& samples, double level, int resamples, std::uint64_t seed) {
    if (samples.empty()) fail(ErrorKind::Input, "bootstrap needs at least one sample");
    if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::Input, "confidence level must lie in (0, 1)");
    if (resamples < 1) fail(ErrorKind::Input, "bootstrap needs at least one resample");

    IndexStream stream(seed);
    const std::size_t n = samples.size();
    std::vector<double> means(static_cast<std::size_t>(resamples));
    for (double& m : means) {
        CompensatedSum s;
        for (std::size_t k = 0; k < n; ++k) s.add(samples[stream.next(n)]);
        m = s.value() / static_cast<double>(n);
    }
    const double tail = 0.5 * (1.0 - level);
    return {quantile(means, tail), quantile(means, 1.0 - tail), mean(samples)};
}

Summary summarize(const std::vector<double>& samples, double level, int resamples, std::uint64_t seed) {
    std::vector<double> xs;
    xs.reserve(samples.size());
    for (double x : samples)
        if (!std::isnan(x)) xs.push_back(x);
    Summary s;
    s.count = xs.size();
    if (xs.empty()) return s;
    s.mean = mean(xs);
    std::sort(xs.begin(), xs.end());
    s.median = quantile(xs, 0.5);
    s.p10 = quantile(xs, 0.1);
    s.p90 = quantile(xs, 0.9);
    if (resamples > 0) {
        const BootstrapCI ci = bootstrap_ci(xs, level, resamples, seed);
        s.ci_lo = ci.lo;
        s.ci_hi = ci.hi;
    }
    return s;
}

}  // namespace lia::metrics
