#include "lia/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "lia/error.hpp"

namespace lia::verify {

using auction::Bid;
using auction::DiscountParams;
using auction::SlackProfile;
using mechanisms::Outcome;
using topology::kInfinity;
using topology::Topology;

namespace {

std::string num(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool close_rel(double a, double b, double rel) {
    if (a == b) return true;
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<Bid> random_bids(Rng& rng, std::size_t n, double hi) {
    std::vector<Bid> bids(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = uniform(rng, 0.0, hi);
        bids[i] = {static_cast<int>(i) + 1, v, v, 0, 0.0};
    }
    return bids;
}

// Mix of feasible slacks in [0, 100] ms and the occasional infeasible bid.
std::vector<double> random_slacks(Rng& rng, std::size_t n) {
    std::vector<double> s(n);
    for (double& x : s) x = uniform(rng, 0.0, 1.0) < 0.15 ? -uniform(rng, 0.1, 20.0) : uniform(rng, 0.0, 100.0);
    return s;
}

std::string describe(const std::vector<Bid>& bids, const std::vector<double>& slacks, double lambda) {
    std::ostringstream os;
    os << "lambda=" << lambda << "/ms bids=[";
    for (std::size_t i = 0; i < bids.size(); ++i) os << (i ? ", " : "") << bids[i].reported_value << "@" << slacks[i];
    os << "]";
    return os.str();
}

}  // namespace

// ---- Oracles ----------------------------------------------------------------

std::vector<std::vector<double>> enumerate_all_pairs(const Topology& topo) {
    const std::size_t n = topo.size();
    std::vector<std::vector<std::pair<std::size_t, double>>> out(n);
    for (const auto& l : topo.links) out[l.src].push_back({l.dst, l.delay_ms});

    std::vector<std::vector<double>> best(n, std::vector<double>(n, kInfinity));
    std::vector<char> on_path(n, 0);
    std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t source, std::size_t at, double length) {
        best[source][at] = std::min(best[source][at], length);
        on_path[at] = 1;
        for (const auto& [next, d] : out[at])
            if (!on_path[next]) walk(source, next, length + d);
        on_path[at] = 0;
    };
    for (std::size_t s = 0; s < n; ++s) walk(s, s, 0.0);
    return best;
}

std::vector<std::vector<double>> floyd_warshall(const Topology& topo) {
    const std::size_t n = topo.size();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, kInfinity));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
    for (const auto& l : topo.links) d[l.src][l.dst] = std::min(d[l.src][l.dst], l.delay_ms);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    return d;
}

Topology random_graph(Rng& rng, std::size_t nodes, double p, double lo, double hi) {
    Topology topo;
    topo.kind = topology::Kind::Custom;
    for (std::size_t i = 0; i < nodes; ++i) topo.nodes.push_back({i, {0.0, 0.0, 0.0}, 0});
    for (std::size_t u = 0; u < nodes; ++u)
        for (std::size_t v = 0; v < nodes; ++v)
            if (u != v && uniform(rng, 0.0, 1.0) < p) topo.links.push_back({u, v, uniform(rng, lo, hi)});
    return topo;
}

SlackProfile profile_from_slacks(const std::vector<double>& slacks, double horizon_ms) {
    SlackProfile p;
    const std::size_t n = slacks.size();
    p.true_slack = slacks;
    p.est_slack = slacks;
    p.eta.assign(n, 0.0);
    p.arrival.resize(n);
    p.feasible.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.arrival[i] = horizon_ms - slacks[i];
        p.feasible[i] = slacks[i] >= 0.0;
    }
    auction::refresh_spreads(p);
    return p;
}

double bisection_critical_value(std::size_t i, const std::vector<Bid>& bids, const SlackProfile& profile,
                                const DiscountParams& params, double rel_tol) {
    std::vector<Bid> trial = bids;
    const int id = bids[i].bidder;
    auto wins_at = [&](double report) {
        trial[i].reported_value = report;
        return mechanisms::lia_single(trial, profile, params).wins(id);
    };
    double hi = 1.0;
    for (std::size_t j = 0; j < bids.size(); ++j) hi = std::max(hi, bids[j].reported_value);
    while (!wins_at(hi)) hi *= 2.0;
    double lo = 0.0;
    if (wins_at(lo)) return 0.0;
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (wins_at(mid) ? hi : lo) = mid;
    }
    return hi;
}

Outcome second_price_oracle(const std::vector<Bid>& bids, const SlackProfile& profile) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < bids.size(); ++i)
        if (profile.feasible[i]) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (bids[a].reported_value != bids[b].reported_value) return bids[a].reported_value > bids[b].reported_value;
        return bids[a].bidder < bids[b].bidder;
    });
    Outcome out;
    if (idx.empty()) return out;
    out.winners = {bids[idx[0]].bidder};
    out.payments = {idx.size() > 1 ? bids[idx[1]].reported_value : 0.0};
    return out;
}

// ---- Report -----------------------------------------------------------------

void Report::add(std::string name, bool passed, std::string detail) { checks.push_back({std::move(name), passed, std::move(detail)}); }

std::size_t Report::failures() const {
    return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.passed; }));
}

std::string Report::text() const {
    std::ostringstream os;
    for (const Check& c : checks) os << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    os << (checks.size() - failures()) << "/" << checks.size() << " checks passed\n";
    return os.str();
}

nlohmann::json Report::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const Check& c : checks) arr.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return {{"checks", arr}, {"failures", failures()}};
}

// ---- Property suites --------------------------------------------------------

SuiteResult truthfulness_suite(int triples, std::uint64_t seed) {
    SuiteResult r;
    Rng rng(seed);
    auto note = [&](const std::string& what) {
        if (r.violations++ == 0) r.first_violation = what;
    };
    for (int t = 0; t < triples; ++t) {
        const std::size_t n = 2 + uniform_index(rng, 7);
        auto bids = random_bids(rng, n, 1000.0);
        const auto slacks = random_slacks(rng, n);
        const auto profile = profile_from_slacks(slacks);
        const DiscountParams params{uniform(rng, 0.001, 0.1)};
        const std::size_t i = uniform_index(rng, n);
        const int k = static_cast<int>(1 + uniform_index(rng, n));
        const double theta = bids[i].true_value;
        // Half the misreports land near the truth, where ranking flips are most delicate.
        const double lie = uniform(rng, 0.0, 1.0) < 0.5 ? uniform(rng, 0.0, 2000.0) : std::max(0.0, theta + uniform(rng, -50.0, 50.0));

        for (int which = 0; which < 2; ++which) {
            auto clear = [&](const std::vector<Bid>& b) {
                return which == 0 ? mechanisms::lia_single(b, profile, params) : mechanisms::lia_k_items(b, profile, params, k);
            };
            const Outcome truthful = clear(bids);
            auto lying = bids;
            lying[i].reported_value = lie;
            const Outcome misreport = clear(lying);
            const double u_truth = mechanisms::utility(bids[i].bidder, truthful, theta);
            const double u_lie = mechanisms::utility(bids[i].bidder, misreport, theta);
            const std::string mech = which == 0 ? "lia_single" : "lia_k_items(K=" + std::to_string(k) + ")";
            if (u_truth < u_lie - 1e-9 * std::max(1.0, theta))
                note(mech + " bidder " + std::to_string(i + 1) + " gains by reporting " + num(lie) + " (" + describe(bids, slacks, params.lambda) + ")");
            for (std::size_t w = 0; w < truthful.winners.size(); ++w) {
                const auto& bid = bids[static_cast<std::size_t>(truthful.winners[w] - 1)];
                if (truthful.payments[w] > bid.true_value * (1.0 + 1e-12) + 1e-12)
                    note(mech + " IR violated for winner " + std::to_string(bid.bidder) + " (" + describe(bids, slacks, params.lambda) + ")");
            }
        }
        ++r.trials;
    }
    return r;
}

SuiteResult shortest_path_suite(int graphs, std::size_t max_nodes, std::uint64_t seed) {
    SuiteResult r;
    Rng rng(seed);
    for (int g = 0; g < graphs; ++g) {
        const std::size_t n = 2 + uniform_index(rng, max_nodes - 1);
        const Topology topo = random_graph(rng, n, uniform(rng, 0.2, 0.8), 0.1, 20.0);
        const auto brute = enumerate_all_pairs(topo);
        const auto fw = floyd_warshall(topo);
        const auto dijkstra_rows = topology::all_pairs(topo);
        bool ok = true;
        std::string where;
        for (std::size_t h = 0; h < n && ok; ++h) {
            const auto to_h = topology::distances_to_horizon(topo, h);
            for (std::size_t u = 0; u < n && ok; ++u) {
                const double b = brute[u][h];
                auto same = [&](double x) { return (std::isinf(b) && std::isinf(x)) || close_rel(x, b, 1e-12); };
                if (!same(to_h.dist[u]) || !same(fw[u][h]) || !same(dijkstra_rows[u][h])) {
                    ok = false;
                    where = "graph " + std::to_string(g) + " (" + std::to_string(n) + " nodes): " + std::to_string(u) + "->" + std::to_string(h) +
                            " brute " + num(b, 12) + " reverse-dijkstra " + num(to_h.dist[u], 12) + " floyd " + num(fw[u][h], 12);
                }
            }
        }
        ++r.trials;
        if (!ok && r.violations++ == 0) r.first_violation = where;
    }
    return r;
}

SuiteResult critical_value_suite(int instances, std::uint64_t seed) {
    SuiteResult r;
    Rng rng(seed);
    while (r.trials < static_cast<std::size_t>(instances)) {
        const std::size_t n = 2 + uniform_index(rng, 9);
        const auto bids = random_bids(rng, n, 1000.0);
        const auto slacks = random_slacks(rng, n);
        const auto profile = profile_from_slacks(slacks);
        if (profile.feasible_count() == 0) continue;
        const DiscountParams params{uniform(rng, 0.001, 0.1)};
        std::size_t i = uniform_index(rng, n);
        while (!profile.feasible[i]) i = (i + 1) % n;
        const double formula = mechanisms::critical_value(i, bids, profile, params);
        const double bisect = bisection_critical_value(i, bids, profile, params);
        ++r.trials;
        if (!close_rel(formula, bisect, 1e-9) && r.violations++ == 0)
            r.first_violation = "bidder " + std::to_string(i + 1) + ": closed form " + num(formula, 15) + " vs bisection " + num(bisect, 15) + " (" +
                                describe(bids, slacks, params.lambda) + ")";
        // The winner's payment is its critical value.
        const Outcome o = mechanisms::lia_single(bids, profile, params);
        if (o.wins(bids[i].bidder) && !close_rel(o.payments[0], formula, 1e-12) && r.violations++ == 0)
            r.first_violation = "payment " + num(o.payments[0], 15) + " differs from critical value " + num(formula, 15);
    }
    return r;
}

SuiteResult k1_equivalence_suite(int instances, std::uint64_t seed) {
    SuiteResult r;
    Rng rng(seed);
    for (int t = 0; t < instances; ++t) {
        const std::size_t n = 1 + uniform_index(rng, 12);
        const auto bids = random_bids(rng, n, 1000.0);
        const auto slacks = random_slacks(rng, n);
        const auto profile = profile_from_slacks(slacks);
        const DiscountParams params{uniform(rng, 0.0, 0.1)};
        const Outcome a = mechanisms::lia_single(bids, profile, params);
        const Outcome b = mechanisms::lia_k_items(bids, profile, params, 1);
        ++r.trials;
        if ((a.winners != b.winners || a.payments != b.payments) && r.violations++ == 0)
            r.first_violation = "lia_single and lia_k_items(K=1) disagree on " + describe(bids, slacks, params.lambda);
    }
    return r;
}

SuiteResult endogenous_slack_suite(int draws, std::uint64_t seed) {
    SuiteResult r;
    Rng rng(seed);
    for (int t = 0; t < draws; ++t) {
        const double theta = uniform(rng, 1.0, 1000.0);
        const double delta = uniform(rng, 1.0, 100.0);
        const double delta_prime = uniform(rng, 0.0, 0.9 * delta);
        const DiscountParams params{uniform(rng, 0.001, 0.1)};
        const auto rep = mechanisms::endogenous_slack_demo(theta, delta, delta_prime, params);
        ++r.trials;
        if (!(rep.utility_at_delta_prime > rep.utility_at_delta) && r.violations++ == 0)
            r.first_violation = "theta=" + num(theta) + " delta=" + num(delta) + " delta'=" + num(delta_prime) + ": u(delta')=" +
                                num(rep.utility_at_delta_prime) + " u(delta)=" + num(rep.utility_at_delta);
    }
    return r;
}

SuiteResult common_shift_suite(int instances, std::uint64_t seed) {
    SuiteResult r;
    Rng rng(seed);
    for (int t = 0; t < instances; ++t) {
        const std::size_t n = 1 + uniform_index(rng, 12);
        const auto bids = random_bids(rng, n, 1000.0);
        const auto slacks = random_slacks(rng, n);
        const auto base = profile_from_slacks(slacks);
        auto shifted = base;
        const double eta = uniform(rng, -10.0, 10.0);
        for (double& s : shifted.est_slack) s += eta;
        const DiscountParams params{uniform(rng, 0.0, 0.1)};
        const Outcome a = mechanisms::lia_single(bids, base, params);
        const Outcome b = mechanisms::lia_single(bids, shifted, params);
        bool same = a.winners == b.winners && a.payments.size() == b.payments.size();
        for (std::size_t w = 0; same && w < a.payments.size(); ++w) same = close_rel(a.payments[w], b.payments[w], 1e-9);
        ++r.trials;
        if (!same && r.violations++ == 0) r.first_violation = "common shift " + num(eta) + " changed the outcome of " + describe(bids, slacks, params.lambda);
    }
    return r;
}

// ---- Golden checks ----------------------------------------------------------

namespace {

harness::SweepConfig base_config(const GoldenOptions& o, topology::Kind kind, std::vector<int> n_list) {
    auto c = harness::SweepConfig::defaults_for(harness::RunKind::Sweep);
    c.topologies = {kind};
    c.n_list = std::move(n_list);
    c.instances = o.instances;
    c.seed = o.seed;
    c.jobs = o.jobs;
    c.bootstrap_resamples = 0;
    c.measure_compute_time = false;
    c.lai = false;
    return c;
}

double mean_metric(const harness::RunResult& r, const std::string& mechanism, const std::string& metric, int n = 0) {
    std::vector<double> xs;
    for (const auto& rec : r.records)
        if (rec.mechanism == mechanism && (n == 0 || rec.n == n)) xs.push_back(harness::metric_value(rec, metric));
    std::erase_if(xs, [](double x) { return std::isnan(x); });
    return metrics::mean(xs);
}

void band(Report& rep, const std::string& name, double value, double target, double tol) {
    rep.add(name, near(value, target, tol), num(value) + " (expected " + num(target) + " +/- " + num(tol) + ")");
}

void suite(Report& rep, const std::string& name, const SuiteResult& s) {
    rep.add(name, s.ok(), std::to_string(s.violations) + " violations in " + std::to_string(s.trials) + " trials" +
                              (s.ok() ? "" : "; first: " + s.first_violation));
}

}  // namespace

Report golden_checks(const GoldenOptions& o) {
    Report rep;
    const DiscountParams lam05{0.05};

    // Topology calibration bands.
    {
        const auto sl = topology::pairwise_delay_stats(topology::generate_starlink(1));
        rep.add("starlink delay band", sl.min >= 1.5 && sl.min <= 2.5 && sl.max >= 40.0 && sl.max <= 55.0,
                "min " + num(sl.min) + " ms, max " + num(sl.max) + " ms (band min [1.5, 2.5], max [40, 55])");
        const auto in = topology::pairwise_delay_stats(topology::generate_internet(1));
        rep.add("internet delay band", in.min <= 1.0 && in.max >= 70.0 && in.max <= 100.0,
                "min " + num(in.min) + " ms, max " + num(in.max) + " ms (band min <= 1, max [70, 100])");
        band(rep, "co-located metros hit the fiber floor", topology::fiber_delay_ms(0.0), 0.3, 1e-12);
        const auto dsn = topology::generate_dsn(1);
        const auto d = topology::distances_to_horizon(dsn, 0);
        auto has = [&](double target) {
            return std::any_of(d.dist.begin(), d.dist.end(), [&](double x) { return near(x, target, 1e-6 * target); });
        };
        rep.add("dsn earth-mars closest approach", has(498'000.0), "a probe sits 498,000 ms from the horizon station");
        rep.add("dsn earth-jupiter maximum separation", has(4'416'000.0), "a probe sits 4,416,000 ms from the horizon station");
    }

    // Slack and discounting.
    {
        const auto p = profile_from_slacks({50.0 - (0.0 + 1.8), 600'000.0 - (0.0 + 498'000.0)});
        band(rep, "slack tau_H=50 dist=1.8", p.true_slack[0], 48.2, 1e-9);
        band(rep, "slack tau_H=600000 dist=498000", p.true_slack[1], 102'000.0, 1e-9);
        band(rep, "discounted bid 100 at 10 ms", auction::discount(100.0, 10.0, lam05), 60.6, 0.1);
        band(rep, "discounted bid 120 at 30 ms", auction::discount(120.0, 30.0, lam05), 26.77, 0.01);
        band(rep, "bound factor Delta=50.98 ms, 1/s", std::exp(-0.001 * 50.98), 0.950, 0.001);
        band(rep, "bound factor Delta=13.15 ms, 1/s", std::exp(-0.001 * 13.15), 0.987, 0.001);
        band(rep, "noisy bound factor Delta=20 ms, eps=2 ms", std::exp(-0.001 * (20.0 + 2.0 * 2.0)), 0.976, 0.001);
    }

    // Timing-rent example.
    {
        const std::vector<Bid> bids{{1, 100.0, 100.0, 0, 0.0}, {2, 120.0, 120.0, 0, 0.0}};
        const auto p = profile_from_slacks({10.0, 0.0});
        const Outcome o = mechanisms::lia_single(bids, p, lam05);
        const bool winner_ok = o.winners == std::vector<int>{2};
        rep.add("timing-rent example winner and payment", winner_ok && near(o.payments[0], 60.6, 0.1),
                "winner " + (o.winners.empty() ? std::string("none") : std::to_string(o.winners[0])) + ", payment " +
                    (o.payments.empty() ? std::string("-") : num(o.payments[0])) + " (expected winner 2, 60.6 +/- 0.1)");
        band(rep, "timing-rent example critical value", mechanisms::critical_value(1, bids, p, lam05), 60.6, 0.1);
        band(rep, "timing-rent example winner utility", mechanisms::utility(2, o, 120.0), 59.4, 0.1);
    }

    // K identical items.
    {
        const std::vector<Bid> bids{{1, 100, 100, 0, 0}, {2, 120, 120, 0, 0}, {3, 90, 90, 0, 0}, {4, 80, 80, 0, 0}};
        const auto p = profile_from_slacks({10.0, 30.0, 5.0, 2.0});
        const Outcome o = mechanisms::lia_k_items(bids, p, lam05, 2);
        const bool ok = o.wins(3) && o.wins(4) && o.winners.size() == 2 && near(o.payment_of(3), 77.88, 0.01) && near(o.payment_of(4), 67.03, 0.01);
        rep.add("K-items example", ok, "p3 " + num(o.payment_of(3)) + ", p4 " + num(o.payment_of(4)) + " (expected winners {3,4}, 77.88 and 67.03 +/- 0.01)");
    }

    // Strategic slack and waiting cost.
    {
        const auto demo = mechanisms::endogenous_slack_demo(100.0, 10.0, 0.0, lam05);
        rep.add("endogenous slack example", near(demo.competitor_value, 80.3, 0.05) && demo.utility_at_delta == 0.0 && demo.utility_at_delta_prime > 0.0,
                "c " + num(demo.competitor_value) + ", u(delta) " + num(demo.utility_at_delta) + ", u(delta') " + num(demo.utility_at_delta_prime));
        suite(rep, "endogenous slack random draws", endogenous_slack_suite(1000, derive_seed(o.seed, 11)));

        const double eps = 0.01, r = 0.001;
        const double D = std::log(1.0 / eps) / r;
        const double now = metrics::effective_welfare(1.0, 0.0, r) / (1.0 / eps);
        const double wait = metrics::effective_welfare(1.0 / eps, D, r) / (1.0 / eps);
        rep.add("waiting-cost construction", close_rel(now, eps, 1e-12) && close_rel(wait, eps, 1e-12),
                "allocate-now ratio " + num(now) + ", wait ratio " + num(wait) + " (expected " + num(eps) + ")");
        band(rep, "effective welfare 100 at 1000 ms, r=0.001/ms", metrics::effective_welfare(100.0, 1000.0, 0.001), 36.79, 0.01);
        // First-price illustration: win probability 0.6 -> 0.65 at a fixed bid of 80 for value 100.
        band(rep, "LAI first-price illustration g(1 ms)", 0.65 * (100.0 - 80.0) - 0.6 * (100.0 - 80.0), 1.0, 1e-9);
    }

    // Horizon calibration and slack spreads.
    {
        auto fresh_fraction = [&](topology::Kind kind, int instances, double* spread_median) {
            auto topo = topology::generate(kind, 1);
            const auto delays = topology::distances_to_horizon(topo, 0);
            const double W = harness::default_emission_window(kind, delays);
            const auction::BidSampler sampler{50, W, 0.0, 1000.0};
            const auto h = auction::choose_horizon(topo, delays, sampler, 0.95, derive_seed(o.seed, 21));
            std::size_t feasible = 0, total = 0;
            std::vector<double> spreads;
            for (int k = 0; k < instances; ++k) {
                const auto inst = harness::gen_instance(topo, delays, 50, h.time, W, 0.0, 1000.0, derive_seed(o.seed + 1, static_cast<std::uint64_t>(k)));
                const auto p = auction::compute_slacks(inst.bids, inst.horizon, delays);
                feasible += p.feasible_count();
                total += p.size();
                spreads.push_back(p.delta_spread);
            }
            if (spread_median) *spread_median = metrics::quantile(spreads, 0.5);
            return static_cast<double>(feasible) / static_cast<double>(total);
        };
        double spread = 0.0;
        const double sl = fresh_fraction(topology::Kind::Starlink200, o.spread_instances, &spread);
        band(rep, "starlink n=50 feasible fraction", sl, 0.949, 0.02);
        band(rep, "starlink n=50 median slack spread", spread, 50.98, 0.2 * 50.98);
        band(rep, "dsn n=50 feasible fraction", fresh_fraction(topology::Kind::Dsn30, o.instances, nullptr), 0.931, 0.03);
    }

    // Mechanism properties.
    suite(rep, "truthfulness and IR (lia_single, lia_k_items)", truthfulness_suite(10'000, derive_seed(o.seed, 31)));
    suite(rep, "critical value equals bisection threshold", critical_value_suite(1000, derive_seed(o.seed, 32)));
    suite(rep, "lia_k_items with K=1 matches lia_single", k1_equivalence_suite(1000, derive_seed(o.seed, 33)));
    suite(rep, "shortest paths equal simple-path enumeration", shortest_path_suite(500, 8, derive_seed(o.seed, 34)));
    suite(rep, "common slack shift leaves LIA unchanged", common_shift_suite(1000, derive_seed(o.seed, 35)));

    // Simulated reproduction bands.
    {
        auto c = base_config(o, topology::Kind::Starlink200, {10, 20, 30, 40, 50});
        c.mechanisms = {"lia", "sync_vcg"};
        c.lambda_list = {1.0};
        const auto r = harness::run_sweep(c);
        band(rep, "starlink n=50 LIA welfare", mean_metric(r, "lia", "sw_ratio_all", 50), 0.997, 0.005);
        band(rep, "starlink n=50 LIA clearing latency", mean_metric(r, "lia", "clearing_latency_ms", 50), 68.97, 2.0);
        band(rep, "starlink n=50 Sync-VCG clearing latency", mean_metric(r, "sync_vcg", "clearing_latency_ms", 50), 69.21, 2.0);
        const auto d = harness::paired_differences(r, "sync_vcg", metrics::kNaN, "lia", 1.0, "sw_ratio_all", "starlink");
        band(rep, "starlink paired Sync-VCG minus LIA welfare", metrics::mean(d), 0.00137, 0.001);
    }
    {
        auto c = base_config(o, topology::Kind::Starlink200, {50});
        c.mechanisms = {"fast_vcg", "sync_vcg", "holdback"};
        c.lai = true;
        const auto r = harness::run_sweep(c);
        band(rep, "starlink n=50 Fast-VCG LAI", mean_metric(r, "fast_vcg", "lai_sup"), 314.95, 0.15 * 314.95);
        rep.add("sync-vcg and holdback agree per instance", r.checks.sync_holdback_compared > 0 && r.checks.sync_holdback_mismatches == 0,
                std::to_string(r.checks.sync_holdback_mismatches) + " mismatches in " + std::to_string(r.checks.sync_holdback_compared) + " instances");
    }
    {
        auto c = base_config(o, topology::Kind::Starlink200, {50});
        c.topologies = {topology::Kind::Starlink200, topology::Kind::Internet100};
        c.mechanisms = {"lia"};
        c.lambda_list = {1.0};
        c.error_models = {"none", "iid", "clock_bias"};
        c.epsilon_list = {10.0};
        const auto r = harness::run_robustness(c);
        std::vector<double> iid, none_vs;
        for (const auto& rec : r.records)
            if (rec.error_model == "iid") iid.push_back(rec.sw_ratio_all);
        rep.add("iid eps=10 ms LIA welfare", metrics::mean(iid) >= 0.99, num(metrics::mean(iid)) + " (band >= 0.99)");
        rep.add("clock bias preserves outcomes", r.checks.clock_bias_compared > 0 && r.checks.clock_bias_mismatches == 0,
                std::to_string(r.checks.clock_bias_mismatches) + " mismatches in " + std::to_string(r.checks.clock_bias_compared) + " instances");
    }
    {
        auto lia_large = [&](topology::Kind kind) {
            auto c = base_config(o, kind, {1000});
            c.instances = o.large_instances;
            c.mechanisms = {"lia"};
            c.lambda_list = {1.0};
            c.measure_compute_time = true;
            return harness::run_large(c);
        };
        const auto s = lia_large(topology::Kind::Starlink200);
        band(rep, "starlink n=1000 LIA welfare", mean_metric(s, "lia", "sw_ratio_all"), 0.9979, 0.003);
        const auto d = lia_large(topology::Kind::Dsn30);
        band(rep, "dsn n=1000 LIA welfare", mean_metric(d, "lia", "sw_ratio_all"), 0.9960, 0.004);
        const double cpu = mean_metric(s, "lia", "compute_time_ms");
        rep.add("n=1000 LIA compute time under 1 ms", cpu < 1.0, num(cpu) + " ms");
    }
    return rep;
}

}  // namespace lia::verify
