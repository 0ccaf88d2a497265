#include <doctest.h>

#include <cmath>

#include "lia/error.hpp"
#include "lia/metrics.hpp"
#include "lia/verify.hpp"

using namespace lia;
using namespace lia::metrics;
using auction::Bid;
using verify::profile_from_slacks;

namespace {

std::vector<Bid> truthful(std::initializer_list<double> values) {
    std::vector<Bid> bids;
    int id = 1;
    for (double v : values) bids.push_back({id++, v, v, 0, 0.0});
    return bids;
}

Outcome won_by(int bidder, double pay, double t = 0.0) {
    Outcome o;
    o.winners = {bidder};
    o.payments = {pay};
    o.decision_time = t;
    return o;
}

}  // namespace

TEST_CASE("welfare ratios") {
    SUBCASE("global max, feasible") {
        const auto r = welfare_ratios(won_by(2, 0), truthful({10, 20}), profile_from_slacks({1, 1}));
        CHECK(r.sw_all == 1.0);
        CHECK(r.sw_feas == 1.0);
        CHECK(r.reachability == 1.0);
    }
    SUBCASE("best bid unreachable") {
        const auto r = welfare_ratios(won_by(1, 0), truthful({100, 120}), profile_from_slacks({1, -1}));
        CHECK(r.reachability == doctest::Approx(100.0 / 120.0));
        CHECK(r.sw_feas == 1.0);
        CHECK(r.sw_all == doctest::Approx(0.8333333333));
    }
    SUBCASE("nothing feasible") {
        const auto r = welfare_ratios(Outcome{}, truthful({5}), profile_from_slacks({-1}));
        CHECK(std::isnan(r.sw_feas));
        CHECK(r.sw_all == 0.0);
    }
    SUBCASE("identity sw_all = sw_feas * reachability") {
        Rng rng(1);
        for (int t = 0; t < 500; ++t) {
            auto bids = truthful({uniform(rng, 1, 100), uniform(rng, 1, 100), uniform(rng, 1, 100), uniform(rng, 1, 100)});
            const auto p = profile_from_slacks({uniform(rng, -5, 20), uniform(rng, -5, 20), uniform(rng, -5, 20), uniform(rng, -5, 20)});
            const auto o = mechanisms::lia_single(bids, p, {0.05});
            const auto r = welfare_ratios(o, bids, p);
            if (std::isnan(r.sw_feas)) continue;
            CHECK(std::abs(r.sw_all - r.sw_feas * r.reachability) <= 1e-12);
        }
    }
}

TEST_CASE("revenue and latency") {
    auto bids = truthful({10, 40});
    bids[0].emission = 3.0;
    bids[1].emission = 1.0;
    CHECK(revenue_ratio(won_by(2, 10), bids) == doctest::Approx(0.25));
    CHECK(clearing_latency(won_by(2, 10, 15.0), bids) == doctest::Approx(14.0));
    CHECK(std::isnan(clearing_latency(Outcome{}, bids)));

    SUBCASE("single bid: LIA decides at its arrival") {
        const std::vector<Bid> one{{1, 5, 5, 1, 0.0}};
        const auto p = profile_from_slacks({40.0}, 50.0);  // arrival 10
        CHECK(clearing_latency(mechanisms::lia_single(one, p, {0.001}), one) == doctest::Approx(10.0));
        CHECK(clearing_latency(mechanisms::sync_vcg(one, p, {0, 50.0}), one) == doctest::Approx(50.0));
    }
}

TEST_CASE("effective welfare") {
    CHECK(effective_welfare(120.0, 30.0, 0.0) == 120.0);
    CHECK(effective_welfare(100.0, 1000.0, 0.001) == doctest::Approx(36.79).epsilon(0.01 / 36.79));
    CHECK_THROWS_AS(effective_welfare(1.0, 1.0, -0.1), Error);
    SUBCASE("waiting-cost construction") {
        for (double eps : {0.5, 0.1, 0.01}) {
            const double r = 0.002;
            const double D = std::log(1.0 / eps) / r;
            const double opt = 1.0 / eps;
            CHECK(effective_welfare(1.0, 0.0, r) / opt == doctest::Approx(eps));
            CHECK(effective_welfare(1.0 / eps, D, r) / opt == doctest::Approx(eps));
        }
    }
}

TEST_CASE("LAI index") {
    CHECK(lai_index({-3.0, -1.0}) == 0.0);
    CHECK(lai_index({-1.0, 2.0, 0.5}) == 2.0);
    CHECK(lai_index({kNaN, 0.25}) == 0.25);
    // First-price illustration: 1 ms faster lifts the win chance from 0.6 to 0.65 at bid 80.
    const double g = 0.65 * (100 - 80) - 0.6 * (100 - 80);
    CHECK(g == doctest::Approx(1.0));
}

TEST_CASE("LAI gains") {
    const auto bids = truthful({50, 60, 70});
    // arrival = 100 - slack
    const auto p = profile_from_slacks({20.0, 5.0, 10.0}, 100.0);
    const auction::ClearingHorizon h{0, 100.0};
    const std::vector<double> grid{0.5, 1.0, 2.0, 5.0, 50.0};

    SUBCASE("LIA: no gain from being faster") {
        const auto g = lai_gains({mechanisms::Kind::Lia, 1.0, 0, 1}, bids, p, h, 0, 30.0, grid);
        for (double x : g.gain)
            if (!std::isnan(x)) CHECK(x <= 1e-12);
        CHECK(std::isnan(g.gain.back()));  // 50 ms exceeds the agent's 30 ms delay
        CHECK(g.sup == 0.0);
        CHECK(g.at_one_ms <= 0.0);
    }
    SUBCASE("fast-vcg: racing ahead pays") {
        // Bidder 2 arrives at 95, behind bidder 1 (80) and bidder 3 (90).
        const auto g = lai_gains({mechanisms::Kind::FastVcg, 1.0, 0, 1}, bids, p, h, 1, 30.0, {1.0, 5.0, 20.0});
        CHECK(g.gain[0] == 0.0);
        CHECK(g.gain[1] == 0.0);
        CHECK(g.gain[2] == doctest::Approx(60.0));  // arrives at 75, alone, pays 0
        CHECK(g.sup == doctest::Approx(60.0));
    }
    SUBCASE("sync-vcg is timing neutral") {
        const auto g = lai_gains({mechanisms::Kind::SyncVcg, 1.0, 0, 1}, bids, p, h, 1, 30.0, grid);
        CHECK(g.sup == 0.0);
    }
    SUBCASE("an infeasible agent can become feasible") {
        const auto q = profile_from_slacks({20.0, -3.0, 10.0}, 100.0);
        const auto g = lai_gains({mechanisms::Kind::SyncVcg, 1.0, 0, 1}, truthful({50, 90, 70}), q, h, 1, 10.0, {1.0, 5.0});
        CHECK(g.gain[0] == 0.0);
        CHECK(g.gain[1] == doctest::Approx(20.0));
    }
}

TEST_CASE("LAI grid") {
    topology::DelayMap small{0, {0.0, 3.0, 40.0}};
    const auto g = lai_grid(small);
    CHECK(std::find(g.begin(), g.end(), 1.0) != g.end());
    CHECK(g.back() == 50.0);
    topology::DelayMap big{0, {0.0, 5000.0, INFINITY}};
    const auto gb = lai_grid(big);
    CHECK(gb.back() == doctest::Approx(5000.0));
    CHECK(std::find(gb.begin(), gb.end(), 1.0) != gb.end());
    CHECK(std::is_sorted(gb.begin(), gb.end()));
}

TEST_CASE("aggregation") {
    CHECK(std::isnan(mean({})));
    CHECK(mean({1, 2, 3, 4}) == 2.5);
    CHECK(quantile({4, 1, 3, 2}, 0.5) == 2.5);
    CHECK(quantile({1, 2, 3, 4, 5}, 0.1) == doctest::Approx(1.4));

    SUBCASE("compensated sum keeps small terms") {
        CompensatedSum s;
        s.add(1e16);
        for (int i = 0; i < 1000; ++i) s.add(1.0);
        s.add(-1e16);
        CHECK(s.value() == 1000.0);
    }
    SUBCASE("constant samples give a degenerate interval") {
        const auto ci = bootstrap_ci(std::vector<double>(50, 3.5), 0.95, 500, 1);
        CHECK(ci.lo == 3.5);
        CHECK(ci.hi == 3.5);
        CHECK(ci.mean == 3.5);
    }
    SUBCASE("balanced coin") {
        std::vector<double> xs;
        for (int i = 0; i < 500; ++i) {
            xs.push_back(0.0);
            xs.push_back(1.0);
        }
        const auto ci = bootstrap_ci(xs, 0.95, 2000, 9);
        CHECK(ci.mean == 0.5);
        CHECK(ci.lo > 0.4);
        CHECK(ci.hi < 0.6);
        CHECK(ci.lo < 0.5);
        CHECK(ci.hi > 0.5);
    }
    SUBCASE("one resample gives one resample mean") {
        const auto ci = bootstrap_ci({1.0, 2.0, 3.0, 10.0}, 0.9, 1, 4);
        CHECK(ci.lo == ci.hi);
        // Means of 4 draws from the sample are multiples of 0.25.
        CHECK(std::fmod(ci.lo * 4.0, 1.0) == 0.0);
    }
    SUBCASE("deterministic for a seed") {
        const std::vector<double> xs{1, 5, 2, 8, 3};
        CHECK(bootstrap_ci(xs, 0.95, 300, 77).lo == bootstrap_ci(xs, 0.95, 300, 77).lo);
    }
    SUBCASE("summary drops NaN") {
        const auto s = summarize({1.0, kNaN, 3.0}, 0.95, 0, 1);
        CHECK(s.count == 2);
        CHECK(s.mean == 2.0);
        CHECK(std::isnan(s.ci_lo));
    }
    CHECK_THROWS_AS(bootstrap_ci({}, 0.95, 10, 1), Error);
    CHECK_THROWS_AS(bootstrap_ci({1.0}, 1.5, 10, 1), Error);
}
