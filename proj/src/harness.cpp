#include "lia/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "lia/error.hpp"
#include "lia/rng.hpp"

namespace lia::harness {

using auction::Bid;
using auction::ErrorModel;
using mechanisms::MechanismConfig;
using nlohmann::json;

namespace {

constexpr std::uint64_t kPilotStream = 0x70696C6F74ULL;

// Tuned per generator so that the observed feasible-slack spread and waiting
// latencies match the reference measurements for each environment.
constexpr double kStarlinkWindowMs = 33.5;
constexpr double kInternetWindowMs = 8.0;
constexpr double kDsnWindowMs = 20.0;

std::string format_number(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

bool same_lambda(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::string noise_tag(const ErrorModel& m) {
    return auction::error_kind_name(m.kind) + "/" + format_number(m.epsilon);
}

template <class T>
T get_field(const json& doc, const char* key) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("config field '") + key + "': " + e.what());
    }
}

struct CellContext {
    CellInfo info;
    topology::Topology topo;
    topology::DelayMap delays;
};

struct InstanceOutput {
    std::vector<Record> records;
    double feasible_fraction = 0.0;
    double delta_spread = 0.0;
    Checks checks;
    json violation;  // first welfare-bound violation, if any
    std::exception_ptr error;
};

std::vector<ErrorModel> noise_settings(const SweepConfig& c) {
    std::vector<ErrorModel> out;
    for (const auto& name : c.error_models) {
        const auto kind = auction::parse_error_kind(name);
        if (kind == auction::ErrorKind::None) {
            out.push_back({kind, 0.0});
            continue;
        }
        for (double eps : c.epsilon_list) out.push_back({kind, eps});
    }
    return out;
}

bool same_allocation(const mechanisms::Outcome& a, const mechanisms::Outcome& b) {
    if (a.winners != b.winners || a.payments.size() != b.payments.size()) return false;
    for (std::size_t i = 0; i < a.payments.size(); ++i) {
        const double scale = std::max({1.0, std::abs(a.payments[i]), std::abs(b.payments[i])});
        if (std::abs(a.payments[i] - b.payments[i]) > 1e-9 * scale) return false;
    }
    return true;
}

InstanceOutput evaluate_instance(const CellContext& cell, std::size_t cell_index, std::size_t k, const SweepConfig& config,
                                 const std::vector<MechanismConfig>& variants, const std::vector<ErrorModel>& settings) {
    InstanceOutput out;
    const std::uint64_t seed = derive_seed(cell.info.seed, k);
    const AuctionInstance inst = gen_instance(cell.topo, cell.delays, cell.info.n, cell.info.horizon_ms,
                                              cell.info.emission_window_ms, config.value_lo, config.value_hi, seed);
    const auto base = auction::compute_slacks(inst.bids, inst.horizon, cell.delays);
    out.feasible_fraction = static_cast<double>(base.feasible_count()) / static_cast<double>(inst.bids.size());
    out.delta_spread = base.delta_spread;

    // The same uniformly drawn feasible bidder is the LAI agent for every mechanism.
    std::ptrdiff_t agent = -1;
    {
        std::vector<std::size_t> feasible;
        for (std::size_t i = 0; i < inst.bids.size(); ++i)
            if (base.feasible[i]) feasible.push_back(i);
        Rng rng(derive_seed(seed, stable_hash("lai-agent")));
        if (!feasible.empty()) agent = static_cast<std::ptrdiff_t>(feasible[uniform_index(rng, feasible.size())]);
    }

    std::vector<mechanisms::Outcome> noiseless(variants.size());
    std::vector<char> have_noiseless(variants.size(), 0);
    auto noiseless_outcome = [&](std::size_t v) -> const mechanisms::Outcome& {
        if (!have_noiseless[v]) {
            noiseless[v] = mechanisms::run(variants[v], inst.bids, base, inst.horizon, false);
            have_noiseless[v] = 1;
        }
        return noiseless[v];
    };

    const double rate_per_ms = config.decay_rate_per_s / 1000.0;
    for (std::size_t s = 0; s < settings.size(); ++s) {
        const ErrorModel& noise = settings[s];
        const auto profile = auction::apply_error_model(base, inst.bids, cell.topo, cell.delays, noise,
                                                        derive_seed(seed, stable_hash("noise/" + auction::error_kind_name(noise.kind))));
        std::ptrdiff_t sync_at = -1, holdback_at = -1;
        for (std::size_t v = 0; v < variants.size(); ++v) {
            const MechanismConfig& mech = variants[v];
            const auto outcome = mechanisms::run(mech, inst.bids, profile, inst.horizon, config.measure_compute_time);
            const auto ratios = metrics::welfare_ratios(outcome, inst.bids, profile);

            Record r;
            r.topology = cell.info.topology;
            r.mechanism = mech.label();
            r.n = cell.info.n;
            r.lambda_per_s = mech.uses_lambda() ? mech.lambda_per_s : metrics::kNaN;
            r.epsilon_ms = noise.epsilon;
            r.error_model = auction::error_kind_name(noise.kind);
            r.seed = seed;
            r.sw_ratio_all = ratios.sw_all;
            r.sw_ratio_feas = ratios.sw_feas;
            r.reachability = ratios.reachability;
            r.rev_ratio = metrics::revenue_ratio(outcome, inst.bids);
            r.clearing_latency_ms = metrics::clearing_latency(outcome, inst.bids);
            r.compute_time_ms = config.measure_compute_time ? outcome.compute_time_ms : metrics::kNaN;
            r.cell = cell_index;
            r.instance = k;
            r.variant = v;
            r.setting = s;
            r.decision_time_ms = outcome.decision_time;
            r.delta_spread_ms = profile.delta_spread;
            r.error_spread_ms = profile.error_spread;
            r.winner_value = ratios.welfare;
            r.opt_feas = ratios.opt_feas;
            r.winners = outcome.winners;
            r.payments = outcome.payments;
            r.sw_eff = std::isnan(r.clearing_latency_ms) ? 0.0 : metrics::effective_welfare(ratios.welfare, r.clearing_latency_ms, rate_per_ms);

            if (config.lai && agent >= 0) {
                const auto a = static_cast<std::size_t>(agent);
                const auto gains = metrics::lai_gains(mech, inst.bids, profile, inst.horizon, a,
                                                      cell.delays.dist[inst.bids[a].node], cell.info.lai_grid);
                r.lai_sup = gains.sup;
                r.lai_marginal_1ms = gains.at_one_ms;
                r.lai_curve = gains.gain;
            }

            if (config.check_welfare_bound && mech.kind == mechanisms::Kind::Lia && !outcome.no_feasible()) {
                const double lambda = mech.lambda_per_s / 1000.0;
                const double bound = std::exp(-lambda * (profile.delta_spread + profile.error_spread)) * ratios.opt_feas;
                ++out.checks.welfare_bound_checked;
                if (ratios.welfare < bound * (1.0 - 1e-12)) {
                    ++out.checks.welfare_bound_violations;
                    if (out.violation.is_null()) {
                        out.violation = auction::instance_to_json(cell.info.topology + ":" + std::to_string(cell.topo.seed), inst.horizon, inst.bids);
                        out.violation["error_model"] = auction::error_model_to_json(noise);
                        out.violation["est_slack_ms"] = profile.est_slack;
                        out.violation["outcome"] = mechanisms::outcome_to_json(outcome);
                        out.violation["bound"] = bound;
                        out.violation["instance_seed"] = seed;
                    }
                }
            }

            if (noise.kind == auction::ErrorKind::ClockBias && noise.epsilon > 0.0) {
                ++out.checks.clock_bias_compared;
                if (!same_allocation(outcome, noiseless_outcome(v))) ++out.checks.clock_bias_mismatches;
            }
            if (mech.kind == mechanisms::Kind::SyncVcg) sync_at = static_cast<std::ptrdiff_t>(out.records.size());
            if (mech.kind == mechanisms::Kind::HoldBack) holdback_at = static_cast<std::ptrdiff_t>(out.records.size());
            out.records.push_back(std::move(r));
        }
        if (sync_at >= 0 && holdback_at >= 0) {
            const Record& a = out.records[static_cast<std::size_t>(sync_at)];
            const Record& b = out.records[static_cast<std::size_t>(holdback_at)];
            ++out.checks.sync_holdback_compared;
            if (a.winners != b.winners || a.payments != b.payments) ++out.checks.sync_holdback_mismatches;
        }
    }
    return out;
}

void accumulate(Checks& into, const Checks& from) {
    into.welfare_bound_checked += from.welfare_bound_checked;
    into.welfare_bound_violations += from.welfare_bound_violations;
    into.sync_holdback_compared += from.sync_holdback_compared;
    into.sync_holdback_mismatches += from.sync_holdback_mismatches;
    into.clock_bias_compared += from.clock_bias_compared;
    into.clock_bias_mismatches += from.clock_bias_mismatches;
}

}  // namespace

std::string run_kind_name(RunKind kind) {
    switch (kind) {
        case RunKind::Sweep: return "sweep";
        case RunKind::Robustness: return "robustness";
        case RunKind::Large: return "large";
        case RunKind::Lai: return "lai";
    }
    return "sweep";
}

SweepConfig SweepConfig::defaults_for(RunKind kind) {
    SweepConfig c;
    switch (kind) {
        case RunKind::Sweep: break;
        case RunKind::Robustness:
            c.topologies = {topology::Kind::Starlink200, topology::Kind::Internet100};
            c.n_list = {50};
            c.mechanisms = {"lia"};
            c.lambda_list = {1.0};
            c.error_models = {"iid", "clock_bias", "distance", "subnet"};
            c.epsilon_list = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
            break;
        case RunKind::Large:
            c.n_list = {1000};
            c.mechanisms = {"lia", "sync_vcg", "fast_vcg"};
            c.lambda_list = {0.25, 1.0};
            break;
        case RunKind::Lai:
            c.n_list = {50};
            break;
    }
    return c;
}

std::vector<MechanismConfig> SweepConfig::variants() const {
    std::vector<MechanismConfig> out;
    for (const auto& name : mechanisms) {
        const auto kind = mechanisms::parse_kind(name);
        switch (kind) {
            case mechanisms::Kind::Lia:
            case mechanisms::Kind::LiaK:
                for (double l : lambda_list) out.push_back({kind, l, 0.0, kind == mechanisms::Kind::LiaK ? k : 1});
                break;
            case mechanisms::Kind::BatchVcg:
                for (double b : batch_list) out.push_back({kind, 0.0, b, 1});
                break;
            default: out.push_back({kind, 0.0, 0.0, 1});
        }
    }
    return out;
}

void SweepConfig::validate() const {
    auto bad = [](const std::string& msg) { fail(ErrorKind::Config, msg); };
    if (topologies.empty() && topology_file.empty()) bad("no topology selected");
    if (n_list.empty()) bad("n_list is empty");
    for (int n : n_list)
        if (n < 1) bad("every n in n_list must be at least 1");
    if (mechanisms.empty()) bad("mechanism list is empty");
    if (instances < 1) bad("instances must be at least 1");
    for (double e : epsilon_list)
        if (!(e >= 0.0)) bad("epsilon values must be non-negative");
    if (error_models.empty()) bad("error_models is empty");
    for (const auto& m : error_models) auction::parse_error_kind(m);
    if (!(value_lo >= 0.0 && value_hi >= value_lo)) bad("value bounds must satisfy 0 <= value_lo <= value_hi");
    if (!(target_feasible > 0.0 && target_feasible <= 1.0)) bad("target_feasible must lie in (0, 1]");
    if (!(decay_rate_per_s >= 0.0)) bad("decay_rate_per_s must be non-negative");
    if (emission_window_ms && !(*emission_window_ms >= 0.0)) bad("emission_window_ms must be non-negative");
    if (bootstrap_resamples < 0) bad("bootstrap_resamples must be non-negative");
    if (!(ci_level > 0.0 && ci_level < 1.0)) bad("ci_level must lie in (0, 1)");
    if (jobs < 0) bad("jobs must be non-negative");
    const auto vs = variants();
    if (vs.empty()) bad("mechanism list expands to no variants (empty lambda_list or batch_list?)");
    for (const auto& v : vs) v.validate();
}

SweepConfig config_from_json(const json& doc, SweepConfig c) {
    if (!doc.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
    static const std::set<std::string> known{
        "topologies", "topology_seed", "topology_file", "n_list", "mechanisms", "lambda_list", "batch_list", "k",
        "instances", "error_models", "epsilon_list", "error_model", "value_lo", "value_hi", "target_feasible",
        "decay_rate_per_s", "emission_window_ms", "pilot_instances", "seed", "jobs", "lai", "measure_compute_time",
        "check_welfare_bound", "bootstrap_resamples", "ci_level", "artifact_dir"};
    for (const auto& [key, _] : doc.items())
        if (!known.count(key)) fail(ErrorKind::Config, "unknown config field '" + key + "'");

    if (doc.contains("topologies")) {
        c.topologies.clear();
        for (const auto& name : get_field<std::vector<std::string>>(doc, "topologies")) {
            try {
                c.topologies.push_back(topology::parse_kind(name));
            } catch (const Error& e) {
                fail(ErrorKind::Config, std::string("config field 'topologies': ") + e.what());
            }
        }
    }
    if (doc.contains("topology_seed")) c.topology_seed = get_field<std::uint64_t>(doc, "topology_seed");
    if (doc.contains("topology_file")) c.topology_file = get_field<std::string>(doc, "topology_file");
    if (doc.contains("n_list")) c.n_list = get_field<std::vector<int>>(doc, "n_list");
    if (doc.contains("mechanisms")) c.mechanisms = get_field<std::vector<std::string>>(doc, "mechanisms");
    if (doc.contains("lambda_list")) c.lambda_list = get_field<std::vector<double>>(doc, "lambda_list");
    if (doc.contains("batch_list")) c.batch_list = get_field<std::vector<double>>(doc, "batch_list");
    if (doc.contains("k")) c.k = get_field<int>(doc, "k");
    if (doc.contains("instances")) c.instances = get_field<int>(doc, "instances");
    if (doc.contains("error_models")) c.error_models = get_field<std::vector<std::string>>(doc, "error_models");
    if (doc.contains("epsilon_list")) c.epsilon_list = get_field<std::vector<double>>(doc, "epsilon_list");
    if (doc.contains("error_model")) {
        const auto m = auction::error_model_from_json(doc.at("error_model"));
        c.error_models = {auction::error_kind_name(m.kind)};
        c.epsilon_list = {m.epsilon};
    }
    if (doc.contains("value_lo")) c.value_lo = get_field<double>(doc, "value_lo");
    if (doc.contains("value_hi")) c.value_hi = get_field<double>(doc, "value_hi");
    if (doc.contains("target_feasible")) c.target_feasible = get_field<double>(doc, "target_feasible");
    if (doc.contains("decay_rate_per_s")) c.decay_rate_per_s = get_field<double>(doc, "decay_rate_per_s");
    if (doc.contains("emission_window_ms")) {
        if (doc.at("emission_window_ms").is_null()) c.emission_window_ms.reset();
        else c.emission_window_ms = get_field<double>(doc, "emission_window_ms");
    }
    if (doc.contains("pilot_instances")) c.pilot_instances = get_field<int>(doc, "pilot_instances");
    if (doc.contains("seed")) c.seed = get_field<std::uint64_t>(doc, "seed");
    if (doc.contains("jobs")) c.jobs = get_field<int>(doc, "jobs");
    if (doc.contains("lai")) c.lai = get_field<bool>(doc, "lai");
    if (doc.contains("measure_compute_time")) c.measure_compute_time = get_field<bool>(doc, "measure_compute_time");
    if (doc.contains("check_welfare_bound")) c.check_welfare_bound = get_field<bool>(doc, "check_welfare_bound");
    if (doc.contains("bootstrap_resamples")) c.bootstrap_resamples = get_field<int>(doc, "bootstrap_resamples");
    if (doc.contains("ci_level")) c.ci_level = get_field<double>(doc, "ci_level");
    if (doc.contains("artifact_dir")) c.artifact_dir = get_field<std::string>(doc, "artifact_dir");
    c.validate();
    return c;
}

json config_to_json(const SweepConfig& c) {
    json topologies = json::array();
    for (auto k : c.topologies) topologies.push_back(topology::kind_name(k));
    json doc = {{"topologies", topologies},
                {"topology_seed", c.topology_seed},
                {"n_list", c.n_list},
                {"mechanisms", c.mechanisms},
                {"lambda_list", c.lambda_list},
                {"batch_list", c.batch_list},
                {"k", c.k},
                {"instances", c.instances},
                {"error_models", c.error_models},
                {"epsilon_list", c.epsilon_list},
                {"value_lo", c.value_lo},
                {"value_hi", c.value_hi},
                {"target_feasible", c.target_feasible},
                {"decay_rate_per_s", c.decay_rate_per_s},
                {"pilot_instances", c.pilot_instances},
                {"seed", c.seed},
                {"lai", c.lai},
                {"measure_compute_time", c.measure_compute_time},
                {"check_welfare_bound", c.check_welfare_bound},
                {"bootstrap_resamples", c.bootstrap_resamples},
                {"ci_level", c.ci_level}};
    if (!c.topology_file.empty()) doc["topology_file"] = c.topology_file;
    doc["emission_window_ms"] = c.emission_window_ms ? json(*c.emission_window_ms) : json(nullptr);
    return doc;
}

double default_emission_window(topology::Kind kind, const topology::DelayMap& delays) {
    switch (kind) {
        case topology::Kind::Starlink200: return kStarlinkWindowMs;
        case topology::Kind::Internet100: return kInternetWindowMs;
        case topology::Kind::Dsn30: return kDsnWindowMs;
        case topology::Kind::Custom: break;
    }
    double lo = topology::kInfinity, hi = 0.0;
    for (std::size_t v = 0; v < delays.dist.size(); ++v) {
        if (v == delays.horizon_node || !std::isfinite(delays.dist[v])) continue;
        lo = std::min(lo, delays.dist[v]);
        hi = std::max(hi, delays.dist[v]);
    }
    return hi > lo ? hi - lo : 0.0;
}

AuctionInstance gen_instance(const topology::Topology& topo, const topology::DelayMap& delays, int n, double horizon_ms,
                             double emission_window, double value_lo, double value_hi, std::uint64_t seed) {
    Rng rng(seed);
    AuctionInstance inst;
    inst.seed = seed;
    inst.horizon = {delays.horizon_node, horizon_ms};
    inst.bids = auction::sample_bids(topo, delays.horizon_node, {n, emission_window, value_lo, value_hi}, rng);
    return inst;
}

RunResult run(RunKind kind, const SweepConfig& config) {
    config.validate();
    RunResult result;
    result.kind = kind;
    result.config = config;

    const auto variants = config.variants();
    const auto settings = noise_settings(config);

    std::vector<topology::Topology> graphs;
    if (!config.topology_file.empty()) graphs.push_back(topology::load(config.topology_file));

    std::vector<CellContext> cells;
    const std::size_t kinds = config.topology_file.empty() ? config.topologies.size() : 1;
    for (std::size_t t = 0; t < kinds; ++t) {
        for (int n : config.n_list) {
            CellContext cell;
            // Each cell rebuilds its graph from the topology seed.
            cell.topo = config.topology_file.empty() ? topology::generate(config.topologies[t], config.topology_seed) : graphs.front();
            cell.delays = topology::distances_to_horizon(cell.topo, 0);
            cell.info.topology = topology::kind_name(cell.topo.kind);
            cell.info.n = n;
            cell.info.seed = derive_seed(config.seed, stable_hash(cell.info.topology + "/n=" + std::to_string(n)));
            cell.info.emission_window_ms = config.emission_window_ms.value_or(default_emission_window(cell.topo.kind, cell.delays));
            const auction::BidSampler sampler{n, cell.info.emission_window_ms, config.value_lo, config.value_hi};
            const auto horizon = auction::choose_horizon(cell.topo, cell.delays, sampler, config.target_feasible,
                                                         derive_seed(cell.info.seed, kPilotStream), config.pilot_instances);
            cell.info.horizon_ms = horizon.time;
            cell.info.pilot_fraction = horizon.achieved_fraction;
            cell.info.horizon_target_met = horizon.target_met;
            cell.info.lai_grid = metrics::lai_grid(cell.delays);
            cells.push_back(std::move(cell));
        }
    }

    const std::size_t per_cell = static_cast<std::size_t>(config.instances);
    const std::size_t tasks = cells.size() * per_cell;
    std::vector<InstanceOutput> outputs(tasks);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < tasks; t = next++) {
            try {
                outputs[t] = evaluate_instance(cells[t / per_cell], t / per_cell, t % per_cell, config, variants, settings);
            } catch (...) {
                outputs[t].error = std::current_exception();
            }
        }
    };
    unsigned jobs = config.jobs > 0 ? static_cast<unsigned>(config.jobs) : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(tasks, 1)));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (auto& o : outputs)
        if (o.error) std::rethrow_exception(o.error);

    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<double> fractions, spreads;
        for (std::size_t k = 0; k < per_cell; ++k) {
            InstanceOutput& o = outputs[c * per_cell + k];
            fractions.push_back(o.feasible_fraction);
            spreads.push_back(o.delta_spread);
            accumulate(result.checks, o.checks);
            if (!o.violation.is_null() && result.checks.welfare_bound_violations == o.checks.welfare_bound_violations) {
                std::string where = "(not written: no artifact directory)";
                if (!config.artifact_dir.empty()) {
                    std::filesystem::create_directories(config.artifact_dir);
                    where = (std::filesystem::path(config.artifact_dir) / "welfare_bound_violation.json").string();
                    std::ofstream(where) << o.violation.dump(2) << '\n';
                }
                fail(ErrorKind::Assertion, "welfare bound violated in " + cells[c].info.topology + " n=" + std::to_string(cells[c].info.n) +
                                               " instance " + std::to_string(k) + "; instance saved to " + where);
            }
            for (auto& r : o.records) result.records.push_back(std::move(r));
        }
        cells[c].info.feasible_fraction = metrics::mean(fractions);
        cells[c].info.slack_spread_median = metrics::quantile(spreads, 0.5);
        cells[c].info.slack_spread_p95 = metrics::quantile(spreads, 0.95);
        result.cells.push_back(cells[c].info);
    }
    return result;
}

RunResult run_sweep(const SweepConfig& config) { return run(RunKind::Sweep, config); }
RunResult run_robustness(const SweepConfig& config) {
    bool has_lia = false;
    for (const auto& m : config.mechanisms) has_lia = has_lia || m == "lia";
    if (!has_lia) fail(ErrorKind::Config, "robustness runs need 'lia' in the mechanism list");
    return run(RunKind::Robustness, config);
}
RunResult run_large(const SweepConfig& config) { return run(RunKind::Large, config); }

double metric_value(const Record& r, const std::string& metric) {
    if (metric == "sw_ratio_all") return r.sw_ratio_all;
    if (metric == "sw_ratio_feas") return r.sw_ratio_feas;
    if (metric == "reachability") return r.reachability;
    if (metric == "rev_ratio") return r.rev_ratio;
    if (metric == "clearing_latency_ms") return r.clearing_latency_ms;
    if (metric == "compute_time_ms") return r.compute_time_ms;
    if (metric == "lai_sup") return r.lai_sup;
    if (metric == "lai_marginal_1ms") return r.lai_marginal_1ms;
    if (metric == "sw_eff") return r.sw_eff;
    fail(ErrorKind::Input, "unknown metric '" + metric + "'");
}

std::vector<double> paired_differences(const RunResult& result, const std::string& mechanism_a, double lambda_a,
                                       const std::string& mechanism_b, double lambda_b, const std::string& metric,
                                       const std::string& topology, int n) {
    using Key = std::tuple<std::size_t, std::size_t, std::size_t>;
    std::map<Key, double> a_values, b_values;
    for (const Record& r : result.records) {
        if (!topology.empty() && r.topology != topology) continue;
        if (n > 0 && r.n != n) continue;
        const Key key{r.cell, r.instance, r.setting};
        if (r.mechanism == mechanism_a && same_lambda(r.lambda_per_s, lambda_a)) a_values[key] = metric_value(r, metric);
        if (r.mechanism == mechanism_b && same_lambda(r.lambda_per_s, lambda_b)) b_values[key] = metric_value(r, metric);
    }
    std::vector<double> diffs;
    for (const auto& [key, a] : a_values) {
        const auto it = b_values.find(key);
        if (it != b_values.end() && !std::isnan(a) && !std::isnan(it->second)) diffs.push_back(a - it->second);
    }
    return diffs;
}

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{
        "topology", "mechanism", "n", "lambda_per_s", "epsilon_ms", "error_model", "seed", "sw_ratio_all", "sw_ratio_feas",
        "reachability", "rev_ratio", "clearing_latency_ms", "compute_time_ms", "lai_sup", "lai_marginal_1ms"};
    return cols;
}

void write_records_csv(const RunResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path);
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const Record& r : result.records) {
        out << r.topology << ',' << r.mechanism << ',' << r.n << ',' << format_number(r.lambda_per_s) << ','
            << format_number(r.epsilon_ms) << ',' << r.error_model << ',' << r.seed << ',' << format_number(r.sw_ratio_all) << ','
            << format_number(r.sw_ratio_feas) << ',' << format_number(r.reachability) << ',' << format_number(r.rev_ratio) << ','
            << format_number(r.clearing_latency_ms) << ',' << format_number(r.compute_time_ms) << ',' << format_number(r.lai_sup)
            << ',' << format_number(r.lai_marginal_1ms) << '\n';
    }
}

namespace {

// Cells kept for LAI curves: the largest n of each topology.
std::vector<std::size_t> curve_cells(const RunResult& result) {
    std::map<std::string, std::size_t> best;
    for (std::size_t c = 0; c < result.cells.size(); ++c) {
        auto it = best.find(result.cells[c].topology);
        if (it == best.end() || result.cells[it->second].n < result.cells[c].n) best[result.cells[c].topology] = c;
    }
    std::vector<std::size_t> out;
    for (const auto& [_, c] : best) out.push_back(c);
    std::sort(out.begin(), out.end());
    return out;
}

json summary_json(const metrics::Summary& s) {
    auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    return {{"count", s.count}, {"mean", num(s.mean)}, {"median", num(s.median)}, {"p10", num(s.p10)},
            {"p90", num(s.p90)}, {"ci_lo", num(s.ci_lo)}, {"ci_hi", num(s.ci_hi)}};
}

}  // namespace

void write_lai_curves_csv(const RunResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path);
    out << "topology,mechanism,lambda,delta_ms,g_mean,g_ci_lo,g_ci_hi\n";
    const auto variants = result.config.variants();
    for (std::size_t c : curve_cells(result)) {
        const CellInfo& cell = result.cells[c];
        for (std::size_t v = 0; v < variants.size(); ++v) {
            for (std::size_t g = 0; g < cell.lai_grid.size(); ++g) {
                std::vector<double> samples;
                for (const Record& r : result.records)
                    if (r.cell == c && r.variant == v && r.setting == 0 && g < r.lai_curve.size() && !std::isnan(r.lai_curve[g]))
                        samples.push_back(r.lai_curve[g]);
                if (samples.empty()) continue;
                const std::string key = "lai/" + cell.topology + "/" + variants[v].label() + "/" + format_number(variants[v].lambda_per_s) + "/" + std::to_string(g);
                const int resamples = std::max(1, result.config.bootstrap_resamples);
                const auto ci = metrics::bootstrap_ci(samples, result.config.ci_level, resamples, derive_seed(result.config.seed, stable_hash(key)));
                out << cell.topology << ',' << variants[v].label() << ','
                    << format_number(variants[v].uses_lambda() ? variants[v].lambda_per_s : metrics::kNaN) << ','
                    << format_number(cell.lai_grid[g]) << ',' << format_number(ci.mean) << ',' << format_number(ci.lo) << ','
                    << format_number(ci.hi) << '\n';
            }
        }
    }
}

json summarize(const RunResult& result) {
    const SweepConfig& cfg = result.config;
    const auto variants = cfg.variants();
    const auto settings = noise_settings(cfg);
    static const std::vector<std::string> metric_names{"sw_ratio_all", "sw_ratio_feas", "reachability", "rev_ratio", "clearing_latency_ms",
                                                       "compute_time_ms", "lai_sup", "lai_marginal_1ms", "sw_eff"};
    static const std::set<std::string> with_ci{"sw_ratio_all", "rev_ratio", "clearing_latency_ms", "compute_time_ms", "lai_sup"};

    auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    auto seed_for = [&](const std::string& key) { return derive_seed(cfg.seed, stable_hash(key)); };

    json doc;
    doc["run"] = run_kind_name(result.kind);
    doc["config"] = config_to_json(cfg);

    json cells = json::array();
    for (const CellInfo& c : result.cells)
        cells.push_back({{"topology", c.topology}, {"n", c.n}, {"horizon_ms", c.horizon_ms}, {"pilot_feasible_fraction", c.pilot_fraction},
                         {"horizon_target_met", c.horizon_target_met}, {"emission_window_ms", c.emission_window_ms},
                         {"feasible_fraction", c.feasible_fraction}, {"slack_spread_median_ms", c.slack_spread_median},
                         {"slack_spread_p95_ms", c.slack_spread_p95}, {"lai_grid_ms", c.lai_grid}});
    doc["cells"] = cells;

    // Bucket record indices by (cell, setting, variant) and by (topology, setting, variant).
    const std::size_t S = settings.size(), V = variants.size();
    std::vector<std::vector<const Record*>> by_cell(result.cells.size() * S * V);
    std::vector<std::string> topo_order;
    for (const CellInfo& c : result.cells)
        if (std::find(topo_order.begin(), topo_order.end(), c.topology) == topo_order.end()) topo_order.push_back(c.topology);
    std::vector<std::vector<const Record*>> by_topology(topo_order.size() * S * V);
    for (const Record& r : result.records) {
        by_cell[(r.cell * S + r.setting) * V + r.variant].push_back(&r);
        const auto t = static_cast<std::size_t>(std::find(topo_order.begin(), topo_order.end(), r.topology) - topo_order.begin());
        by_topology[(t * S + r.setting) * V + r.variant].push_back(&r);
    }

    auto group_doc = [&](const std::vector<const Record*>& rs, const std::string& key, bool full) {
        json metrics_doc;
        for (const auto& m : metric_names) {
            std::vector<double> xs;
            xs.reserve(rs.size());
            for (const Record* r : rs) xs.push_back(metric_value(*r, m));
            const bool ci = with_ci.count(m) && (full || m == "sw_ratio_all");
            metrics_doc[m] = summary_json(metrics::summarize(xs, cfg.ci_level, ci ? cfg.bootstrap_resamples : 0, seed_for(key + "/" + m)));
        }
        return metrics_doc;
    };
    auto group_head = [&](const std::string& topology, json n, std::size_t s, std::size_t v) {
        return json{{"topology", topology}, {"n", n}, {"mechanism", variants[v].label()},
                    {"lambda_per_s", num(variants[v].uses_lambda() ? variants[v].lambda_per_s : metrics::kNaN)},
                    {"error_model", auction::error_kind_name(settings[s].kind)}, {"epsilon_ms", settings[s].epsilon}};
    };

    json groups = json::array();
    for (std::size_t c = 0; c < result.cells.size(); ++c)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t v = 0; v < V; ++v) {
                const auto& rs = by_cell[(c * S + s) * V + v];
                if (rs.empty()) continue;
                json g = group_head(result.cells[c].topology, result.cells[c].n, s, v);
                const std::string key = "group/" + result.cells[c].topology + "/" + std::to_string(result.cells[c].n) + "/" + noise_tag(settings[s]) + "/" + variants[v].label() + "/" + format_number(variants[v].lambda_per_s);
                g["metrics"] = group_doc(rs, key, true);
                groups.push_back(std::move(g));
            }
    doc["groups"] = groups;

    json pooled = json::array();
    for (std::size_t t = 0; t < topo_order.size(); ++t)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t v = 0; v < V; ++v) {
                const auto& rs = by_topology[(t * S + s) * V + v];
                if (rs.empty()) continue;
                json g = group_head(topo_order[t], "all", s, v);
                const std::string key = "pooled/" + topo_order[t] + "/" + noise_tag(settings[s]) + "/" + variants[v].label() + "/" + format_number(variants[v].lambda_per_s);
                g["metrics"] = group_doc(rs, key, false);
                pooled.push_back(std::move(g));
            }
    doc["pooled"] = pooled;

    // LIA against every other mechanism on shared instances, per cell and pooled over n.
    json paired = json::array();
    auto add_pair = [&](const std::string& topology, json n_value, int n, const MechanismConfig& a, const MechanismConfig& b) {
        const double la = a.uses_lambda() ? a.lambda_per_s : metrics::kNaN;
        const double lb = b.uses_lambda() ? b.lambda_per_s : metrics::kNaN;
        for (const std::string metric : {"sw_ratio_all", "clearing_latency_ms"}) {
            const auto d = paired_differences(result, a.label(), la, b.label(), lb, metric, topology, n);
            if (d.empty()) continue;
            const std::string key = "paired/" + topology + "/" + n_value.dump() + "/" + a.label() + format_number(la) + "/" + b.label() + format_number(lb) + "/" + metric;
            const int resamples = metric == "sw_ratio_all" ? cfg.bootstrap_resamples : 0;
            json entry = {{"topology", topology}, {"n", n_value}, {"a", a.label()}, {"a_lambda_per_s", num(la)}, {"b", b.label()},
                          {"b_lambda_per_s", num(lb)}, {"metric", metric}};
            entry["difference"] = summary_json(metrics::summarize(d, cfg.ci_level, resamples, seed_for(key)));
            paired.push_back(std::move(entry));
        }
    };
    if (S == 1) {
        for (const auto& a : variants) {
            if (a.kind != mechanisms::Kind::Lia) continue;
            for (const auto& b : variants) {
                if (b.kind == mechanisms::Kind::Lia || b.kind == mechanisms::Kind::LiaK) continue;
                for (const CellInfo& c : result.cells) add_pair(c.topology, c.n, c.n, a, b);
                for (const auto& t : topo_order) add_pair(t, "all", 0, a, b);
            }
        }
    }
    doc["paired"] = paired;

    doc["checks"] = {{"welfare_bound_checked", result.checks.welfare_bound_checked},
                     {"welfare_bound_violations", result.checks.welfare_bound_violations},
                     {"sync_holdback_compared", result.checks.sync_holdback_compared},
                     {"sync_holdback_mismatches", result.checks.sync_holdback_mismatches},
                     {"clock_bias_compared", result.checks.clock_bias_compared},
                     {"clock_bias_mismatches", result.checks.clock_bias_mismatches}};
    return doc;
}

void write_summary_json(const RunResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path);
    out << summarize(result).dump(2) << '\n';
}

std::string comparison_table(const RunResult& result) {
    const auto variants = result.config.variants();
    const auto settings = noise_settings(result.config);
    std::ostringstream os;
    char line[256];
    for (std::size_t c : curve_cells(result)) {
        const CellInfo& cell = result.cells[c];
        for (std::size_t s = 0; s < settings.size(); ++s) {
            os << cell.topology << "  n=" << cell.n << "  horizon=" << format_number(cell.horizon_ms) << " ms  feasible="
               << format_number(cell.feasible_fraction);
            if (settings[s].kind != auction::ErrorKind::None) os << "  noise=" << noise_tag(settings[s]);
            os << '\n';
            std::snprintf(line, sizeof line, "  %-16s %8s %10s %10s %12s %14s %12s\n", "mechanism", "lambda", "SW/OPT", "rev/OPT", "LAI",
                          "latency_ms", "compute_us");
            os << line;
            for (std::size_t v = 0; v < variants.size(); ++v) {
                std::vector<double> sw, rev, lai, lat, cpu;
                for (const Record& r : result.records) {
                    if (r.cell != c || r.variant != v || r.setting != s) continue;
                    sw.push_back(r.sw_ratio_all);
                    rev.push_back(r.rev_ratio);
                    if (!std::isnan(r.lai_sup)) lai.push_back(r.lai_sup);
                    if (!std::isnan(r.clearing_latency_ms)) lat.push_back(r.clearing_latency_ms);
                    if (!std::isnan(r.compute_time_ms)) cpu.push_back(r.compute_time_ms * 1000.0);
                }
                const std::string lambda = variants[v].uses_lambda() ? format_number(variants[v].lambda_per_s) : "-";
                std::snprintf(line, sizeof line, "  %-16s %8s %10.4f %10.4f %12.3f %14.3f %12.2f\n", variants[v].label().c_str(), lambda.c_str(),
                              metrics::mean(sw), metrics::mean(rev), lai.empty() ? metrics::kNaN : metrics::mean(lai),
                              lat.empty() ? metrics::kNaN : metrics::mean(lat), cpu.empty() ? metrics::kNaN : metrics::mean(cpu));
                os << line;
            }
            os << '\n';
        }
    }
    return os.str();
}

}  // namespace lia::harness
