#include "lia/lia.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "lia/error.hpp"
#include "lia/harness.hpp"
#include "lia/verify.hpp"

struct lia_topology {
    lia::topology::Topology topo;
};

struct lia_run {
    lia::harness::RunResult result;
};

namespace {

thread_local std::string g_last_error;

lia_status status_for(lia::ErrorKind kind) {
    switch (kind) {
        case lia::ErrorKind::Input: return LIA_ERR_INVALID_ARG;
        case lia::ErrorKind::Config: return LIA_ERR_CONFIG;
        case lia::ErrorKind::Io: return LIA_ERR_IO;
        case lia::ErrorKind::Assertion: return LIA_ERR_ASSERTION;
        case lia::ErrorKind::Internal: return LIA_ERR_INTERNAL;
    }
    return LIA_ERR_INTERNAL;
}

// Runs `body`, translating exceptions to status codes. JSON errors are
// reported as `json_status` since their meaning depends on the call.
template <class F>
lia_status guarded(F&& body, lia_status json_status = LIA_ERR_INVALID_ARG) {
    g_last_error.clear();
    try {
        body();
        return LIA_OK;
    } catch (const lia::Error& e) {
        g_last_error = e.what();
        return status_for(e.kind());
    } catch (const nlohmann::json::exception& e) {
        g_last_error = e.what();
        return json_status;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return LIA_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return LIA_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return LIA_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (!p) lia::fail(lia::ErrorKind::Input, std::string(what) + " must not be null");
}

char* copy_out(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

lia::harness::RunKind to_kind(lia_run_kind k) {
    switch (k) {
        case LIA_RUN_SWEEP: return lia::harness::RunKind::Sweep;
        case LIA_RUN_ROBUSTNESS: return lia::harness::RunKind::Robustness;
        case LIA_RUN_LARGE: return lia::harness::RunKind::Large;
        case LIA_RUN_LAI: return lia::harness::RunKind::Lai;
    }
    lia::fail(lia::ErrorKind::Input, "unknown run kind");
}

}  // namespace

extern "C" {

const char* lia_last_error(void) { return g_last_error.c_str(); }

const char* lia_version(void) { return "1.0.0"; }

void lia_string_free(char* s) { std::free(s); }

lia_status lia_topology_generate(const char* kind, uint64_t seed, lia_topology** out) {
    return guarded([&] {
        require(kind, "kind");
        require(out, "out");
        const auto k = lia::topology::parse_kind(kind);
        if (k == lia::topology::Kind::Custom) lia::fail(lia::ErrorKind::Input, "custom topologies are loaded from a file, not generated");
        *out = new lia_topology{lia::topology::generate(k, seed)};
    });
}

lia_status lia_topology_load(const char* path, lia_topology** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new lia_topology{lia::topology::load(path)};
    });
}

lia_status lia_topology_save(const lia_topology* topo, const char* path) {
    return guarded([&] {
        require(topo, "topology");
        require(path, "path");
        lia::topology::save(topo->topo, path);
    });
}

void lia_topology_free(lia_topology* topo) { delete topo; }

lia_status lia_topology_node_count(const lia_topology* topo, size_t* out) {
    return guarded([&] {
        require(topo, "topology");
        require(out, "out");
        *out = topo->topo.size();
    });
}

lia_status lia_topology_info(const lia_topology* topo, char** json_out) {
    return guarded([&] {
        require(topo, "topology");
        require(json_out, "json_out");
        const auto& t = topo->topo;
        const auto stats = lia::topology::pairwise_delay_stats(t);
        const auto to_h = lia::topology::distances_to_horizon(t, 0);
        double far = 0.0;
        for (double d : to_h.dist)
            if (std::isfinite(d)) far = std::max(far, d);
        const nlohmann::json doc = {{"kind", lia::topology::kind_name(t.kind)},
                                    {"seed", t.seed},
                                    {"nodes", t.size()},
                                    {"links", t.links.size()},
                                    {"regions", t.region_count},
                                    {"pairwise_delay_ms", {{"min", stats.min}, {"median", stats.median}, {"max", stats.max}}},
                                    {"max_delay_to_node0_ms", far}};
        *json_out = copy_out(doc.dump(2));
    });
}

lia_status lia_topology_distances(const lia_topology* topo, size_t horizon_node, double* out, size_t out_len) {
    return guarded([&] {
        require(topo, "topology");
        require(out, "out");
        if (horizon_node >= topo->topo.size()) lia::fail(lia::ErrorKind::Input, "horizon node out of range");
        if (out_len < topo->topo.size()) lia::fail(lia::ErrorKind::Input, "output buffer smaller than the node count");
        const auto d = lia::topology::distances_to_horizon(topo->topo, horizon_node);
        std::copy(d.dist.begin(), d.dist.end(), out);
    });
}

lia_status lia_clear_json(const lia_topology* topo, const char* instance_json, const char* mechanism_json, char** outcome_json) {
    return guarded([&] {
        require(topo, "topology");
        require(instance_json, "instance_json");
        require(mechanism_json, "mechanism_json");
        require(outcome_json, "outcome_json");
        std::string ref;
        lia::auction::ClearingHorizon horizon;
        std::vector<lia::auction::Bid> bids;
        lia::auction::instance_from_json(nlohmann::json::parse(instance_json), ref, horizon, bids);
        if (horizon.node >= topo->topo.size()) lia::fail(lia::ErrorKind::Input, "horizon node out of range");
        for (const auto& b : bids)
            if (b.node >= topo->topo.size()) lia::fail(lia::ErrorKind::Input, "bid node out of range");

        const auto m = nlohmann::json::parse(mechanism_json);
        lia::mechanisms::MechanismConfig cfg;
        cfg.kind = lia::mechanisms::parse_kind(m.at("mechanism").get<std::string>());
        cfg.lambda_per_s = m.value("lambda_per_s", cfg.lambda_per_s);
        cfg.batch_ms = m.value("batch_ms", cfg.batch_ms);
        cfg.k = m.value("k", cfg.k);
        cfg.validate();

        const auto delays = lia::topology::distances_to_horizon(topo->topo, horizon.node);
        auto profile = lia::auction::compute_slacks(bids, horizon, delays);
        if (m.contains("error_model")) {
            const auto model = lia::auction::error_model_from_json(m.at("error_model"));
            profile = lia::auction::apply_error_model(profile, bids, topo->topo, delays, model, m.value("noise_seed", std::uint64_t{1}));
        }
        const auto outcome = lia::mechanisms::run(cfg, bids, profile, horizon, true);
        *outcome_json = copy_out(lia::mechanisms::outcome_to_json(outcome).dump(2));
    });
}

lia_status lia_run_execute(lia_run_kind kind, const char* config_json, lia_run** out) {
    return guarded(
        [&] {
            require(out, "out");
            const auto k = to_kind(kind);
            auto config = lia::harness::SweepConfig::defaults_for(k);
            if (config_json && *config_json) {
                nlohmann::json doc;
                try {
                    doc = nlohmann::json::parse(config_json);
                } catch (const nlohmann::json::parse_error& e) {
                    lia::fail(lia::ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
                }
                config = lia::harness::config_from_json(doc, config);
            }
            auto run = std::make_unique<lia_run>();
            switch (k) {
                case lia::harness::RunKind::Robustness: run->result = lia::harness::run_robustness(config); break;
                case lia::harness::RunKind::Large: run->result = lia::harness::run_large(config); break;
                default: run->result = lia::harness::run(k, config);
            }
            *out = run.release();
        },
        LIA_ERR_CONFIG);
}

void lia_run_free(lia_run* run) { delete run; }

lia_status lia_run_record_count(const lia_run* run, size_t* out) {
    return guarded([&] {
        require(run, "run");
        require(out, "out");
        *out = run->result.records.size();
    });
}

lia_status lia_run_write_records(const lia_run* run, const char* path) {
    return guarded([&] {
        require(run, "run");
        require(path, "path");
        lia::harness::write_records_csv(run->result, path);
    });
}

lia_status lia_run_write_summary(const lia_run* run, const char* path) {
    return guarded([&] {
        require(run, "run");
        require(path, "path");
        lia::harness::write_summary_json(run->result, path);
    });
}

lia_status lia_run_write_lai_curves(const lia_run* run, const char* path) {
    return guarded([&] {
        require(run, "run");
        require(path, "path");
        lia::harness::write_lai_curves_csv(run->result, path);
    });
}

lia_status lia_run_summary(const lia_run* run, char** json_out) {
    return guarded([&] {
        require(run, "run");
        require(json_out, "json_out");
        *json_out = copy_out(lia::harness::summarize(run->result).dump(2));
    });
}

lia_status lia_run_table(const lia_run* run, char** text_out) {
    return guarded([&] {
        require(run, "run");
        require(text_out, "text_out");
        *text_out = copy_out(lia::harness::comparison_table(run->result));
    });
}

lia_status lia_run_checks_ok(const lia_run* run, int* ok) {
    return guarded([&] {
        require(run, "run");
        require(ok, "ok");
        *ok = run->result.checks.ok() ? 1 : 0;
    });
}

lia_status lia_verify(const char* options_json, char** report_text, size_t* failures) {
    return guarded([&] {
        require(report_text, "report_text");
        require(failures, "failures");
        lia::verify::GoldenOptions o;
        if (options_json && *options_json) {
            const auto doc = nlohmann::json::parse(options_json);
            o.instances = doc.value("instances", o.instances);
            o.large_instances = doc.value("large_instances", o.large_instances);
            o.spread_instances = doc.value("spread_instances", o.spread_instances);
            o.jobs = doc.value("jobs", o.jobs);
            o.seed = doc.value("seed", o.seed);
            if (o.instances < 1 || o.large_instances < 1 || o.spread_instances < 1)
                lia::fail(lia::ErrorKind::Input, "verify instance counts must be positive");
        }
        const auto report = lia::verify::golden_checks(o);
        *failures = report.failures();
        *report_text = copy_out(report.text());
    });
}

}  // extern "C"
