#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lia::topology {

using NodeId = std::size_t;

inline constexpr double kLightKmPerMs = 299.792458;
inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Kind { Starlink200, Internet100, Dsn30, Custom };

std::string kind_name(Kind kind);
// Accepts the short names used on the command line ("starlink", "internet",
// "dsn", "custom") as well as the enum spellings.
Kind parse_kind(std::string_view name);

struct Node {
    NodeId id = 0;
    std::array<double, 3> position{};  // km
    int region = 0;
};

struct Link {
    NodeId src = 0;
    NodeId dst = 0;
    double delay_ms = 0.0;
};

struct Topology {
    Kind kind = Kind::Custom;
    std::vector<Node> nodes;
    std::vector<Link> links;
    int region_count = 1;
    std::uint64_t seed = 0;

    std::size_t size() const { return nodes.size(); }
};

struct DelayMap {
    NodeId horizon_node = 0;
    std::vector<double> dist;  // ms to horizon_node, +inf when unreachable
};

struct DelayStats {
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
};

// Straight-line distance in km between two node positions.
double distance_km(const Node& a, const Node& b);

// Fiber propagation delay for a great-circle run, never below the metro floor.
double fiber_delay_ms(double great_circle_km);
inline constexpr double kFiberSlowdown = 1.468;
inline constexpr double kMetroFloorMs = 0.3;

Topology generate_starlink(std::uint64_t seed);
Topology generate_internet(std::uint64_t seed);
Topology generate_dsn(std::uint64_t seed);
Topology generate(Kind kind, std::uint64_t seed);

// Adds u->v and v->u with the same delay.
void add_undirected(Topology& topo, NodeId u, NodeId v, double delay_ms);

DelayMap distances_to_horizon(const Topology& topo, NodeId horizon_node);
double earliest_arrival(NodeId v, double emission_ms, const DelayMap& delays);

// Row s holds shortest delays from s to every node.
std::vector<std::vector<double>> all_pairs(const Topology& topo);
// Statistics over all ordered pairs u != v with finite delay.
DelayStats pairwise_delay_stats(const Topology& topo);

// Throws lia::Error(Input) naming the first structural problem found.
void validate(const Topology& topo);

nlohmann::json to_json(const Topology& topo);
Topology from_json(const nlohmann::json& doc);
Topology load(const std::string& path);
void save(const Topology& topo, const std::string& path);

}  // namespace lia::topology
