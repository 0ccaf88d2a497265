#include "lia/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <queue>
#include <utility>

#include "lia/error.hpp"
#include "lia/rng.hpp"

namespace lia::topology {

namespace {

using Vec = std::array<double, 3>;

Vec operator+(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec operator-(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec operator*(double s, const Vec& a) { return {s * a[0], s * a[1], s * a[2]}; }
double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
Vec normalized(const Vec& a) { return (1.0 / norm(a)) * a; }
Vec cross(const Vec& a, const Vec& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double radians(double deg) { return deg * std::numbers::pi / 180.0; }

Vec unit_from_latlon(double lat_deg, double lon_deg) {
    const double la = radians(lat_deg);
    const double lo = radians(lon_deg);
    return {std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
}

double great_circle_km(const Vec& unit_a, const Vec& unit_b) {
    return kEarthRadiusKm * std::acos(std::clamp(dot(unit_a, unit_b), -1.0, 1.0));
}

// Orthonormal pair spanning the plane perpendicular to `axis`.
std::pair<Vec, Vec> tangent_basis(const Vec& axis) {
    const Vec helper = std::abs(axis[2]) < 0.9 ? Vec{0, 0, 1} : Vec{1, 0, 0};
    const Vec t = normalized(cross(axis, helper));
    return {t, cross(axis, t)};
}

// Unit vector within `half_angle` of `axis`, uniform in solid angle.
Vec sample_in_cone(Rng& rng, const Vec& axis, double half_angle) {
    const double cos_r = 1.0 - uniform(rng, 0.0, 1.0) * (1.0 - std::cos(half_angle));
    const double sin_r = std::sqrt(std::max(0.0, 1.0 - cos_r * cos_r));
    const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const auto [t, u] = tangent_basis(axis);
    return cos_r * axis + sin_r * (std::cos(phi) * t + std::sin(phi) * u);
}

Vec sample_direction(Rng& rng) { return sample_in_cone(rng, {0, 0, 1}, std::numbers::pi); }

void push_node(Topology& topo, const Vec& position, int region) {
    topo.nodes.push_back(Node{topo.nodes.size(), position, region});
}

double vacuum_delay(const Topology& topo, NodeId a, NodeId b) {
    return distance_km(topo.nodes[a], topo.nodes[b]) / kLightKmPerMs;
}

// ---- Starlink ----------------------------------------------------------------
// A regional patch of a Walker shell: 10 adjacent planes, 20 consecutive slots
// each, taken from an 80-slot ring so in-plane neighbours sit ~1.8 ms apart.
// Node 0 is the ground gateway that clears auctions; it is fed by every
// satellite above its elevation mask through a fixed terrestrial backhaul.
constexpr int kPlanes = 10;
constexpr int kSatsPerPlane = 20;
constexpr int kRingSlots = 80;
constexpr int kFirstSlot = -10;
constexpr double kAltitudeKm = 550.0;
constexpr double kInclinationDeg = 53.0;
constexpr double kPlaneSpacingDeg = 6.51;
constexpr double kGatewaySlotFraction = 0.733;
constexpr double kGatewayOffsetKm = 1215.0;
constexpr double kGatewayElevationMaskDeg = 6.3;
constexpr double kGatewayBackhaulMs = 7.46;

Vec satellite_position(double plane, double slot, double raan_offset) {
    const double radius = kEarthRadiusKm + kAltitudeKm;
    const double raan = radians(plane * kPlaneSpacingDeg) + raan_offset;
    const double arg = 2.0 * std::numbers::pi * slot / kRingSlots;
    const double inc = radians(kInclinationDeg);
    return {radius * (std::cos(raan) * std::cos(arg) - std::sin(raan) * std::sin(arg) * std::cos(inc)),
            radius * (std::sin(raan) * std::cos(arg) + std::cos(raan) * std::sin(arg) * std::cos(inc)),
            radius * std::sin(arg) * std::sin(inc)};
}

// ---- Internet ----------------------------------------------------------------
constexpr double kHomeLat = 50.0;
constexpr double kHomeLon = 9.0;
constexpr double kHomeCapKm = 1500.0;
constexpr int kHomeMetros = 96;
constexpr double kRemoteScatterKm = 300.0;
constexpr int kNearestNeighbours = 4;
constexpr std::array<std::pair<double, double>, 4> kRemoteSites{{
    {40.0, -74.0}, {37.0, -122.0}, {35.0, 139.0}, {-33.0, 151.0}}};

Vec sample_in_cap(Rng& rng, const Vec& centre, double radius_km) {
    return sample_in_cone(rng, centre, radius_km / kEarthRadiusKm);
}

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[std::max(a, b)] = std::min(a, b);
        return true;
    }
};

// ---- DSN ---------------------------------------------------------------------
constexpr double kAuKm = 149'597'870.7;
constexpr double kClosestProbeMs = 498'000.0;
constexpr double kInnerProbeMaxMs = 1'000'000.0;
constexpr double kMarsRelayMs = 1'190'000.0;
constexpr double kJupiterProbeMs = 4'416'000.0;
constexpr int kInnerProbes = 12;
constexpr int kMarsLocalAssets = 7;
constexpr double kMarsLocalMinMs = 0.5;
constexpr double kMarsLocalMaxMs = 5.0;
constexpr double kDeepSpaceConeDeg = 45.0;

}  // namespace

std::string kind_name(Kind kind) {
    switch (kind) {
        case Kind::Starlink200: return "starlink";
        case Kind::Internet100: return "internet";
        case Kind::Dsn30: return "dsn";
        case Kind::Custom: return "custom";
    }
    return "custom";
}

Kind parse_kind(std::string_view name) {
    if (name == "starlink" || name == "Starlink200") return Kind::Starlink200;
    if (name == "internet" || name == "Internet100") return Kind::Internet100;
    if (name == "dsn" || name == "Dsn30") return Kind::Dsn30;
    if (name == "custom" || name == "Custom") return Kind::Custom;
    fail(ErrorKind::Input, "unknown topology kind '" + std::string(name) + "'");
}

double distance_km(const Node& a, const Node& b) { return norm(a.position - b.position); }

double fiber_delay_ms(double great_circle_km) {
    return std::max(kMetroFloorMs, great_circle_km * kFiberSlowdown / kLightKmPerMs);
}

void add_undirected(Topology& topo, NodeId u, NodeId v, double delay_ms) {
    topo.links.push_back({u, v, delay_ms});
    topo.links.push_back({v, u, delay_ms});
}

Topology generate_starlink(std::uint64_t seed) {
    Topology topo;
    topo.kind = Kind::Starlink200;
    topo.seed = seed;
    topo.region_count = kPlanes + 1;

    // The seed only spins the whole patch about the polar axis; delays are
    // rotation invariant, so every seed lands on the same calibration.
    Rng rng(derive_seed(seed, stable_hash("starlink")));
    const double raan_offset = uniform(rng, 0.0, 2.0 * std::numbers::pi);

    push_node(topo, {0, 0, 0}, kPlanes);
    for (int p = 0; p < kPlanes; ++p)
        for (int s = 0; s < kSatsPerPlane; ++s)
            push_node(topo, satellite_position(p, s + kFirstSlot, raan_offset), p);

    Vec centroid{0, 0, 0};
    for (std::size_t v = 1; v < topo.size(); ++v) centroid = centroid + topo.nodes[v].position;
    centroid = (1.0 / static_cast<double>(topo.size() - 1)) * centroid;

    const Vec ref = satellite_position(0.0, kGatewaySlotFraction * (kSatsPerPlane - 1) + kFirstSlot, raan_offset);
    Vec ground = kEarthRadiusKm * normalized(ref);
    Vec away = ground - centroid;
    away = away - (dot(away, ground) / dot(ground, ground)) * ground;
    away = normalized(away);
    const double swing = kGatewayOffsetKm / kEarthRadiusKm;
    ground = kEarthRadiusKm * (std::cos(swing) * normalized(ground) + std::sin(swing) * away);
    topo.nodes[0].position = ground;

    auto sat = [](int p, int s) { return static_cast<NodeId>(1 + p * kSatsPerPlane + s); };
    for (int p = 0; p < kPlanes; ++p) {
        for (int s = 0; s < kSatsPerPlane; ++s) {
            if (s + 1 < kSatsPerPlane) add_undirected(topo, sat(p, s), sat(p, s + 1), vacuum_delay(topo, sat(p, s), sat(p, s + 1)));
            if (p + 1 < kPlanes) add_undirected(topo, sat(p, s), sat(p + 1, s), vacuum_delay(topo, sat(p, s), sat(p + 1, s)));
        }
    }

    const Vec up = normalized(ground);
    for (NodeId v = 1; v < topo.size(); ++v) {
        const Vec ray = topo.nodes[v].position - ground;
        const double elevation = std::asin(dot(ray, up) / norm(ray)) * 180.0 / std::numbers::pi;
        if (elevation >= kGatewayElevationMaskDeg)
            add_undirected(topo, 0, v, vacuum_delay(topo, 0, v) + kGatewayBackhaulMs);
    }
    return topo;
}

Topology generate_internet(std::uint64_t seed) {
    Topology topo;
    topo.kind = Kind::Internet100;
    topo.seed = seed;
    topo.region_count = 1 + static_cast<int>(kRemoteSites.size());
    Rng rng(derive_seed(seed, stable_hash("internet")));

    std::vector<Vec> units;
    const Vec home = unit_from_latlon(kHomeLat, kHomeLon);
    units.push_back(home);
    for (int i = 1; i < kHomeMetros; ++i) units.push_back(sample_in_cap(rng, home, kHomeCapKm));
    for (const auto& [lat, lon] : kRemoteSites) units.push_back(sample_in_cap(rng, unit_from_latlon(lat, lon), kRemoteScatterKm));

    for (std::size_t i = 0; i < units.size(); ++i) {
        const int region = i < static_cast<std::size_t>(kHomeMetros) ? 0 : static_cast<int>(i) - kHomeMetros + 1;
        push_node(topo, kEarthRadiusKm * units[i], region);
    }

    const std::size_t n = units.size();
    std::vector<std::vector<double>> gc(n, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) gc[a][b] = gc[b][a] = great_circle_km(units[a], units[b]);

    std::vector<std::pair<NodeId, NodeId>> edges;
    auto want = [&](NodeId a, NodeId b) { edges.emplace_back(std::min(a, b), std::max(a, b)); };

    for (NodeId a = 0; a < n; ++a) {
        std::vector<NodeId> same;
        for (NodeId b = 0; b < n; ++b)
            if (b != a && topo.nodes[b].region == topo.nodes[a].region) same.push_back(b);
        std::sort(same.begin(), same.end(), [&](NodeId x, NodeId y) { return gc[a][x] < gc[a][y] || (gc[a][x] == gc[a][y] && x < y); });
        for (std::size_t k = 0; k < same.size() && k < static_cast<std::size_t>(kNearestNeighbours); ++k) want(a, same[k]);
    }

    // Submarine and long-haul routes: each remote site reaches every other
    // region through the closest pair of metros.
    for (int r = 1; r < topo.region_count; ++r) {
        for (int other = 0; other < topo.region_count; ++other) {
            if (other == r) continue;
            double best = kInfinity;
            std::pair<NodeId, NodeId> pick{0, 0};
            for (NodeId a = 0; a < n; ++a) {
                if (topo.nodes[a].region != r) continue;
                for (NodeId b = 0; b < n; ++b)
                    if (topo.nodes[b].region == other && gc[a][b] < best) best = gc[a][b], pick = {a, b};
            }
            want(pick.first, pick.second);
        }
    }

    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    DisjointSet components(n);
    for (const auto& [a, b] : edges) components.unite(a, b);
    // Bridge any fragment left by the nearest-neighbour rule.
    for (;;) {
        double best = kInfinity;
        std::pair<NodeId, NodeId> pick{0, 0};
        for (NodeId a = 0; a < n; ++a)
            for (NodeId b = a + 1; b < n; ++b)
                if (components.find(a) != components.find(b) && gc[a][b] < best) best = gc[a][b], pick = {a, b};
        if (best == kInfinity) break;
        components.unite(pick.first, pick.second);
        edges.push_back(pick);
    }

    for (const auto& [a, b] : edges) add_undirected(topo, a, b, fiber_delay_ms(gc[a][b]));
    return topo;
}

Topology generate_dsn(std::uint64_t seed) {
    Topology topo;
    topo.kind = Kind::Dsn30;
    topo.seed = seed;
    topo.region_count = 5;  // Earth stations, near-Earth relays, inner probes, Mars group, outer probe
    Rng rng(derive_seed(seed, stable_hash("dsn")));

    const Vec earth{kAuKm, 0, 0};
    const std::array<std::pair<double, double>, 3> stations{{{35.4, -116.9}, {40.4, -4.2}, {-35.4, 149.0}}};
    std::array<Vec, 3> station_up{};
    for (std::size_t i = 0; i < stations.size(); ++i) {
        station_up[i] = unit_from_latlon(stations[i].first, stations[i].second);
        push_node(topo, earth + kEarthRadiusKm * station_up[i], 0);
    }
    for (NodeId a = 0; a < 3; ++a)
        for (NodeId b = a + 1; b < 3; ++b) add_undirected(topo, a, b, fiber_delay_ms(great_circle_km(station_up[a], station_up[b])));

    const Vec goldstone = topo.nodes[0].position;
    auto link_vacuum = [&](NodeId a, NodeId b) { add_undirected(topo, a, b, vacuum_delay(topo, a, b)); };

    // Near-Earth relays: one low orbiter over the clearing station, three
    // geostationary relays, a lunar relay and a Sun-Earth L2 relay.
    push_node(topo, goldstone + 300.0 * station_up[0], 1);
    link_vacuum(0, topo.size() - 1);
    for (NodeId s = 0; s < 3; ++s) {
        push_node(topo, topo.nodes[s].position + 35'786.0 * station_up[s], 1);
        link_vacuum(s, topo.size() - 1);
    }
    push_node(topo, earth + 384'400.0 * sample_direction(rng), 1);
    for (NodeId s = 0; s < 3; ++s) link_vacuum(s, topo.size() - 1);
    push_node(topo, earth + Vec{1.5e6, 0, 0}, 1);
    for (NodeId s = 0; s < 3; ++s) link_vacuum(s, topo.size() - 1);

    // Deep-space nodes share one cone of directions so that no two of them
    // are further apart than the outer probe is from Earth.
    const Vec axis = sample_direction(rng);
    const double cone = radians(kDeepSpaceConeDeg);
    auto place_from_goldstone = [&](double delay_ms, int region) {
        push_node(topo, goldstone + (delay_ms * kLightKmPerMs) * sample_in_cone(rng, axis, cone), region);
        return topo.size() - 1;
    };

    std::vector<NodeId> deep;
    deep.push_back(place_from_goldstone(kClosestProbeMs, 2));
    for (int i = 1; i < kInnerProbes; ++i) deep.push_back(place_from_goldstone(uniform(rng, kClosestProbeMs, kInnerProbeMaxMs), 2));
    const NodeId mars_relay = place_from_goldstone(kMarsRelayMs, 3);
    deep.push_back(mars_relay);
    std::vector<NodeId> mars_assets;
    for (int i = 0; i < kMarsLocalAssets; ++i) {
        const double hop_km = uniform(rng, kMarsLocalMinMs, kMarsLocalMaxMs) * kLightKmPerMs;
        push_node(topo, topo.nodes[mars_relay].position + hop_km * sample_direction(rng), 3);
        mars_assets.push_back(topo.size() - 1);
    }
    deep.push_back(place_from_goldstone(kJupiterProbeMs, 4));

    for (NodeId v : deep)
        for (NodeId s = 0; s < 3; ++s) link_vacuum(s, v);
    for (std::size_t i = 0; i < deep.size(); ++i)
        for (std::size_t j = i + 1; j < deep.size(); ++j) link_vacuum(deep[i], deep[j]);
    for (NodeId v : mars_assets) link_vacuum(mars_relay, v);
    return topo;
}

Topology generate(Kind kind, std::uint64_t seed) {
    switch (kind) {
        case Kind::Starlink200: return generate_starlink(seed);
        case Kind::Internet100: return generate_internet(seed);
        case Kind::Dsn30: return generate_dsn(seed);
        case Kind::Custom: break;
    }
    fail(ErrorKind::Input, "custom topologies are loaded from JSON, not generated");
}

namespace {

using Adjacency = std::vector<std::vector<std::pair<NodeId, double>>>;

std::vector<double> dijkstra(const Adjacency& adj, NodeId source) {
    std::vector<double> dist(adj.size(), kInfinity);
    using Entry = std::pair<double, NodeId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    dist[source] = 0.0;
    queue.emplace(0.0, source);
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        for (const auto& [v, w] : adj[u]) {
            if (d + w < dist[v]) {
                dist[v] = d + w;
                queue.emplace(dist[v], v);
            }
        }
    }
    return dist;
}

Adjacency build_adjacency(const Topology& topo, bool reverse) {
    Adjacency adj(topo.size());
    for (const Link& l : topo.links) {
        if (reverse) adj[l.dst].emplace_back(l.src, l.delay_ms);
        else adj[l.src].emplace_back(l.dst, l.delay_ms);
    }
    return adj;
}

}  // namespace

DelayMap distances_to_horizon(const Topology& topo, NodeId horizon_node) {
    if (horizon_node >= topo.size())
        fail(ErrorKind::Input, "horizon node " + std::to_string(horizon_node) + " is not in the topology");
    return DelayMap{horizon_node, dijkstra(build_adjacency(topo, true), horizon_node)};
}

double earliest_arrival(NodeId v, double emission_ms, const DelayMap& delays) {
    const double d = delays.dist.at(v);
    return std::isinf(d) ? kInfinity : emission_ms + d;
}

std::vector<std::vector<double>> all_pairs(const Topology& topo) {
    const Adjacency adj = build_adjacency(topo, false);
    std::vector<std::vector<double>> rows;
    rows.reserve(topo.size());
    for (NodeId s = 0; s < topo.size(); ++s) rows.push_back(dijkstra(adj, s));
    return rows;
}

DelayStats pairwise_delay_stats(const Topology& topo) {
    std::vector<double> values;
    const auto rows = all_pairs(topo);
    for (NodeId u = 0; u < rows.size(); ++u)
        for (NodeId v = 0; v < rows.size(); ++v)
            if (u != v && std::isfinite(rows[u][v])) values.push_back(rows[u][v]);
    if (values.empty()) return {};
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    const double median = m % 2 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
    return {values.front(), median, values.back()};
}

void validate(const Topology& topo) {
    if (topo.region_count < 1) fail(ErrorKind::Input, "region_count must be positive");
    for (std::size_t i = 0; i < topo.nodes.size(); ++i) {
        const Node& n = topo.nodes[i];
        if (n.id != i) fail(ErrorKind::Input, "node ids must be dense and ordered; found " + std::to_string(n.id) + " at index " + std::to_string(i));
        for (double c : n.position)
            if (!std::isfinite(c)) fail(ErrorKind::Input, "node " + std::to_string(i) + " has a non-finite position");
        if (n.region < 0 || n.region >= topo.region_count)
            fail(ErrorKind::Input, "node " + std::to_string(i) + " region " + std::to_string(n.region) + " outside [0, region_count)");
    }
    for (const Link& l : topo.links) {
        const std::string name = "link " + std::to_string(l.src) + "->" + std::to_string(l.dst);
        if (l.src >= topo.size() || l.dst >= topo.size()) fail(ErrorKind::Input, name + " references a missing node");
        if (!(l.delay_ms > 0.0) || !std::isfinite(l.delay_ms)) fail(ErrorKind::Input, name + " must have a finite positive delay");
        const double bound = distance_km(topo.nodes[l.src], topo.nodes[l.dst]) / kLightKmPerMs;
        if (l.delay_ms < bound * (1.0 - 1e-12))
            fail(ErrorKind::Input, name + " is faster than light (" + std::to_string(l.delay_ms) + " ms < " + std::to_string(bound) + " ms)");
    }
}

nlohmann::json to_json(const Topology& topo) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const Node& n : topo.nodes)
        nodes.push_back({{"id", n.id}, {"position", {n.position[0], n.position[1], n.position[2]}}, {"region", n.region}});
    nlohmann::json links = nlohmann::json::array();
    for (const Link& l : topo.links) links.push_back({{"src", l.src}, {"dst", l.dst}, {"delay_ms", l.delay_ms}});
    return {{"kind", kind_name(topo.kind)}, {"seed", topo.seed}, {"region_count", topo.region_count}, {"nodes", nodes}, {"links", links}};
}

Topology from_json(const nlohmann::json& doc) {
    Topology topo;
    try {
        topo.kind = parse_kind(doc.at("kind").get<std::string>());
        topo.seed = doc.value("seed", std::uint64_t{0});
        topo.region_count = doc.at("region_count").get<int>();
        for (const auto& n : doc.at("nodes")) {
            Node node;
            node.id = n.at("id").get<NodeId>();
            const auto& p = n.at("position");
            if (!p.is_array() || p.size() != 3) fail(ErrorKind::Input, "node position must be a 3-element array");
            node.position = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
            node.region = n.value("region", 0);
            topo.nodes.push_back(node);
        }
        for (const auto& l : doc.at("links"))
            topo.links.push_back({l.at("src").get<NodeId>(), l.at("dst").get<NodeId>(), l.at("delay_ms").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Input, std::string("malformed topology document: ") + e.what());
    }
    validate(topo);
    return topo;
}

Topology load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open topology file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Input, path + ": " + e.what());
    }
    return from_json(doc);
}

void save(const Topology& topo, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write topology file " + path);
    out << to_json(topo).dump(2) << '\n';
}

}  // namespace lia::topology
