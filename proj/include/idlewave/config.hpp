#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "idlewave/app.hpp"
#include "idlewave/network.hpp"
#include "idlewave/noise.hpp"
#include "idlewave/topology.hpp"
#include "idlewave/types.hpp"

namespace idlewave {

inline bool operator==(const Topology& a, const Topology& b) {
    return a.ranks == b.ranks && a.cores_per_socket == b.cores_per_socket &&
           a.sockets_per_node == b.sockets_per_node;
}
inline bool operator==(const NetworkParams& a, const NetworkParams& b) {
    return a.latency_intra_socket == b.latency_intra_socket &&
           a.latency_inter_socket == b.latency_inter_socket &&
           a.latency_inter_node == b.latency_inter_node && a.bandwidth_cost == b.bandwidth_cost &&
           a.send_overhead == b.send_overhead && a.nic_service == b.nic_service &&
           a.nic_contention == b.nic_contention;
}
inline bool operator==(const AppConfig& a, const AppConfig& b) {
    return a.grid_points_per_rank == b.grid_points_per_rank &&
           a.cost_per_point == b.cost_per_point && a.cycles == b.cycles &&
           a.boundary == b.boundary && a.message_bytes == b.message_bytes &&
           a.overlap == b.overlap;
}
inline bool operator==(const RankSet& a, const RankSet& b) {
    return a.all == b.all && a.ranges == b.ranges;
}
inline bool operator==(const OsNoiseClass& a, const OsNoiseClass& b) {
    return a.period == b.period && a.duration == b.duration &&
           a.jitter_fraction == b.jitter_fraction && a.affected == b.affected;
}
inline bool operator==(const InjectedDelay& a, const InjectedDelay& b) {
    return a.rank == b.rank && a.cycle == b.cycle && a.duration == b.duration;
}
inline bool operator==(const SpeedOverride& a, const SpeedOverride& b) {
    return a.lo == b.lo && a.hi == b.hi && a.factor == b.factor;
}
inline bool operator==(const NoiseConfig& a, const NoiseConfig& b) {
    return a.default_speed_factor == b.default_speed_factor &&
           a.speed_overrides == b.speed_overrides && a.jitter_sigma == b.jitter_sigma &&
           a.os_noise == b.os_noise && a.injected_delays == b.injected_delays;
}

/// Complete description of one experiment. Identical SimConfig + seed yields
/// a byte-identical trace.
struct SimConfig {
    Topology topology;
    NetworkParams network;
    AppConfig app;
    NoiseConfig noise;
    std::uint64_t seed = 1;
    std::uint64_t clock_hz = 2'300'000'000;

    bool operator==(const SimConfig& o) const {
        return topology == o.topology && network == o.network && app == o.app &&
               noise == o.noise && seed == o.seed && clock_hz == o.clock_hz;
    }
};

/// Topology and clock-rate presets for the three reference systems.
inline bool apply_preset(std::string_view name, SimConfig& cfg) {
    if (name == "pal") {
        cfg.topology.cores_per_socket = 16;
        cfg.topology.sockets_per_node = 2;
        cfg.clock_hz = 2'100'000'000;
    } else if (name == "seapearl") {
        cfg.topology.cores_per_socket = 10;
        cfg.topology.sockets_per_node = 2;
        cfg.clock_hz = 2'800'000'000;
    } else if (name == "beskow") {
        cfg.topology.cores_per_socket = 16;
        cfg.topology.sockets_per_node = 2;
        cfg.clock_hz = 2'300'000'000;
    } else {
        return false;
    }
    return true;
}

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::uint64_t parse_u64(std::string_view v, const std::string& field) {
    std::uint64_t out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError(field + ": expected a non-negative integer, got '" + std::string(v) + "'");
    return out;
}

inline double parse_double(std::string_view v, const std::string& field) {
    double out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError(field + ": expected a number, got '" + std::string(v) + "'");
    return out;
}

inline bool parse_bool(std::string_view v, const std::string& field) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(field + ": expected true or false, got '" + std::string(v) + "'");
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t next = s.find(sep, pos);
        if (next == std::string_view::npos) {
            parts.emplace_back(s.substr(pos));
            break;
        }
        parts.emplace_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return parts;
}

inline std::pair<Rank, Rank> parse_rank_range(std::string_view v, const std::string& field) {
    const auto dash = v.find('-');
    if (dash == std::string_view::npos) {
        const Rank r = Rank(parse_u64(v, field));
        return {r, r};
    }
    const Rank lo = Rank(parse_u64(v.substr(0, dash), field));
    const Rank hi = Rank(parse_u64(v.substr(dash + 1), field));
    if (hi < lo) throw ConfigError(field + ": range '" + std::string(v) + "' is reversed");
    return {lo, hi};
}

inline RankSet parse_rank_set(std::string_view v, const std::string& field) {
    if (v == "all") return RankSet::everyone();
    std::vector<std::pair<Rank, Rank>> ranges;
    for (const auto& part : split(v, ',')) {
        if (part.empty()) throw ConfigError(field + ": empty range element");
        ranges.push_back(parse_rank_range(part, field));
    }
    return RankSet::of_ranges(std::move(ranges));
}

inline std::string format_rank_set(const RankSet& s) {
    if (s.all) return "all";
    std::string out;
    for (std::size_t i = 0; i < s.ranges.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(s.ranges[i].first);
        if (s.ranges[i].second != s.ranges[i].first) {
            out += '-';
            out += std::to_string(s.ranges[i].second);
        }
    }
    return out;
}

inline OsNoiseClass parse_os_noise(std::string_view v) {
    OsNoiseClass cls;
    bool have_period = false, have_duration = false;
    std::istringstream tokens{std::string(v)};
    std::string tok;
    while (tokens >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw ConfigError("noise.os_noise: token '" + tok + "' is not key=value");
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "period") {
            cls.period = parse_u64(val, "noise.os_noise.period");
            have_period = true;
        } else if (key == "duration") {
            cls.duration = parse_u64(val, "noise.os_noise.duration");
            have_duration = true;
        } else if (key == "jitter") {
            cls.jitter_fraction = parse_double(val, "noise.os_noise.jitter");
        } else if (key == "ranks") {
            cls.affected = parse_rank_set(val, "noise.os_noise.ranks");
        } else {
            throw ConfigError("noise.os_noise: unknown key '" + key + "'");
        }
    }
    if (!have_period || !have_duration)
        throw ConfigError("noise.os_noise: period and duration are required");
    return cls;
}

}  // namespace detail

/// Validates every field; throws ConfigError naming the offending field.
inline void validate(const SimConfig& cfg) {
    using detail::format_double;
    if (cfg.topology.ranks < 2) throw ConfigError("topology.ranks: must be >= 2");
    if (cfg.topology.cores_per_socket < 1)
        throw ConfigError("topology.cores_per_socket: must be >= 1");
    if (cfg.topology.sockets_per_node < 1)
        throw ConfigError("topology.sockets_per_node: must be >= 1");
    if (cfg.network.latency_intra_socket < 1)
        throw ConfigError("network.latency_intra_socket: must be >= 1");
    if (cfg.network.latency_inter_socket < cfg.network.latency_intra_socket)
        throw ConfigError("network.latency_inter_socket: must be >= latency_intra_socket");
    if (cfg.network.latency_inter_node < cfg.network.latency_inter_socket)
        throw ConfigError("network.latency_inter_node: must be >= latency_inter_socket");
    if (cfg.network.bandwidth_cost < 0)
        throw ConfigError("network.bandwidth_cost: must be >= 0");
    if (cfg.app.grid_points_per_rank < 1)
        throw ConfigError("app.grid_points_per_rank: must be >= 1");
    if (cfg.app.cost_per_point <= 0) throw ConfigError("app.cost_per_point: must be > 0");
    if (cfg.app.cycles < 1) throw ConfigError("app.cycles: must be >= 1");
    if (cfg.app.overlap)
        throw ConfigError("app.overlap: non-blocking overlap is not implemented");
    if (cfg.noise.default_speed_factor < 0.01)
        throw ConfigError("noise.speed_factor: must be >= 0.01");
    for (const auto& o : cfg.noise.speed_overrides) {
        if (o.factor < 0.01)
            throw ConfigError("noise.speed: factor for ranks " + std::to_string(o.lo) + "-" +
                              std::to_string(o.hi) + " must be >= 0.01");
        if (o.hi >= cfg.topology.ranks)
            throw ConfigError("noise.speed: rank " + std::to_string(o.hi) + " out of range");
    }
    if (cfg.noise.jitter_sigma < 0) throw ConfigError("noise.jitter_sigma: must be >= 0");
    for (const auto& cls : cfg.noise.os_noise) {
        if (cls.period < 1) throw ConfigError("noise.os_noise.period: must be >= 1");
        if (cls.jitter_fraction < 0 || cls.jitter_fraction > 0.5)
            throw ConfigError("noise.os_noise.jitter: must be in [0, 0.5]");
    }
    for (const auto& d : cfg.noise.injected_delays) {
        if (d.rank >= cfg.topology.ranks)
            throw ConfigError("noise.inject: rank " + std::to_string(d.rank) + " out of range");
        if (d.cycle >= cfg.app.cycles)
            throw ConfigError("noise.inject: cycle " + std::to_string(d.cycle) + " out of range");
    }
    if (cfg.clock_hz < 1) throw ConfigError("clock_hz: must be >= 1");
}

/// Canonical serialization: fixed key order, shortest round-trip number
/// formatting. parse(serialize(c)) == c for every valid c.
inline std::string serialize_config(const SimConfig& cfg) {
    using detail::format_double;
    std::ostringstream out;
    out << "seed = " << cfg.seed << "\n";
    out << "clock_hz = " << cfg.clock_hz << "\n";
    out << "\n[topology]\n";
    out << "ranks = " << cfg.topology.ranks << "\n";
    out << "cores_per_socket = " << cfg.topology.cores_per_socket << "\n";
    out << "sockets_per_node = " << cfg.topology.sockets_per_node << "\n";
    out << "\n[network]\n";
    out << "latency_intra_socket = " << cfg.network.latency_intra_socket << "\n";
    out << "latency_inter_socket = " << cfg.network.latency_inter_socket << "\n";
    out << "latency_inter_node = " << cfg.network.latency_inter_node << "\n";
    out << "bandwidth_cost = " << format_double(cfg.network.bandwidth_cost) << "\n";
    out << "send_overhead = " << cfg.network.send_overhead << "\n";
    out << "nic_service = " << cfg.network.nic_service << "\n";
    out << "nic_contention = " << (cfg.network.nic_contention ? "true" : "false") << "\n";
    out << "\n[app]\n";
    out << "grid_points_per_rank = " << cfg.app.grid_points_per_rank << "\n";
    out << "cost_per_point = " << format_double(cfg.app.cost_per_point) << "\n";
    out << "cycles = " << cfg.app.cycles << "\n";
    out << "boundary = " << (cfg.app.boundary == Boundary::Periodic ? "periodic" : "non-periodic")
        << "\n";
    out << "message_bytes = " << cfg.app.message_bytes << "\n";
    out << "overlap = " << (cfg.app.overlap ? "true" : "false") << "\n";
    out << "\n[noise]\n";
    out << "speed_factor = " << format_double(cfg.noise.default_speed_factor) << "\n";
    for (const auto& o : cfg.noise.speed_overrides) {
        out << "speed = " << o.lo << "-" << o.hi << ":" << format_double(o.factor) << "\n";
    }
    out << "jitter_sigma = " << format_double(cfg.noise.jitter_sigma) << "\n";
    for (const auto& cls : cfg.noise.os_noise) {
        out << "os_noise = period=" << cls.period << " duration=" << cls.duration
            << " jitter=" << format_double(cls.jitter_fraction)
            << " ranks=" << detail::format_rank_set(cls.affected) << "\n";
    }
    for (const auto& d : cfg.noise.injected_delays) {
        out << "inject = " << d.rank << "," << d.cycle << "," << d.duration << "\n";
    }
    return out.str();
}

/// Parse the key/value + sections config text. A `preset` key provides
/// topology and clock defaults; explicit keys override it regardless of
/// their position in the file. Unknown keys are errors.
inline SimConfig parse_config(const std::string& text,
                              std::optional<std::uint64_t> seed_override = std::nullopt) {
    struct Entry {
        std::string section, key, value;
    };
    std::vector<Entry> entries;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            section = detail::trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        entries.push_back({section, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1))});
    }

    SimConfig cfg;
    bool seed_seen = false;
    // preset first, wherever it appears
    for (const auto& e : entries) {
        if (e.section.empty() && e.key == "preset") {
            if (!apply_preset(e.value, cfg))
                throw ConfigError("preset: unknown preset '" + e.value +
                                  "' (expected pal, seapearl or beskow)");
        }
    }
    for (const auto& e : entries) {
        const std::string field = e.section.empty() ? e.key : e.section + "." + e.key;
        if (e.section.empty()) {
            if (e.key == "preset") continue;
            if (e.key == "seed") {
                cfg.seed = detail::parse_u64(e.value, field);
                seed_seen = true;
            } else if (e.key == "clock_hz") {
                cfg.clock_hz = detail::parse_u64(e.value, field);
            } else {
                throw ConfigError("unknown key '" + e.key + "'");
            }
        } else if (e.section == "topology") {
            if (e.key == "ranks") cfg.topology.ranks = Rank(detail::parse_u64(e.value, field));
            else if (e.key == "cores_per_socket")
                cfg.topology.cores_per_socket = std::uint32_t(detail::parse_u64(e.value, field));
            else if (e.key == "sockets_per_node")
                cfg.topology.sockets_per_node = std::uint32_t(detail::parse_u64(e.value, field));
            else throw ConfigError("unknown key '" + field + "'");
        } else if (e.section == "network") {
            if (e.key == "latency_intra_socket")
                cfg.network.latency_intra_socket = detail::parse_u64(e.value, field);
            else if (e.key == "latency_inter_socket")
                cfg.network.latency_inter_socket = detail::parse_u64(e.value, field);
            else if (e.key == "latency_inter_node")
                cfg.network.latency_inter_node = detail::parse_u64(e.value, field);
            else if (e.key == "bandwidth_cost")
                cfg.network.bandwidth_cost = detail::parse_double(e.value, field);
            else if (e.key == "send_overhead")
                cfg.network.send_overhead = detail::parse_u64(e.value, field);
            else if (e.key == "nic_service")
                cfg.network.nic_service = detail::parse_u64(e.value, field);
            else if (e.key == "nic_contention")
                cfg.network.nic_contention = detail::parse_bool(e.value, field);
            else throw ConfigError("unknown key '" + field + "'");
        } else if (e.section == "app") {
            if (e.key == "grid_points_per_rank")
                cfg.app.grid_points_per_rank = detail::parse_u64(e.value, field);
            else if (e.key == "cost_per_point")
                cfg.app.cost_per_point = detail::parse_double(e.value, field);
            else if (e.key == "cycles")
                cfg.app.cycles = CycleIndex(detail::parse_u64(e.value, field));
            else if (e.key == "boundary") {
                if (e.value == "periodic") cfg.app.boundary = Boundary::Periodic;
                else if (e.value == "non-periodic") cfg.app.boundary = Boundary::NonPeriodic;
                else throw ConfigError(field + ": expected periodic or non-periodic");
            } else if (e.key == "message_bytes")
                cfg.app.message_bytes = detail::parse_u64(e.value, field);
            else if (e.key == "overlap")
                cfg.app.overlap = detail::parse_bool(e.value, field);
            else throw ConfigError("unknown key '" + field + "'");
        } else if (e.section == "noise") {
            if (e.key == "speed_factor")
                cfg.noise.default_speed_factor = detail::parse_double(e.value, field);
            else if (e.key == "jitter_sigma")
                cfg.noise.jitter_sigma = detail::parse_double(e.value, field);
            else if (e.key == "speed") {
                const auto colon = e.value.find(':');
                if (colon == std::string::npos)
                    throw ConfigError(field + ": expected RANGE:FACTOR, got '" + e.value + "'");
                const auto [lo, hi] = detail::parse_rank_range(e.value.substr(0, colon), field);
                cfg.noise.speed_overrides.push_back(
                    {lo, hi, detail::parse_double(e.value.substr(colon + 1), field)});
            } else if (e.key == "os_noise") {
                cfg.noise.os_noise.push_back(detail::parse_os_noise(e.value));
            } else if (e.key == "inject") {
                const auto parts = detail::split(e.value, ',');
                if (parts.size() != 3)
                    throw ConfigError(field + ": expected rank,cycle,duration");
                cfg.noise.injected_delays.push_back(
                    {Rank(detail::parse_u64(parts[0], field)),
                     CycleIndex(detail::parse_u64(parts[1], field)),
                     detail::parse_u64(parts[2], field)});
            } else {
                throw ConfigError("unknown key '" + field + "'");
            }
        } else {
            throw ConfigError("unknown section '" + e.section + "'");
        }
    }
    if (seed_override) {
        cfg.seed = *seed_override;
    } else if (!seed_seen) {
        throw ConfigError("seed: required (set it in the config file or pass --seed)");
    }
    validate(cfg);
    return cfg;
}

inline SimConfig load_config(const std::string& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), seed_override);
}

/// FNV-1a over the canonical serialization; 16 hex digits.
inline std::string config_fingerprint(const SimConfig& cfg) {
    const std::string s = serialize_config(cfg);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[std::size_t(i)] = hex[h & 0xF];
        h >>= 4;
    }
    return out;
}

}  // namespace idlewave
