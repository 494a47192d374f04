#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "idlewave/types.hpp"

namespace idlewave {

/// One wait that a rank spent blocked on a neighbor message. Zero-length
/// records (start == end) are kept: they say the message was already there.
struct IdleRecord {
    Rank rank = 0;
    CycleIndex cycle = 0;
    std::optional<Rank> peer;  ///< sending neighbor; empty for ingested data without one
    Direction dir = Direction::Left;
    Cycles start = 0;
    Cycles end = 0;

    Cycles length() const { return end - start; }
    bool operator==(const IdleRecord& o) const {
        return rank == o.rank && cycle == o.cycle && peer == o.peer && dir == o.dir &&
               start == o.start && end == o.end;
    }
};

struct TraceHeader {
    std::uint32_t format_version = 1;
    Rank ranks = 0;
    CycleIndex cycles = 0;
    std::uint64_t clock_hz = 0;
    std::string config_fingerprint;
    std::string source = "simulated";  ///< "simulated" or "ingested"

    bool operator==(const TraceHeader& o) const {
        return format_version == o.format_version && ranks == o.ranks && cycles == o.cycles &&
               clock_hz == o.clock_hz && config_fingerprint == o.config_fingerprint &&
               source == o.source;
    }
};

namespace detail {
inline auto record_order(const IdleRecord& r) {
    return std::make_tuple(r.start, r.rank, r.cycle, static_cast<int>(r.dir));
}
}  // namespace detail

/// A header plus idle records sorted by (start, rank, cycle, dir).
struct Trace {
    TraceHeader header;
    std::vector<IdleRecord> records;

    void sort_records() {
        std::sort(records.begin(), records.end(), [](const IdleRecord& a, const IdleRecord& b) {
            return detail::record_order(a) < detail::record_order(b);
        });
    }

    /// Throws ValidationError on out-of-range ranks/cycles, end < start,
    /// or unsorted records.
    void validate() const {
        const IdleRecord* prev = nullptr;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            const std::string at = "record " + std::to_string(i);
            if (r.rank >= header.ranks)
                throw ValidationError(at + ": rank " + std::to_string(r.rank) + " out of range");
            if (r.peer && *r.peer >= header.ranks)
                throw ValidationError(at + ": peer " + std::to_string(*r.peer) + " out of range");
            if (r.cycle >= header.cycles)
                throw ValidationError(at + ": cycle " + std::to_string(r.cycle) + " out of range");
            if (r.end < r.start) throw ValidationError(at + ": end precedes start");
            if (prev && detail::record_order(r) < detail::record_order(*prev))
                throw ValidationError(at + ": records not sorted by (start, rank, cycle, dir)");
            prev = &r;
        }
    }

    Cycles span_end() const {
        Cycles t = 0;
        for (const auto& r : records) t = std::max(t, r.end);
        return t;
    }
};

/// Canonical writer: one JSON object per line, fixed key order, no spaces.
/// The same trace always produces byte-identical output.
inline std::string write_trace(const Trace& trace) {
    std::string out;
    out.reserve(64 + trace.records.size() * 96);
    out += "{\"type\":\"header\",\"format_version\":";
    out += std::to_string(trace.header.format_version);
    out += ",\"ranks\":";
    out += std::to_string(trace.header.ranks);
    out += ",\"cycles\":";
    out += std::to_string(trace.header.cycles);
    out += ",\"clock_hz\":";
    out += std::to_string(trace.header.clock_hz);
    out += ",\"config_fingerprint\":\"";
    out += trace.header.config_fingerprint;
    out += "\",\"source\":\"";
    out += trace.header.source;
    out += "\"}\n";
    for (const auto& r : trace.records) {
        out += "{\"type\":\"idle\",\"rank\":";
        out += std::to_string(r.rank);
        out += ",\"cycle\":";
        out += std::to_string(r.cycle);
        out += ",\"peer\":";
        out += r.peer ? std::to_string(*r.peer) : "null";
        out += ",\"dir\":\"";
        out += direction_char(r.dir);
        out += "\",\"start\":";
        out += std::to_string(r.start);
        out += ",\"end\":";
        out += std::to_string(r.end);
        out += "}\n";
    }
    return out;
}

inline void write_trace_file(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    const std::string s = write_trace(trace);
    out.write(s.data(), std::streamsize(s.size()));
    if (!out) throw Error("short write to '" + path + "'");
}

inline Trace read_trace(std::istream& in) {
    using nlohmann::json;
    Trace trace;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
        const std::string at = "line " + std::to_string(lineno);
        try {
            const std::string type = j.at("type").get<std::string>();
            if (type == "header") {
                if (have_header) throw ParseError(at + ": duplicate header");
                trace.header.format_version = j.at("format_version").get<std::uint32_t>();
                if (trace.header.format_version != 1)
                    throw ParseError(at + ": unsupported format_version " +
                                     std::to_string(trace.header.format_version));
                trace.header.ranks = j.at("ranks").get<Rank>();
                trace.header.cycles = j.at("cycles").get<CycleIndex>();
                trace.header.clock_hz = j.at("clock_hz").get<std::uint64_t>();
                trace.header.config_fingerprint = j.at("config_fingerprint").get<std::string>();
                trace.header.source = j.at("source").get<std::string>();
                have_header = true;
            } else if (type == "idle") {
                if (!have_header) throw ParseError(at + ": idle record before header");
                IdleRecord r;
                r.rank = j.at("rank").get<Rank>();
                r.cycle = j.at("cycle").get<CycleIndex>();
                if (!j.at("peer").is_null()) r.peer = j.at("peer").get<Rank>();
                const std::string d = j.at("dir").get<std::string>();
                if (d == "L") r.dir = Direction::Left;
                else if (d == "R") r.dir = Direction::Right;
                else throw ParseError(at + ": dir must be \"L\" or \"R\", got \"" + d + "\"");
                r.start = j.at("start").get<Cycles>();
                r.end = j.at("end").get<Cycles>();
                trace.records.push_back(r);
            } else {
                throw ParseError(at + ": unknown record type \"" + type + "\"");
            }
        } catch (const json::exception& e) {
            throw ParseError(at + ": " + e.what());
        }
    }
    if (!have_header) throw ParseError("trace has no header line");
    trace.validate();
    return trace;
}

inline Trace read_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open trace file '" + path + "'");
    return read_trace(in);
}

/// CSV ingest for externally measured waiting times. First row is a header
/// naming columns rank,cycle,peer,dir,start,end in any order; peer may be
/// empty or "none". Rows are re-sorted into canonical order.
inline Trace ingest_csv(std::istream& in, std::uint64_t clock_hz) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv is empty");
    auto cells = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (const char c : s) {
            if (c == ',') {
                out.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur += c;
            }
        }
        out.push_back(cur);
        return out;
    };
    const auto header = cells(line);
    int col_rank = -1, col_cycle = -1, col_peer = -1, col_dir = -1, col_start = -1, col_end = -1;
    for (int i = 0; i < int(header.size()); ++i) {
        const std::string& h = header[std::size_t(i)];
        if (h == "rank") col_rank = i;
        else if (h == "cycle") col_cycle = i;
        else if (h == "peer") col_peer = i;
        else if (h == "dir") col_dir = i;
        else if (h == "start") col_start = i;
        else if (h == "end") col_end = i;
        else throw ParseError("csv header: unknown column '" + h + "'");
    }
    for (const auto& [name, col] : {std::pair{"rank", col_rank}, {"cycle", col_cycle},
                                    {"dir", col_dir}, {"start", col_start}, {"end", col_end}}) {
        if (col < 0) throw ParseError(std::string("csv header: missing column '") + name + "'");
    }

    Trace trace;
    trace.header.clock_hz = clock_hz;
    trace.header.source = "ingested";
    Rank max_rank = 0;
    CycleIndex max_cycle = 0;
    int lineno = 1;
    auto number = [](const std::string& v, const std::string& where) {
        std::uint64_t out{};
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size())
            throw ParseError(where + ": expected a non-negative integer, got '" + v + "'");
        return out;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto row = cells(line);
        const std::string at = "csv row " + std::to_string(lineno);
        if (row.size() != header.size())
            throw ParseError(at + ": expected " + std::to_string(header.size()) +
                             " cells, got " + std::to_string(row.size()));
        IdleRecord r;
        r.rank = Rank(number(row[std::size_t(col_rank)], at + " rank"));
        r.cycle = CycleIndex(number(row[std::size_t(col_cycle)], at + " cycle"));
        if (col_peer >= 0) {
            const std::string& p = row[std::size_t(col_peer)];
            if (!p.empty() && p != "none") r.peer = Rank(number(p, at + " peer"));
        }
        const std::string& d = row[std::size_t(col_dir)];
        if (d == "L" || d == "left") r.dir = Direction::Left;
        else if (d == "R" || d == "right") r.dir = Direction::Right;
        else throw ParseError(at + ": dir must be left/right/L/R, got '" + d + "'");
        r.start = number(row[std::size_t(col_start)], at + " start");
        r.end = number(row[std::size_t(col_end)], at + " end");
        if (r.end < r.start) throw ParseError(at + ": end precedes start");
        max_rank = std::max(max_rank, r.rank);
        if (r.peer) max_rank = std::max(max_rank, *r.peer);
        max_cycle = std::max(max_cycle, r.cycle);
        trace.records.push_back(r);
    }
    if (trace.records.empty()) throw ParseError("csv has a header but no data rows");
    trace.header.ranks = max_rank + 1;
    trace.header.cycles = max_cycle + 1;
    trace.sort_records();
    trace.validate();
    return trace;
}

inline Trace ingest_csv_file(const std::string& path, std::uint64_t clock_hz) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open csv file '" + path + "'");
    return ingest_csv(in, clock_hz);
}

}  // namespace idlewave
