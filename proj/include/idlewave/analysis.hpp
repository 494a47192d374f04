#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "idlewave/trace.hpp"
#include "idlewave/types.hpp"

namespace idlewave {

// --- per-rank idle statistics ---------------------------------------------

struct RankStats {
    Rank rank = 0;
    std::uint64_t records = 0;  ///< records at or above the threshold
    Cycles total = 0;
    Cycles min_len = 0;
    Cycles max_len = 0;
    double mean = 0.0;
};

/// Length statistics of idle periods >= threshold, one entry per rank
/// (including ranks with no qualifying records).
inline std::vector<RankStats> idle_stats(const Trace& trace, Cycles threshold) {
    std::vector<RankStats> out(trace.header.ranks);
    for (Rank r = 0; r < trace.header.ranks; ++r) out[r].rank = r;
    for (const auto& rec : trace.records) {
        const Cycles len = rec.length();
        if (len < threshold) continue;
        auto& s = out[rec.rank];
        if (s.records == 0 || len < s.min_len) s.min_len = len;
        if (len > s.max_len) s.max_len = len;
        s.total += len;
        ++s.records;
    }
    for (auto& s : out) {
        if (s.records > 0) s.mean = double(s.total) / double(s.records);
    }
    return out;
}

// --- binarized idle series ------------------------------------------------

/// Fixed-length bit vector over time bins; bit b covers [b*bin, (b+1)*bin).
class BinSeries {
  public:
    BinSeries() = default;
    explicit BinSeries(std::size_t bins) : bins_(bins), words_((bins + 63) / 64, 0) {}

    std::size_t bins() const { return bins_; }
    const std::vector<std::uint64_t>& words() const { return words_; }

    void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
    bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1; }

    std::size_t count() const {
        std::size_t c = 0;
        for (const auto w : words_) c += std::size_t(std::popcount(w));
        return c;
    }

  private:
    std::size_t bins_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Marks every bin overlapped by an idle period of length >= threshold.
/// Records outside [0, span) are clipped; zero-length records never mark.
inline BinSeries binarize(const std::vector<IdleRecord>& records, Cycles threshold, Cycles bin,
                          Cycles span) {
    if (bin == 0) throw ArgumentError("bin width must be positive");
    if (span == 0) throw ArgumentError("span must be positive");
    const std::size_t nbins = std::size_t((span + bin - 1) / bin);
    BinSeries out(nbins);
    for (const auto& r : records) {
        if (r.length() < threshold || r.length() == 0) continue;
        if (r.start >= span) continue;
        const Cycles last = std::min(r.end - 1, span - 1);
        const std::size_t b0 = std::size_t(r.start / bin);
        const std::size_t b1 = std::size_t(last / bin);
        for (std::size_t b = b0; b <= b1; ++b) out.set(b);
    }
    return out;
}

/// One series per rank over the whole trace span, all with identical bin count.
inline std::vector<BinSeries> binarize_all(const Trace& trace, Cycles threshold, Cycles bin) {
    const Cycles span = trace.span_end();
    if (span == 0) throw InsufficientDataError("trace covers no time");
    std::vector<std::vector<IdleRecord>> per_rank(trace.header.ranks);
    for (const auto& r : trace.records) per_rank[r.rank].push_back(r);
    std::vector<BinSeries> out;
    out.reserve(trace.header.ranks);
    for (Rank r = 0; r < trace.header.ranks; ++r)
        out.push_back(binarize(per_rank[r], threshold, bin, span));
    return out;
}

namespace detail {

/// b's bits repeated twice, so any 64-bit circular window is one aligned read
/// pair. Bit j holds b[j mod B] for j < 2B.
inline std::vector<std::uint64_t> doubled_words(const BinSeries& b) {
    const std::size_t B = b.bins();
    std::vector<std::uint64_t> out((2 * B + 63) / 64 + 1, 0);
    for (std::size_t i = 0; i < B; ++i) {
        if (!b.test(i)) continue;
        out[i / 64] |= std::uint64_t{1} << (i % 64);
        const std::size_t j = i + B;
        out[j / 64] |= std::uint64_t{1} << (j % 64);
    }
    return out;
}

/// popcount of a AND (b rotated left by s), i.e. |{i : a[i] and b[(i+s) mod B]}|,
/// reading b through its doubled form.
inline std::uint64_t overlap_at(const BinSeries& a, const std::vector<std::uint64_t>& b_doubled,
                                std::size_t s) {
    const std::size_t B = a.bins();
    const std::size_t W = a.words().size();
    const std::size_t q = s / 64, r = s % 64;
    std::uint64_t total = 0;
    for (std::size_t w = 0; w < W; ++w) {
        std::uint64_t win = b_doubled[q + w] >> r;
        if (r != 0) win |= b_doubled[q + w + 1] << (64 - r);
        if (w == W - 1 && B % 64 != 0) win &= (std::uint64_t{1} << (B % 64)) - 1;
        total += std::uint64_t(std::popcount(a.words()[w] & win));
    }
    return total;
}

inline double pearson_binary(std::size_t B, std::uint64_t c, std::size_t ma, std::size_t mb) {
    const double num = double(B) * double(c) - double(ma) * double(mb);
    // single sqrt keeps a perfect overlap at exactly 1.0
    const double den =
        std::sqrt(double(ma) * double(B - ma) * double(mb) * double(B - mb));
    return num / den;
}

}  // namespace detail

// --- phase between two series ---------------------------------------------

struct Phase {
    std::int64_t shift_bins = 0;  ///< positive: b lags a by this many bins
    double corr = 0.0;            ///< Pearson correlation at that shift
};

/// Circular shift of b that best overlaps a, by exact integer match counting;
/// ties resolve to the smallest non-negative shift. Shifts above B/2 are
/// reported as negative.
inline Phase phase_between(const BinSeries& a, const BinSeries& b) {
    const std::size_t B = a.bins();
    if (B == 0 || b.bins() != B)
        throw ArgumentError("phase_between requires equal-length non-empty series");
    const std::size_t ma = a.count(), mb = b.count();
    if (ma == 0 || mb == 0) throw UndefinedPhaseError("a series has no marked bins");
    if (ma == B || mb == B) throw UndefinedPhaseError("a series has no variation");
    const auto bd = detail::doubled_words(b);
    std::uint64_t best_c = 0;
    std::size_t best_s = 0;
    for (std::size_t s = 0; s < B; ++s) {
        const std::uint64_t c = detail::overlap_at(a, bd, s);
        if (c > best_c) {
            best_c = c;
            best_s = s;
        }
    }
    Phase p;
    p.shift_bins = 2 * best_s > B ? std::int64_t(best_s) - std::int64_t(B)
                                  : std::int64_t(best_s);
    p.corr = detail::pearson_binary(B, best_c, ma, mb);
    return p;
}

// --- dominant period of one series ----------------------------------------

inline constexpr std::size_t kMaxPeriodLag = 512;

/// Dominant period in bins via circular autocorrelation: the highest lag
/// past the zero-lag shoulder, accepted when it stands out from the
/// correlation floor by at least 10/sqrt(B). The floor-relative test keeps
/// the estimate usable for dense trains (long idles, short busy gaps) whose
/// off-peak correlation never returns to zero, while still rejecting
/// aperiodic series. Empty when no lag stands out.
inline std::optional<std::size_t> autocorr_period(const BinSeries& a,
                                                  std::size_t max_lag = kMaxPeriodLag) {
    const std::size_t B = a.bins();
    if (B < 4) return std::nullopt;
    const std::size_t m = a.count();
    if (m == 0 || m == B) return std::nullopt;
    const std::size_t dm = std::min(max_lag, B - 1);
    const auto ad = detail::doubled_words(a);
    std::vector<double> r(dm + 1, 0.0);
    for (std::size_t d = 1; d <= dm; ++d)
        r[d] = detail::pearson_binary(B, detail::overlap_at(a, ad, d), m, m);
    std::size_t lo = 1;
    while (lo + 1 <= dm && r[lo + 1] < r[lo]) ++lo;  // end of the shoulder
    if (lo + 1 > dm) return std::nullopt;
    double floor_v = r[lo];
    for (std::size_t d = lo; d <= dm; ++d) floor_v = std::min(floor_v, r[d]);
    std::size_t best = lo + 1;
    for (std::size_t d = lo + 1; d <= dm; ++d)
        if (r[d] > r[best]) best = d;
    if (r[best] - floor_v < 10.0 / std::sqrt(double(B))) return std::nullopt;
    return best;
}

// --- idle wave fronts ------------------------------------------------------

struct WavePoint {
    Rank rank = 0;
    Cycles onset = 0;

    bool operator==(const WavePoint&) const = default;
};

/// A chain of long idle periods crossing consecutive ranks, with a least
/// squares fit of onset time against rank.
struct WaveFront {
    int direction = 1;  ///< +1 toward higher ranks, -1 toward lower
    std::vector<WavePoint> points;
    double slope = 0.0;      ///< fitted cycles per rank (signed)
    double intercept = 0.0;  ///< fitted onset at rank 0
    double r2 = 0.0;
    double speed_ranks_per_gcycle = 0.0;  ///< 1e9/slope; NaN for a flat fit
    double speed_ranks_per_sec = 0.0;     ///< clock_hz/slope
};

namespace detail {

inline void fit_front(WaveFront& f, std::uint64_t clock_hz) {
    const std::size_t n = f.points.size();
    double sx = 0, sy = 0;
    for (const auto& p : f.points) {
        sx += double(p.rank);
        sy += double(p.onset);
    }
    const double mx = sx / double(n), my = sy / double(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& p : f.points) {
        const double dx = double(p.rank) - mx, dy = double(p.onset) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    if (f.slope != 0.0) {
        f.speed_ranks_per_gcycle = 1e9 / f.slope;
        f.speed_ranks_per_sec = double(clock_hz) / f.slope;
    } else {
        f.speed_ranks_per_gcycle = std::numeric_limits<double>::quiet_NaN();
        f.speed_ranks_per_sec = std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace detail

/// Chains idle periods >= threshold across adjacent ranks into propagating
/// fronts. A chain step accepts the earliest unused onset at the next rank
/// within [0, window] after the current one; chains shorter than 3 ranks are
/// dropped. Both directions are scanned; window 0 means 3 mean cycle lengths.
inline std::vector<WaveFront> detect_waves(const Trace& trace, Cycles threshold,
                                           Cycles window = 0) {
    const Rank n = trace.header.ranks;
    const Cycles span = trace.span_end();
    if (window == 0) {
        window = trace.header.cycles > 0 ? 3 * (span / trace.header.cycles) : span;
        if (window == 0) window = span;
    }
    std::vector<std::vector<Cycles>> starts(n);
    for (const auto& r : trace.records) {
        if (r.length() >= threshold) starts[r.rank].push_back(r.start);
    }
    std::vector<WaveFront> fronts;

    const auto run_pass = [&](int dir) {
        std::vector<std::vector<char>> used(n);
        for (Rank r = 0; r < n; ++r) used[r].assign(starts[r].size(), 0);

        const auto try_seed = [&](Rank r0, std::size_t i0) {
            if (used[r0][i0]) return;
            std::vector<std::pair<Rank, std::size_t>> chain{{r0, i0}};
            Cycles t = starts[r0][i0];
            Rank r = r0;
            for (;;) {
                if (dir < 0 && r == 0) break;
                const Rank nr = dir > 0 ? r + 1 : r - 1;
                if (nr >= n) break;
                std::optional<std::size_t> pick;
                for (std::size_t j = 0; j < starts[nr].size(); ++j) {
                    if (used[nr][j]) continue;
                    const Cycles s = starts[nr][j];
                    if (s < t) continue;
                    if (s - t > window) break;
                    pick = j;
                    break;
                }
                if (!pick) break;
                chain.push_back({nr, *pick});
                t = starts[nr][*pick];
                r = nr;
            }
            if (chain.size() < 3) return;
            WaveFront f;
            f.direction = dir;
            for (const auto& [cr, ci] : chain) {
                used[cr][ci] = 1;
                f.points.push_back({cr, starts[cr][ci]});
            }
            detail::fit_front(f, trace.header.clock_hz);
            fronts.push_back(std::move(f));
        };

        if (dir > 0) {
            for (Rank r = 0; r < n; ++r)
                for (std::size_t i = 0; i < starts[r].size(); ++i) try_seed(r, i);
        } else {
            for (Rank r = n; r-- > 0;)
                for (std::size_t i = 0; i < starts[r].size(); ++i) try_seed(r, i);
        }
    };

    run_pass(+1);
    run_pass(-1);
    return fronts;
}

// --- self-synchronization --------------------------------------------------

struct SyncConfig {
    Cycles threshold = 1'000'000;  ///< minimum idle length that counts
    Cycles bin = 1'000'000;        ///< binarization bin width
    std::uint32_t min_periods = 10;  ///< span shorter than this many periods is flagged
    double corr_accept = 0.6;        ///< pair correlation counted as aligned
    double period_tol = 0.10;        ///< relative deviation from the median period
};

struct PhaseEntry {
    Rank rank = 0;
    std::int64_t shift_bins = 0;
    SignedCycles shift_cycles = 0;
    double corr = 0.0;
};

struct ExcludedRank {
    Rank rank = 0;
    std::string reason;
};

struct SyncReport {
    bool synchronized = false;
    bool low_confidence = false;  ///< span shorter than min_periods periods
    double confidence = 0.0;      ///< fraction of well-correlated pairs
    std::size_t period_bins = 0;
    Cycles period = 0;  ///< median common period, cycles
    Cycles bin = 0;
    Rank base = 0;  ///< lowest included rank, phase reference
    std::vector<Rank> included;
    std::vector<ExcludedRank> excluded;
    std::vector<PhaseEntry> phases;  ///< one per included rank; base has shift 0
};

/// Decides whether the ranks' long idle periods lock into a common rhythm.
/// Ranks without long idles, without a clear period, or off the median period
/// are excluded; fewer than 3 remaining ranks throws InsufficientDataError.
inline SyncReport detect_self_sync(const Trace& trace, const SyncConfig& cfg = {}) {
    SyncReport rep;
    rep.bin = cfg.bin;
    const auto series = binarize_all(trace, cfg.threshold, cfg.bin);
    const Rank n = trace.header.ranks;

    std::vector<std::optional<std::size_t>> period(n);
    std::vector<char> alive(n, 0);
    for (Rank r = 0; r < n; ++r) {
        if (series[r].count() == 0) {
            rep.excluded.push_back({r, "no idle periods above threshold"});
            continue;
        }
        period[r] = autocorr_period(series[r]);
        if (!period[r]) {
            rep.excluded.push_back({r, "no periodic idle signature"});
            continue;
        }
        alive[r] = 1;
    }

    std::vector<std::size_t> periods;
    for (Rank r = 0; r < n; ++r)
        if (alive[r]) periods.push_back(*period[r]);
    if (periods.empty())
        throw InsufficientDataError("no rank shows a periodic idle signature");
    std::sort(periods.begin(), periods.end());
    const std::size_t median = periods[(periods.size() - 1) / 2];

    for (Rank r = 0; r < n; ++r) {
        if (!alive[r]) continue;
        const double dev = std::abs(double(*period[r]) - double(median)) / double(median);
        if (dev > cfg.period_tol) {
            alive[r] = 0;
            rep.excluded.push_back({r, "period off the group median"});
        } else {
            rep.included.push_back(r);
        }
    }
    if (rep.included.size() < 3)
        throw InsufficientDataError("fewer than 3 ranks share a common period (" +
                                    std::to_string(rep.included.size()) + " found)");

    rep.period_bins = median;
    rep.period = Cycles(median) * cfg.bin;
    rep.base = rep.included.front();
    rep.phases.push_back({rep.base, 0, 0, 1.0});
    std::size_t aligned = 0;
    for (const Rank r : rep.included) {
        if (r == rep.base) continue;
        const Phase p = phase_between(series[rep.base], series[r]);
        rep.phases.push_back(
            {r, p.shift_bins, SignedCycles(p.shift_bins) * SignedCycles(cfg.bin), p.corr});
        if (p.corr >= cfg.corr_accept) ++aligned;
    }
    rep.confidence = double(aligned) / double(rep.included.size() - 1);
    rep.synchronized = rep.confidence >= 0.5;
    rep.low_confidence = trace.span_end() < Cycles(cfg.min_periods) * rep.period;
    return rep;
}

// --- report serialization ---------------------------------------------------

namespace detail {

inline std::string json_number(double v) {
    if (!std::isfinite(v)) return "null";
    return format_double(v);
}

}  // namespace detail

inline std::string write_stats(const std::vector<RankStats>& stats) {
    std::string out;
    for (const auto& s : stats) {
        out += "{\"type\":\"rank_stats\",\"rank\":" + std::to_string(s.rank);
        out += ",\"records\":" + std::to_string(s.records);
        out += ",\"total\":" + std::to_string(s.total);
        out += ",\"min\":" + std::to_string(s.min_len);
        out += ",\"mean\":" + detail::json_number(s.mean);
        out += ",\"max\":" + std::to_string(s.max_len);
        out += "}\n";
    }
    return out;
}

inline std::string write_waves(const std::vector<WaveFront>& fronts) {
    std::string out;
    for (const auto& f : fronts) {
        out += "{\"type\":\"wave\",\"direction\":" + std::to_string(f.direction);
        out += ",\"ranks\":" + std::to_string(f.points.size());
        out += ",\"slope\":" + detail::json_number(f.slope);
        out += ",\"intercept\":" + detail::json_number(f.intercept);
        out += ",\"r2\":" + detail::json_number(f.r2);
        out += ",\"speed_ranks_per_gcycle\":" + detail::json_number(f.speed_ranks_per_gcycle);
        out += ",\"speed_ranks_per_sec\":" + detail::json_number(f.speed_ranks_per_sec);
        out += ",\"points\":[";
        for (std::size_t i = 0; i < f.points.size(); ++i) {
            if (i) out += ',';
            out += "[" + std::to_string(f.points[i].rank) + "," +
                   std::to_string(f.points[i].onset) + "]";
        }
        out += "]}\n";
    }
    return out;
}

inline std::string write_sync_report(const SyncReport& rep) {
    std::string out;
    out += "{\"type\":\"sync\",\"synchronized\":";
    out += rep.synchronized ? "true" : "false";
    out += ",\"low_confidence\":";
    out += rep.low_confidence ? "true" : "false";
    out += ",\"confidence\":" + detail::json_number(rep.confidence);
    out += ",\"period\":" + std::to_string(rep.period);
    out += ",\"period_bins\":" + std::to_string(rep.period_bins);
    out += ",\"bin\":" + std::to_string(rep.bin);
    out += ",\"base\":" + std::to_string(rep.base);
    out += "}\n";
    for (const auto& e : rep.excluded) {
        out += "{\"type\":\"excluded\",\"rank\":" + std::to_string(e.rank) + ",\"reason\":\"" +
               e.reason + "\"}\n";
    }
    for (const auto& p : rep.phases) {
        out += "{\"type\":\"phase\",\"rank\":" + std::to_string(p.rank);
        out += ",\"shift_bins\":" + std::to_string(p.shift_bins);
        out += ",\"shift_cycles\":" + std::to_string(p.shift_cycles);
        out += ",\"corr\":" + detail::json_number(p.corr);
        out += "}\n";
    }
    return out;
}

inline SyncReport parse_sync_report(std::istream& in) {
    using nlohmann::json;
    SyncReport rep;
    bool have_sync = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string at = "line " + std::to_string(lineno);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(at + ": " + e.what());
        }
        try {
            const std::string type = j.at("type").get<std::string>();
            if (type == "sync") {
                rep.synchronized = j.at("synchronized").get<bool>();
                rep.low_confidence = j.at("low_confidence").get<bool>();
                rep.confidence = j.at("confidence").get<double>();
                rep.period = j.at("period").get<Cycles>();
                rep.period_bins = j.at("period_bins").get<std::size_t>();
                rep.bin = j.at("bin").get<Cycles>();
                rep.base = j.at("base").get<Rank>();
                have_sync = true;
            } else if (type == "excluded") {
                rep.excluded.push_back(
                    {j.at("rank").get<Rank>(), j.at("reason").get<std::string>()});
            } else if (type == "phase") {
                PhaseEntry p;
                p.rank = j.at("rank").get<Rank>();
                p.shift_bins = j.at("shift_bins").get<std::int64_t>();
                p.shift_cycles = j.at("shift_cycles").get<SignedCycles>();
                p.corr = j.at("corr").is_null() ? 0.0 : j.at("corr").get<double>();
                rep.phases.push_back(p);
                rep.included.push_back(p.rank);
            } else {
                throw ParseError(at + ": unknown record type \"" + type + "\"");
            }
        } catch (const json::exception& e) {
            throw ParseError(at + ": " + e.what());
        }
    }
    if (!have_sync) throw ParseError("sync report has no summary line");
    return rep;
}

inline SyncReport parse_sync_report_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open sync report '" + path + "'");
    return parse_sync_report(in);
}

}  // namespace idlewave
