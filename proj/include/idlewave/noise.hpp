#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "idlewave/rng.hpp"
#include "idlewave/types.hpp"

namespace idlewave {

/// A set of ranks given as inclusive ranges, or "all".
struct RankSet {
    bool all = true;
    std::vector<std::pair<Rank, Rank>> ranges;  // inclusive, sorted, non-overlapping

    static RankSet everyone() { return RankSet{}; }

    static RankSet of_ranges(std::vector<std::pair<Rank, Rank>> r) {
        RankSet s;
        s.all = false;
        std::sort(r.begin(), r.end());
        s.ranges = std::move(r);
        return s;
    }

    bool contains(Rank r) const {
        if (all) return true;
        for (const auto& [lo, hi] : ranges)
            if (r >= lo && r <= hi) return true;
        return false;
    }
};

/// Periodic OS-noise class: blackout events of fixed duration at
/// t_k = k*period +- jitter, affecting a subset of ranks. High-frequency
/// short-duration and low-frequency long-duration noise are both instances.
struct OsNoiseClass {
    Cycles period = 1'000'000;
    Cycles duration = 1'000;
    double jitter_fraction = 0.0;  // event k lands in k*period +- jitter_fraction*period
    RankSet affected = RankSet::everyone();
};

/// A deterministic one-shot delay: rank r pauses for `duration` at the start
/// of computational cycle `cycle`.
struct InjectedDelay {
    Rank rank = 0;
    CycleIndex cycle = 0;
    Cycles duration = 0;
};

/// A per-rank static speed multiplier over a contiguous rank range.
struct SpeedOverride {
    Rank lo = 0;
    Rank hi = 0;  // inclusive
    double factor = 1.0;
};

struct NoiseConfig {
    double default_speed_factor = 1.0;
    std::vector<SpeedOverride> speed_overrides;
    double jitter_sigma = 0.0;  // log-normal spread of per-cycle compute cost
    std::vector<OsNoiseClass> os_noise;
    std::vector<InjectedDelay> injected_delays;

    double speed_factor(Rank r) const {
        double f = default_speed_factor;
        for (const auto& o : speed_overrides)
            if (r >= o.lo && r <= o.hi) f = o.factor;
        return f;
    }

    Cycles injected_total(Rank r, CycleIndex c) const {
        Cycles sum = 0;
        for (const auto& d : injected_delays)
            if (d.rank == r && d.cycle == c) sum += d.duration;
        return sum;
    }
};

/// Effective compute cost of one cycle:
/// round(base * speed_factor(rank) * jitter), jitter drawn log-normally with
/// median 1 and spread jitter_sigma from the rank's stream, keyed by the cycle
/// index. Returns base exactly when factor is 1 and sigma is 0.
inline Cycles compute_cost(Rank r, CycleIndex cycle, Cycles base, const NoiseConfig& cfg,
                           std::uint64_t rank_jitter_seed) {
    double v = double(base) * cfg.speed_factor(r);
    if (cfg.jitter_sigma > 0.0) {
        v *= rng::lognormal_median1(rank_jitter_seed, cycle, cfg.jitter_sigma);
    }
    const double rounded = std::nearbyint(v);
    return rounded <= 0.0 ? Cycles{0} : Cycles(rounded);
}

struct BlackoutInterval {
    Cycles start = 0;
    Cycles duration = 0;

    Cycles end() const { return start + duration; }
    bool operator==(const BlackoutInterval&) const = default;
};

namespace detail {

/// Start time of event k of one noise class, for one rank. Pure in
/// (seed, class index, k) so the schedule list and the engine's incremental
/// feed agree exactly.
inline Cycles noise_event_start(std::uint64_t noise_seed, std::size_t class_index,
                                const OsNoiseClass& cls, std::uint64_t k) {
    const double nominal = double(k) * double(cls.period);
    if (cls.jitter_fraction <= 0.0) return Cycles(nominal);
    const std::uint64_t sub = rng::substream(noise_seed, 0x05C1A55 + class_index);
    const double offset =
        rng::symmetric_unit(sub, k) * cls.jitter_fraction * double(cls.period);
    const double t = std::nearbyint(nominal + offset);
    return t <= 0.0 ? Cycles{0} : Cycles(t);
}

}  // namespace detail

/// All blackout events of one class hitting `rank` before `horizon`,
/// in event-index order. With jitter_fraction <= 1/2 that order is also
/// start-time order.
inline std::vector<BlackoutInterval> os_noise_schedule(Rank rank, Cycles horizon,
                                                       const OsNoiseClass& cls,
                                                       std::size_t class_index,
                                                       std::uint64_t noise_seed) {
    std::vector<BlackoutInterval> out;
    if (!cls.affected.contains(rank) || horizon == 0) return out;
    for (std::uint64_t k = 0;; ++k) {
        const Cycles start = detail::noise_event_start(noise_seed, class_index, cls, k);
        if (double(k) * double(cls.period) >= double(horizon) + double(cls.period)) break;
        if (start < horizon) out.push_back({start, cls.duration});
    }
    std::sort(out.begin(), out.end(),
              [](const BlackoutInterval& a, const BlackoutInterval& b) {
                  return a.start < b.start;
              });
    return out;
}

/// Incremental per-rank merge of all noise classes, consumed by the engine in
/// start order. Equivalent to concatenating os_noise_schedule() over classes
/// and sorting, but without a horizon.
class BlackoutFeed {
  public:
    BlackoutFeed() = default;

    BlackoutFeed(Rank rank, const std::vector<OsNoiseClass>& classes, std::uint64_t noise_seed)
        : classes_(&classes), noise_seed_(noise_seed) {
        next_index_.assign(classes.size(), 0);
        for (std::size_t i = 0; i < classes.size(); ++i) {
            if (classes[i].affected.contains(rank) && classes[i].duration > 0) {
                push_next(i);
            } else {
                next_index_[i] = kDisabled;
            }
        }
    }

    /// Earliest-starting blackout whose end is after t, consuming every
    /// blackout that ends at or before t. Empty when no noise is configured.
    std::optional<BlackoutInterval> peek_ending_after(Cycles t) {
        while (!heap_.empty()) {
            const Entry top = heap_.top();
            if (top.interval.end() > t) return top.interval;
            pop_and_refill();
        }
        return std::nullopt;
    }

    /// Consume the interval returned by the last peek.
    void consume() { pop_and_refill(); }

  private:
    static constexpr std::uint64_t kDisabled = ~std::uint64_t{0};

    struct Entry {
        BlackoutInterval interval;
        std::size_t class_index;

        // min-heap by (start, class index) for a deterministic merge
        bool operator<(const Entry& other) const {
            if (interval.start != other.interval.start)
                return interval.start > other.interval.start;
            return class_index > other.class_index;
        }
    };

    void push_next(std::size_t class_index) {
        const auto& cls = (*classes_)[class_index];
        const std::uint64_t k = next_index_[class_index]++;
        heap_.push(Entry{{detail::noise_event_start(noise_seed_, class_index, cls, k),
                          cls.duration},
                         class_index});
    }

    void pop_and_refill() {
        const std::size_t ci = heap_.top().class_index;
        heap_.pop();
        push_next(ci);
    }

    const std::vector<OsNoiseClass>* classes_ = nullptr;
    std::uint64_t noise_seed_ = 0;
    std::vector<std::uint64_t> next_index_;
    std::priority_queue<Entry> heap_;
};

}  // namespace idlewave
