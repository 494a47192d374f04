#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

#include "idlewave/app.hpp"
#include "idlewave/config.hpp"
#include "idlewave/network.hpp"
#include "idlewave/noise.hpp"
#include "idlewave/rng.hpp"
#include "idlewave/topology.hpp"
#include "idlewave/trace.hpp"
#include "idlewave/types.hpp"

namespace idlewave {

struct EngineOptions {
    bool swap_wait_order = false;  ///< wait right before left (send order unchanged)
    bool record_audit = false;     ///< keep a log of every delivered message
};

/// One delivered message, for causality checks.
struct MessageAudit {
    Rank from = 0;
    Rank to = 0;
    CycleIndex tag = 0;
    Direction channel = Direction::Left;  ///< receiver-side channel
    Cycles initiated = 0;                 ///< send call time at the sender
    Cycles arrival = 0;
};

/// Where every cycle of a rank's lifetime went. The four buckets partition
/// [0, completion) exactly.
struct Accounting {
    Cycles compute = 0;
    Cycles idle = 0;
    Cycles send = 0;  ///< send overhead plus NIC stall
    Cycles noise = 0;
};

struct RankSummary {
    Accounting acct;
    Cycles completion = 0;
};

struct SimResult {
    Trace trace;
    std::vector<RankSummary> ranks;
    std::vector<NicState> nics;  ///< one per node
    std::vector<MessageAudit> audit;
};

namespace detail {

enum class EventKind : std::uint8_t {
    MessageArrive = 0,
    NicGranted = 1,
    ComputeDone = 2,
    NoiseStart = 3,
    NoiseEnd = 4,
};

struct Event {
    Cycles time = 0;
    Rank rank = 0;  ///< receiver for MessageArrive, owner otherwise
    EventKind kind = EventKind::ComputeDone;
    std::uint64_t seq = 0;
    // MessageArrive payload
    Direction channel = Direction::Left;
    CycleIndex tag = 0;
    Rank from = 0;
    Cycles initiated = 0;
};

// min-heap order: (time, rank, kind, seq)
struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        return std::make_tuple(a.time, a.rank, static_cast<int>(a.kind), a.seq) >
               std::make_tuple(b.time, b.rank, static_cast<int>(b.kind), b.seq);
    }
};

enum class Phase : std::uint8_t { Running, Computing, Paused, SendStalled, WaitingRecv, Done };

struct ChannelState {
    std::optional<CycleIndex> posted;
    std::optional<Cycles> arrival;
    std::deque<std::pair<CycleIndex, Cycles>> unexpected;  // (tag, arrival), FIFO
};

struct RankState {
    Phase phase = Phase::Running;
    CycleIndex cycle = 0;
    std::size_t pc = 0;
    std::vector<Action> protocol;
    Cycles now = 0;
    Cycles compute_remaining = 0;
    Cycles seg_start = 0;
    bool inject_taken = false;
    ChannelState ch[2];
    Direction wait_side = Direction::Left;
    Cycles wait_entry = 0;
    std::optional<BlackoutInterval> pending_blackout;
    BlackoutFeed feed;
    std::uint64_t jitter_seed = 0;
    Accounting acct;
    Cycles completion = 0;
};

}  // namespace detail

/// Deterministic discrete-event core. Events are processed in total order
/// (time, rank, kind, insertion sequence); a given config and seed always
/// produces the same trace, byte for byte.
class Engine {
  public:
    explicit Engine(const SimConfig& cfg, EngineOptions opts = {})
        : cfg_(cfg), opts_(opts), base_cost_(cfg.app.base_compute_cost()) {
        validate(cfg_);
        const Rank n = cfg_.topology.ranks;
        nics_.resize(cfg_.topology.node_count());
        ranks_.resize(n);
        for (Rank r = 0; r < n; ++r) {
            auto& st = ranks_[r];
            st.protocol = cycle_protocol(r, n, cfg_.app.boundary);
            if (opts_.swap_wait_order && st.protocol.size() >= 2) {
                auto& a = st.protocol[st.protocol.size() - 2];
                auto& b = st.protocol[st.protocol.size() - 1];
                if (a.kind == ActionKind::Wait && b.kind == ActionKind::Wait) std::swap(a, b);
            }
            const std::uint64_t rs = rng::rank_seed(cfg_.seed, r);
            st.jitter_seed = rng::substream(rs, 1);
            st.feed = BlackoutFeed(r, cfg_.noise.os_noise, rng::substream(rs, 2));
        }
        records_.reserve(std::size_t(n) * cfg_.app.cycles * 2);
    }

    SimResult run() {
        const Rank n = cfg_.topology.ranks;
        for (Rank r = 0; r < n; ++r) run_actions(r);
        while (done_ < n) {
            if (heap_.empty()) throw InternalError("deadlock: ranks pending but no events");
            const detail::Event e = heap_.top();
            heap_.pop();
            dispatch(e);
        }
        if (!heap_.empty()) throw InternalError("stray events after completion");

        SimResult result;
        result.trace.header.ranks = n;
        result.trace.header.cycles = cfg_.app.cycles;
        result.trace.header.clock_hz = cfg_.clock_hz;
        result.trace.header.config_fingerprint = config_fingerprint(cfg_);
        result.trace.header.source = "simulated";
        result.trace.records = std::move(records_);
        result.trace.sort_records();
        result.ranks.reserve(n);
        for (const auto& st : ranks_) result.ranks.push_back({st.acct, st.completion});
        result.nics = nics_;
        result.audit = std::move(audit_);
        return result;
    }

  private:
    using EventKind = detail::EventKind;
    using Phase = detail::Phase;

    static std::size_t side_index(Direction d) { return static_cast<std::size_t>(d); }

    void schedule(Cycles t, EventKind k, Rank r) {
        detail::Event e;
        e.time = t;
        e.rank = r;
        e.kind = k;
        e.seq = seq_++;
        heap_.push(e);
    }

    void schedule_arrival(Cycles t, Rank to, Direction channel, CycleIndex tag, Rank from,
                          Cycles initiated) {
        detail::Event e;
        e.time = t;
        e.rank = to;
        e.kind = EventKind::MessageArrive;
        e.seq = seq_++;
        e.channel = channel;
        e.tag = tag;
        e.from = from;
        e.initiated = initiated;
        heap_.push(e);
        if (opts_.record_audit) audit_.push_back({from, to, tag, channel, initiated, t});
    }

    void emit(Rank r, CycleIndex cycle, Rank peer, Direction dir, Cycles start, Cycles end) {
        records_.push_back({r, cycle, peer, dir, start, end});
    }

    /// Schedule the next step of the current compute block from st.now.
    /// Returns true when blocked on an event.
    bool continue_compute(detail::RankState& st, Rank r) {
        for (;;) {
            if (st.compute_remaining == 0) return false;
            const auto b = st.feed.peek_ending_after(st.now);
            if (b && b->start <= st.now) {
                st.acct.noise += b->end() - st.now;
                st.feed.consume();
                st.phase = Phase::Paused;
                schedule(b->end(), EventKind::NoiseEnd, r);
                return true;
            }
            st.seg_start = st.now;
            if (!b || st.now + st.compute_remaining <= b->start) {
                st.phase = Phase::Computing;
                schedule(st.now + st.compute_remaining, EventKind::ComputeDone, r);
            } else {
                st.pending_blackout = *b;
                st.phase = Phase::Computing;
                schedule(b->start, EventKind::NoiseStart, r);
            }
            return true;
        }
    }

    /// Execute protocol actions inline until the rank blocks or finishes.
    void run_actions(Rank r) {
        auto& st = ranks_[r];
        st.phase = Phase::Running;
        const Rank n = cfg_.topology.ranks;
        for (;;) {
            if (st.pc == st.protocol.size()) {
                ++st.cycle;
                st.inject_taken = false;
                st.pc = 0;
                if (st.cycle == cfg_.app.cycles) {
                    st.phase = Phase::Done;
                    st.completion = st.now;
                    ++done_;
                    return;
                }
            }
            const Action& a = st.protocol[st.pc];
            switch (a.kind) {
                case ActionKind::PostRecv: {
                    auto& chan = st.ch[side_index(*a.side)];
                    chan.posted = st.cycle;
                    chan.arrival.reset();
                    if (!chan.unexpected.empty()) {
                        const auto [utag, ut] = chan.unexpected.front();
                        if (utag == st.cycle) {
                            chan.arrival = ut;
                            chan.unexpected.pop_front();
                        } else if (utag < st.cycle) {
                            throw InternalError("stale unexpected message");
                        }
                    }
                    ++st.pc;
                    break;
                }
                case ActionKind::Compute: {
                    if (!st.inject_taken) {
                        st.inject_taken = true;
                        st.compute_remaining =
                            compute_cost(r, st.cycle, base_cost_, cfg_.noise, st.jitter_seed);
                        const Cycles inj = cfg_.noise.injected_total(r, st.cycle);
                        if (inj > 0) {
                            st.acct.noise += inj;
                            st.phase = Phase::Paused;
                            schedule(st.now + inj, EventKind::NoiseEnd, r);
                            return;
                        }
                    }
                    if (continue_compute(st, r)) return;
                    ++st.pc;
                    break;
                }
                case ActionKind::Send: {
                    const Direction s = *a.side;
                    const Rank peer = *neighbor(r, s, n, cfg_.app.boundary);
                    const Cycles ts = st.now;
                    const Cycles o = cfg_.network.send_overhead;
                    st.acct.send += o;
                    const LocalityClass lc = locality(r, peer, cfg_.topology);
                    const Cycles tt = transfer_time(cfg_.app.message_bytes, lc, cfg_.network);
                    const Cycles t_req = ts + o;
                    ++st.pc;
                    if (lc == LocalityClass::InterNode && cfg_.network.nic_contention) {
                        auto& nic = nics_[locate(r, cfg_.topology).node];
                        const Cycles grant = nic.request(t_req, cfg_.network.nic_service);
                        schedule_arrival(grant + cfg_.network.nic_service + tt + o, peer,
                                         opposite(s), st.cycle, r, ts);
                        if (grant > t_req) {
                            st.acct.send += grant - t_req;
                            st.phase = Phase::SendStalled;
                            schedule(grant, EventKind::NicGranted, r);
                            return;
                        }
                    } else {
                        schedule_arrival(t_req + tt + o, peer, opposite(s), st.cycle, r, ts);
                    }
                    st.now = t_req;
                    break;
                }
                case ActionKind::Wait: {
                    const Direction s = *a.side;
                    auto& chan = st.ch[side_index(s)];
                    if (!chan.posted) throw InternalError("wait without a posted receive");
                    if (chan.arrival) {
                        emit(r, st.cycle, *neighbor(r, s, n, cfg_.app.boundary), s, st.now,
                             st.now);
                        chan.posted.reset();
                        chan.arrival.reset();
                        ++st.pc;
                        break;
                    }
                    st.phase = Phase::WaitingRecv;
                    st.wait_side = s;
                    st.wait_entry = st.now;
                    return;
                }
            }
        }
    }

    void dispatch(const detail::Event& e) {
        auto& st = ranks_[e.rank];
        switch (e.kind) {
            case EventKind::MessageArrive: {
                auto& chan = st.ch[side_index(e.channel)];
                if (chan.posted) {
                    if (*chan.posted == e.tag) {
                        if (chan.arrival) throw InternalError("duplicate message");
                        chan.arrival = e.time;
                        if (st.phase == Phase::WaitingRecv && st.wait_side == e.channel) {
                            // the rank's inline clock may have run past the
                            // arrival; the wait then costs nothing
                            const Cycles exit = wait_exit(st.wait_entry, e.time);
                            st.acct.idle += idle_of_wait(st.wait_entry, e.time);
                            emit(e.rank, st.cycle, e.from, e.channel, st.wait_entry, exit);
                            chan.posted.reset();
                            chan.arrival.reset();
                            ++st.pc;
                            st.now = exit;
                            run_actions(e.rank);
                        }
                    } else if (e.tag > *chan.posted) {
                        chan.unexpected.push_back({e.tag, e.time});
                    } else {
                        throw InternalError("message older than the posted receive");
                    }
                } else {
                    if (e.tag > st.cycle) {
                        chan.unexpected.push_back({e.tag, e.time});
                    } else {
                        throw InternalError("unmatched stale message");
                    }
                }
                break;
            }
            case EventKind::NicGranted: {
                st.now = e.time;
                run_actions(e.rank);
                break;
            }
            case EventKind::ComputeDone: {
                st.acct.compute += st.compute_remaining;
                st.compute_remaining = 0;
                st.now = e.time;
                run_actions(e.rank);
                break;
            }
            case EventKind::NoiseStart: {
                const Cycles ran = e.time - st.seg_start;
                st.acct.compute += ran;
                st.compute_remaining -= ran;
                const BlackoutInterval b = *st.pending_blackout;
                st.pending_blackout.reset();
                st.acct.noise += b.end() - e.time;
                st.feed.consume();
                st.phase = Phase::Paused;
                schedule(b.end(), EventKind::NoiseEnd, e.rank);
                break;
            }
            case EventKind::NoiseEnd: {
                st.now = e.time;
                run_actions(e.rank);
                break;
            }
        }
    }

    SimConfig cfg_;
    EngineOptions opts_;
    Cycles base_cost_;
    std::vector<detail::RankState> ranks_;
    std::vector<NicState> nics_;
    std::priority_queue<detail::Event, std::vector<detail::Event>, detail::EventAfter> heap_;
    std::vector<IdleRecord> records_;
    std::vector<MessageAudit> audit_;
    std::uint64_t seq_ = 0;
    Rank done_ = 0;
};

inline SimResult run_simulation(const SimConfig& cfg, EngineOptions opts = {}) {
    return Engine(cfg, opts).run();
}

inline Trace simulate(const SimConfig& cfg, EngineOptions opts = {}) {
    return run_simulation(cfg, opts).trace;
}

}  // namespace idlewave
