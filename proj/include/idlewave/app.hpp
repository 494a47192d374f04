#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "idlewave/types.hpp"

namespace idlewave {

enum class Boundary : std::uint8_t { NonPeriodic = 0, Periodic = 1 };

/// The halo-exchange application: per cycle, each rank computes a fixed
/// workload and exchanges one message with each neighbor. Computation is a
/// pure cycle cost (grid_points_per_rank * cost_per_point); no numerics.
struct AppConfig {
    std::uint64_t grid_points_per_rank = 1'000'000;
    double cost_per_point = 1.0;
    CycleIndex cycles = 100;
    Boundary boundary = Boundary::NonPeriodic;
    std::uint64_t message_bytes = 8;
    bool overlap = false;  // non-blocking overlap; accepted in config, rejected as unimplemented

    Cycles base_compute_cost() const {
        return Cycles(std::llround(double(grid_points_per_rank) * cost_per_point));
    }
};

/// Neighbor of r on the given side, or nullopt at a non-periodic edge.
inline std::optional<Rank> neighbor(Rank r, Direction side, Rank ranks, Boundary b) {
    if (side == Direction::Left) {
        if (r > 0) return r - 1;
        return b == Boundary::Periodic ? std::optional<Rank>(ranks - 1) : std::nullopt;
    }
    if (r + 1 < ranks) return r + 1;
    return b == Boundary::Periodic ? std::optional<Rank>(0) : std::nullopt;
}

/// Pure wait accounting for a split receive: the measured idle is the time
/// between wait entry and message arrival, zero when the message already
/// arrived. Wait exit is max(entry, arrival).
inline Cycles idle_of_wait(Cycles entry, Cycles arrival) {
    return arrival > entry ? arrival - entry : 0;
}

inline Cycles wait_exit(Cycles entry, Cycles arrival) {
    return arrival > entry ? arrival : entry;
}

// --- cycle protocol -------------------------------------------------------

enum class ActionKind : std::uint8_t { PostRecv, Compute, Send, Wait };

struct Action {
    ActionKind kind;
    std::optional<Direction> side;  // empty for Compute

    bool operator==(const Action&) const = default;
};

/// Ordered actions of one computational cycle, the contract the engine
/// executes: post both receives, compute, send left then right, wait left
/// then right. Sides without a neighbor are skipped, so an interior rank
/// emits two idle records per cycle and a non-periodic edge rank one.
inline std::vector<Action> cycle_protocol(Rank r, Rank ranks, Boundary b) {
    std::vector<Action> actions;
    const bool has_left = neighbor(r, Direction::Left, ranks, b).has_value();
    const bool has_right = neighbor(r, Direction::Right, ranks, b).has_value();
    if (has_left) actions.push_back({ActionKind::PostRecv, Direction::Left});
    if (has_right) actions.push_back({ActionKind::PostRecv, Direction::Right});
    actions.push_back({ActionKind::Compute, std::nullopt});
    if (has_left) actions.push_back({ActionKind::Send, Direction::Left});
    if (has_right) actions.push_back({ActionKind::Send, Direction::Right});
    if (has_left) actions.push_back({ActionKind::Wait, Direction::Left});
    if (has_right) actions.push_back({ActionKind::Wait, Direction::Right});
    return actions;
}

}  // namespace idlewave
