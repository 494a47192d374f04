#pragma once

#include <cmath>
#include <cstdint>

#include "idlewave/topology.hpp"
#include "idlewave/types.hpp"

namespace idlewave {

/// Point-to-point cost parameters with three locality tiers plus a per-node
/// shared NIC. Values are clock cycles (bandwidth_cost is cycles per byte).
struct NetworkParams {
    Cycles latency_intra_socket = 2'000;
    Cycles latency_inter_socket = 6'000;
    Cycles latency_inter_node = 20'000;
    double bandwidth_cost = 1.0;
    Cycles send_overhead = 1'000;
    Cycles nic_service = 4'000;       // per inter-node message
    bool nic_contention = true;

    Cycles latency(LocalityClass c) const {
        switch (c) {
            case LocalityClass::IntraSocket: return latency_intra_socket;
            case LocalityClass::InterSocket: return latency_inter_socket;
            case LocalityClass::InterNode: return latency_inter_node;
        }
        return latency_inter_node;
    }
};

/// latency(class) + bandwidth_cost * size. Total function, monotone in both
/// the size and the locality tier.
inline Cycles transfer_time(std::uint64_t size_bytes, LocalityClass c, const NetworkParams& p) {
    return p.latency(c) + Cycles(std::llround(p.bandwidth_cost * double(size_bytes)));
}

/// One shared NIC per node. Requests are granted FIFO in request order; at
/// most one message is in service at a time. The caller (the event engine)
/// issues requests in deterministic global time order, which is what makes
/// busy_until sufficient to realize the FIFO queue.
struct NicState {
    Cycles busy_until = 0;
    std::uint64_t messages = 0;
    Cycles busy_total = 0;

    /// Returns the grant time; service occupies [grant, grant + nic_service).
    Cycles request(Cycles t_request, Cycles nic_service) {
        const Cycles grant = t_request > busy_until ? t_request : busy_until;
        busy_until = grant + nic_service;
        ++messages;
        busy_total += nic_service;
        return grant;
    }
};

}  // namespace idlewave
