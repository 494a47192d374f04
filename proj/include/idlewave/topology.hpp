#pragma once

#include <cstdint>
#include <string>

#include "idlewave/types.hpp"

namespace idlewave {

/// Hardware placement of ranks: contiguous blocks onto sockets, sockets onto
/// nodes. The last node may be partially filled.
struct Topology {
    Rank ranks = 256;
    std::uint32_t cores_per_socket = 16;
    std::uint32_t sockets_per_node = 2;

    std::uint32_t ranks_per_node() const { return cores_per_socket * sockets_per_node; }

    std::uint32_t node_count() const {
        return (ranks + ranks_per_node() - 1) / ranks_per_node();
    }
};

struct Location {
    std::uint32_t node = 0;
    std::uint32_t socket = 0;  // socket index within the node

    bool operator==(const Location&) const = default;
};

enum class LocalityClass : std::uint8_t { IntraSocket = 0, InterSocket = 1, InterNode = 2 };

inline const char* to_string(LocalityClass c) {
    switch (c) {
        case LocalityClass::IntraSocket: return "intra-socket";
        case LocalityClass::InterSocket: return "inter-socket";
        case LocalityClass::InterNode: return "inter-node";
    }
    return "?";
}

/// Block placement: node(r) = r / (cps*spn), socket(r) = (r / cps) mod spn.
inline Location locate(Rank r, const Topology& topo) {
    if (r >= topo.ranks) {
        throw ArgumentError("rank " + std::to_string(r) + " out of range [0, " +
                            std::to_string(topo.ranks) + ")");
    }
    return Location{r / topo.ranks_per_node(), (r / topo.cores_per_socket) % topo.sockets_per_node};
}

inline LocalityClass locality(Rank a, Rank b, const Topology& topo) {
    const Location la = locate(a, topo);
    const Location lb = locate(b, topo);
    if (la.node != lb.node) return LocalityClass::InterNode;
    if (la.socket != lb.socket) return LocalityClass::InterSocket;
    return LocalityClass::IntraSocket;
}

}  // namespace idlewave
