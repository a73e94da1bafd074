#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "htap/types.hpp"

namespace htap {

/// Sockets with their CPU ids, in ascending order.
struct Topology {
    std::vector<std::vector<CpuId>> sockets;

    static Topology uniform(int sockets, int cpus_per_socket);
    std::size_t socket_count() const { return sockets.size(); }
    std::size_t cpu_count() const;
    /// Socket holding a CPU; throws for unknown ids.
    std::size_t socket_of(CpuId cpu) const;
    void validate() const;
};

enum class StateTag { S1, S2, S3_IS, S3_NI };

std::string_view to_string(StateTag s);
StateTag parse_state(std::string_view s);

/// Scheduling state as entered at a switch epoch, with the CPUs OLAP may use.
struct SystemState {
    StateTag tag = StateTag::S2;
    Epoch epoch = 0;
    std::vector<CpuId> olap_cpus;
    /// Sockets whose memory holds the OLTP instances (the data sockets).
    std::vector<std::size_t> oltp_sockets;
};

} // namespace htap
