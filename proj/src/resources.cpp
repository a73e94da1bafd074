#include "htap/resources.hpp"

#include <set>

namespace htap {

Topology Topology::uniform(int sockets, int cpus_per_socket)
{
    if (sockets < 1 || cpus_per_socket < 1)
        throw Error("topology needs at least one socket and one CPU per socket");
    Topology t;
    CpuId next = 0;
    for (int s = 0; s < sockets; ++s) {
        t.sockets.emplace_back();
        for (int c = 0; c < cpus_per_socket; ++c)
            t.sockets.back().push_back(next++);
    }
    return t;
}

std::size_t Topology::cpu_count() const
{
    std::size_t n = 0;
    for (const auto &s : sockets)
        n += s.size();
    return n;
}

std::size_t Topology::socket_of(CpuId cpu) const
{
    for (std::size_t s = 0; s < sockets.size(); ++s)
        for (auto c : sockets[s])
            if (c == cpu)
                return s;
    throw Error("unknown CPU id " + std::to_string(cpu));
}

void Topology::validate() const
{
    if (sockets.empty())
        throw Error("topology has no sockets");
    std::set<CpuId> seen;
    for (const auto &s : sockets) {
        if (s.empty())
            throw Error("socket without CPUs");
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i > 0 && s[i] <= s[i - 1])
                throw Error("CPU ids within a socket must ascend");
            if (!seen.insert(s[i]).second)
                throw Error("CPU id listed twice");
        }
    }
}

std::string_view to_string(StateTag s)
{
    switch (s) {
    case StateTag::S1:
        return "S1";
    case StateTag::S2:
        return "S2";
    case StateTag::S3_IS:
        return "S3-IS";
    case StateTag::S3_NI:
        return "S3-NI";
    }
    return "?";
}

StateTag parse_state(std::string_view s)
{
    for (auto t : {StateTag::S1, StateTag::S2, StateTag::S3_IS, StateTag::S3_NI})
        if (to_string(t) == s)
            return t;
    throw Error("unknown state " + std::string(s));
}

} // namespace htap
