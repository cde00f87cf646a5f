#pragma once

#include <cstdint>
#include <string>

#include "core/messages.hpp"
#include "core/types.hpp"

namespace ndbft::engine {

// Timer tokens pack a kind tag and a sequence number so a single callback can
// be demultiplexed without per-timer state. Timers are never cancelled; a
// stale timer is recognized by comparing the token against current state.
enum class TimerKind : uint8_t {
    kRetry = 1,     // resend lowest in-flight slot's messages
    kFlush = 2,     // primary: seal a null request to carry pending postnd entries
    kNdTimeout = 3, // backup: nd agreement for a slot did not resolve in time
    kClientRetry = 4,
};

inline uint64_t timer_token(TimerKind kind, uint64_t payload) {
    return (static_cast<uint64_t>(kind) << 56) | (payload & ((uint64_t{1} << 56) - 1));
}
inline TimerKind timer_kind(uint64_t token) {
    return static_cast<TimerKind>(token >> 56);
}
inline uint64_t timer_payload(uint64_t token) {
    return token & ((uint64_t{1} << 56) - 1);
}

// Everything a replica or client needs from its host: a clock, a way to send
// messages, one-shot timers, and a trace sink. The simulator provides a
// deterministic implementation; unit tests provide a capturing mock.
class Services {
  public:
    virtual ~Services() = default;

    virtual uint64_t now_us() = 0;
    virtual void send(NodeId dst, const ProtocolMessage& msg) = 0;
    virtual void set_timer(uint64_t deadline_us, uint64_t token) = 0;
    virtual void trace(const std::string& line) = 0;
};

} // namespace ndbft::engine
