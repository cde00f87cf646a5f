#pragma once

#include <cstdint>
#include <vector>

#include "core/bytes.hpp"

namespace ndbft::ndc {

// Symbolic model of lock-ordered execution used for the pre-replay analysis
// of a primary-prescribed schedule. Each logical thread runs a straight-line
// script of lock acquisitions and releases; the schedule under analysis is
// the global order in which lock grants were (allegedly) performed.

enum class LockOpKind : uint8_t { kAcquire, kRelease };

struct LockOp {
    uint32_t lock = 0;
    LockOpKind kind = LockOpKind::kAcquire;
    bool operator==(const LockOp&) const = default;
};

using ThreadProgram = std::vector<LockOp>;

struct Grant {
    uint32_t thread = 0;
    uint32_t lock = 0;
    bool operator==(const Grant&) const = default;
};

enum class OrderVerdict : uint8_t {
    kOk,           // schedule replays to completion
    kDeadlock,     // replay reaches a wait-for cycle among threads
    kInvalidOrder, // schedule contradicts the programs or stalls acyclically
};

struct OrderCheck {
    OrderVerdict verdict = OrderVerdict::kOk;
    size_t step = 0;              // grant index at which the problem surfaced
    std::vector<uint32_t> cycle;  // threads forming the wait-for cycle
};

const char* verdict_name(OrderVerdict v);

// Replays `grants` against `programs` without executing anything. A grant is
// performable when its thread's next acquisition matches the named lock and
// no other thread holds it. A stalled grant whose wait-for chain loops back
// on itself is a deadlock; any other contradiction (wrong lock, unknown
// thread, schedule too short or too long) is an invalid order.
OrderCheck check_grant_order(const std::vector<ThreadProgram>& programs,
                             const std::vector<Grant>& grants);

// Canonical byte form of a grant schedule, used as recorded nd payload.
Bytes encode_grants(const std::vector<Grant>& grants);
std::vector<Grant> decode_grants(ByteView wire);

}  // namespace ndbft::ndc
