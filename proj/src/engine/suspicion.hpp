#pragma once

#include <cstdint>
#include <string>

#include "core/types.hpp"

namespace ndbft::engine {

// A replica raises a suspicion when it can prove, from messages or local
// execution, that the primary (or an executing peer) misbehaved. There is no
// view change in this protocol variant: a suspicion is terminal for the slot
// that triggered it and is surfaced to the operator through the trace.
enum class Suspicion : uint8_t {
    kBadOrder = 0,            // conflicting pre-prepares or malformed ordering state
    kNdTypeMismatch = 1,      // declared nondeterminism classes disagree with the app
    kNdValueRejected = 2,     // a verifiable value failed the app's check
    kNdAgreementFailed = 3,   // pre- or post-agreement did not complete in time
    kReplyDigestMismatch = 4, // recorded reply digest disagrees with local execution
    kExecCrashOrDeadlock = 5, // guarded execution crashed, deadlocked, or ran over budget
};

inline const char* suspicion_name(Suspicion s) {
    switch (s) {
    case Suspicion::kBadOrder: return "BAD_ORDER";
    case Suspicion::kNdTypeMismatch: return "ND_TYPE_MISMATCH";
    case Suspicion::kNdValueRejected: return "ND_VALUE_REJECTED";
    case Suspicion::kNdAgreementFailed: return "ND_AGREEMENT_FAILED";
    case Suspicion::kReplyDigestMismatch: return "REPLY_DIGEST_MISMATCH";
    case Suspicion::kExecCrashOrDeadlock: return "EXEC_CRASH_OR_DEADLOCK";
    }
    return "UNKNOWN";
}

struct SuspicionEvent {
    SeqNum seq = 0;
    Suspicion reason = Suspicion::kBadOrder;
    std::string detail;
};

} // namespace ndbft::engine
