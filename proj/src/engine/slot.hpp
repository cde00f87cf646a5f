#pragma once

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "core/messages.hpp"
#include "core/nd.hpp"
#include "core/types.hpp"
#include "ndcontrol/plan.hpp"
#include "ndcontrol/ppu.hpp"

namespace ndbft::engine {

enum class Phase : uint8_t {
    kEmpty = 0,       // slot referenced but no pre-prepare accepted yet
    kPrePrepared = 1,
    kPrepared = 2,
    kCommitted = 3,
    kNdPending = 4,   // committed, waiting for post-execution agreement
    kDelivered = 5,
};

inline const char* phase_name(Phase p) {
    switch (p) {
    case Phase::kEmpty: return "EMPTY";
    case Phase::kPrePrepared: return "PRE_PREPARED";
    case Phase::kPrepared: return "PREPARED";
    case Phase::kCommitted: return "COMMITTED";
    case Phase::kNdPending: return "ND_PENDING";
    case Phase::kDelivered: return "DELIVERED";
    }
    return "?";
}

// All per-sequence-number protocol state at one replica. Votes are stored as
// received and counted against the slot's own digests at evaluation time, so
// votes arriving before the pre-prepare (or before the nd digest resolves)
// are simply parked here.
struct Slot {
    Phase phase = Phase::kEmpty;

    ProtocolMessage pre_prepare;  // verbatim accepted message, for resends
    Digest pre_prepare_digest;    // over the unauthenticated encoding; equivocation check
    RequestBody request;
    Digest req_digest;            // over the embedded request wire
    bool is_null = false;
    NdTypeMask mask = 0;
    ndc::PhasePlan plan;
    NdPayload pre_payload;
    std::vector<PostndWire> piggyback;

    bool nd_digest_known = false;
    Digest nd_digest;  // certificate digest: resolved pre payload + piggyback

    ndc::PpuState ppu;

    std::map<ReplicaId, std::pair<Digest, Digest>> prepares;  // sender -> (req, nd)
    std::map<ReplicaId, std::pair<Digest, Digest>> commits;
    bool prepare_sent = false;
    bool commit_sent = false;

    // Post-execution agreement. `postnd` holds the primary-recorded entry:
    // at the primary from its own execution, at a backup from a standalone
    // post-commit round or a piggybacking carrier.
    std::optional<PostndWire> postnd;
    Digest postnd_digest;
    bool postnd_checked = false;  // verifiable post segments passed the app check
    SeqNum carried_by = 0;        // carrier slot seq when piggybacked, 0 otherwise
    std::map<ReplicaId, Digest> postc_prepares;
    std::map<ReplicaId, Digest> postc_commits;
    bool postc_prepare_sent = false;
    bool postc_commit_sent = false;
    bool postnd_agreed = false;

    bool nd_timer_armed = false;
    bool delivered_null = false;
    bool reply_sent = false;
    bool poisoned = false;  // proven primary misbehavior; never delivered

    // Peers already handed a targeted resend for this slot. One shot per
    // peer: duplicate-triggered resends must never echo back and forth
    // between two replicas that both finished the slot.
    std::set<ReplicaId> nudged;

    // Messages for this seq that arrived before the pre-prepare did.
    std::vector<ProtocolMessage> deferred;
};

} // namespace ndbft::engine
