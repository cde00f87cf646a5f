#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "core/protocol_config.hpp"
#include "core/types.hpp"

namespace ndbft::sim {

// Scripted misbehaviors. Each wraps an honest replica and rewrites messages
// it emits (or, for kCrashReplica, silences the node); the replica's own
// logic stays untouched, which keeps every run reproducible.
enum class Behavior : uint8_t {
    kWrongVpreValue = 0,     // corrupt a verifiable pre value in PRE_PREPARE
    kWrongNdType = 1,        // declare a wrong nd mask in PRE_PREPARE
    kEquivocatePrePrepare = 2,  // different PRE_PREPAREs to different backups
    kForgePpuEntry = 3,      // tamper with a share inside PPU_DECISION
    kOmitPpuDecision = 4,    // never publish the PPU decision
    kWrongPostndValues = 5,  // corrupt recorded post values on the wire
    kWrongReplyDigest = 6,   // corrupt the recorded reply digest
    kDeadlockOrder = 7,      // record a lock schedule with a genuine cycle
    kCrashOrder = 8,         // record a schedule that livelocks replay
    kCrashReplica = 9,       // fail-stop at a scripted virtual time
    kCorruptReply = 10,      // garble reply bodies sent to clients
};

const char* behavior_name(Behavior b);
// Throws std::invalid_argument on unknown names.
Behavior behavior_from_name(const std::string& s);

struct FaultClause {
    ReplicaId replica = 0;
    Behavior behavior = Behavior::kWrongVpreValue;
    // Message-shaped behaviors apply to sequence numbers in [from_seq,
    // to_seq]; postnd-shaped behaviors key on the entry's own sequence.
    SeqNum from_seq = 1;
    SeqNum to_seq = std::numeric_limits<SeqNum>::max();
    // kCrashReplica only: the node goes silent at this virtual time.
    uint64_t at_time_us = 0;
};

struct LinkModel {
    uint64_t delay_us = 100;  // one-way propagation delay
    uint64_t jitter_us = 0;   // uniform extra delay in [0, jitter_us]
    double loss = 0.0;        // per-message drop probability
    // Egress serialization: a message occupies its sender's link for
    // size * per_byte_ns, and the sender's messages queue behind each other
    // (100 Mbit/s ~ 80 ns/byte). Zero models an infinitely fast link.
    uint64_t per_byte_ns = 0;
};

struct Workload {
    uint32_t clients = 1;
    uint32_t requests_per_client = 10;
    size_t request_size = 64;
    size_t nd_size = 32;  // per-class value size for the synthetic app
    uint64_t think_time_us = 0;
    // Extra seeded uniform think time in [0, think_jitter_us] per request.
    // Breaks the perfect client synchronization a zero-noise simulation
    // produces; real deployments get this desynchronization for free.
    uint64_t think_jitter_us = 0;
};

struct Scenario {
    uint32_t f = 1;
    std::string app = "synthetic";
    NdTypeMask mask = 0;  // synthetic app only; named apps fix their own
    bool optimized = false;
    LinkModel link;
    Workload workload;
    std::vector<FaultClause> faults;
    uint64_t max_virtual_us = 120'000'000;

    ProtocolConfig to_config() const;
    // Throws std::invalid_argument describing the first violated constraint.
    void validate() const;

    // Versioned JSON schema; see README for the field reference. from_json
    // throws std::invalid_argument on malformed input or schema violations.
    static Scenario from_json(const std::string& text);
    std::string to_json() const;
};

}  // namespace ndbft::sim
