#pragma once

#include <map>
#include <utility>
#include <vector>

#include "core/digest.hpp"
#include "core/nd.hpp"
#include "core/types.hpp"

namespace ndbft::ndc {

// Per-slot state for the share-collection round of a non-verifiable
// pre-determinable request. Both roles use it: the primary accumulates
// contributions until it can decide; a backup parks the accepted decision
// here while digest entries await their full values.
struct PpuState {
    SeqNum seq = 0;
    Digest req_digest;
    Bytes own_share;
    // Verified shares by proposer, with the tag that authenticated them.
    std::map<ReplicaId, std::pair<Bytes, AuthTag>> contributions;
    std::vector<NdShare> decision;
    std::vector<ReplicaId> missing;  // digest entries not yet backed by values
    bool contributed = false;        // backup sent its share
    bool decided = false;            // primary sent / backup accepted a decision
};

// Builds the primary's decision set: its own share plus the 2f
// lowest-numbered backup contributions, proposer-ascending. With
// `as_digests`, entry values are the 32-byte digests of the shares.
// Precondition: contribs holds at least 2f verified backup entries.
std::vector<NdShare> choose_decision(
    ReplicaId primary, const Bytes& primary_share, const AuthTag& primary_tag,
    const std::map<ReplicaId, std::pair<Bytes, AuthTag>>& contribs,
    uint32_t f, bool as_digests);

struct DecisionShape {
    bool ok = false;
    const char* why = nullptr;
};

// Structural acceptance: exactly 2f+1 entries, strictly ascending proposer
// ids (so the encoding stays canonical), primary included. Tag and value
// verification need slot context and happen at the call site.
DecisionShape check_decision_shape(const std::vector<NdShare>& entries,
                                   ReplicaId primary, uint32_t f);

// Full-value (proposer, share) pairs of a resolved decision, ascending.
std::vector<std::pair<ReplicaId, Bytes>> decision_values(
    const std::vector<NdShare>& entries);

// Canonical bytes of a resolved decision set; replicas hash these into the
// nd digest carried by PREPARE/COMMIT so agreement covers the shares.
inline Bytes resolved_decision_bytes(
    const std::vector<std::pair<ReplicaId, Bytes>>& values) {
    return encode_decision_values(values);
}

}  // namespace ndbft::ndc
