#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace ndbft::sim {

// One replica's delivered record for a sequence number, as read back from
// its trace: request digest, nondeterminism data digest, result digest, and
// post-execution state digest (all hex strings as traced).
struct DeliveryRecord {
    std::string req;
    std::string nd;
    std::string res;
    std::string st;
    bool operator==(const DeliveryRecord&) const = default;
};

struct Violation {
    SeqNum seq = 0;
    std::string what;
};

struct SuspicionNote {
    ReplicaId replica = 0;
    SeqNum seq = 0;
    std::string reason;
};

// Outcome of the cross-replica agreement check: every pair of correct
// replicas that both delivered a sequence number must have delivered the
// same request with the same nondeterminism data, result, and end state.
// The primary participates through its own delivery record, so "primary
// recorded what backups used" is part of the same comparison.
struct SafetyReport {
    std::map<SeqNum, std::map<ReplicaId, DeliveryRecord>> deliveries;
    std::vector<Violation> violations;
    std::vector<SuspicionNote> suspicions;
    bool truncated = false;
    std::vector<std::string> errors;

    bool clean() const {
        return violations.empty() && !truncated && errors.empty();
    }
};

// Scans a complete run trace. `correct` lists the replicas whose records
// take part in the comparison (scripted-Byzantine replicas are excluded;
// fail-stop replicas stay in, their delivered prefix must still agree).
// Every replica in `correct` must close its stream with a trailer line
// whose record count matches; anything else marks the report truncated.
SafetyReport check_safety(const std::vector<std::string>& trace,
                          const std::set<ReplicaId>& correct);

}  // namespace ndbft::sim
