#pragma once

#include <cstdint>

#include "core/auth.hpp"
#include "core/types.hpp"

namespace ndbft {

// Static parameters shared by every replica and client in one run.
struct ProtocolConfig {
    uint32_t f = 1;        // tolerated Byzantine replicas; n = 3f + 1
    uint64_t epoch = 1;    // run identifier stamped into every message
    ViewNum view = 0;      // fixed for a run; there is no view change

    // Replica-to-replica protocol messages.
    AuthMode auth_mode = AuthMode::kAuthenticator;
    // Pre-prepare-update contributions. Entry tags are embedded in the
    // decision set, so they must be verifiable by every replica: a signature,
    // or an authenticator carrying one entry per replica.
    AuthMode share_auth_mode = AuthMode::kAuthenticator;

    // Dissemination optimizations: decision sets carry share digests with
    // fetch-on-miss, post-determined values ride the next pre-prepare, and a
    // flush timer issues a null request when no carrier shows up in time.
    bool optimized = false;

    uint64_t flush_timer_us = 10'000;
    uint64_t exec_budget_us = 100'000;       // guarded execution watchdog
    uint64_t agreement_timeout_us = 300'000; // post-commit agreement stall
    uint64_t retry_base_us = 25'000;         // protocol retransmission backoff
    uint32_t retry_max_attempts = 10;
    uint64_t buffer_horizon = 256;           // max in-flight seq window

    uint64_t client_retry_us = 50'000;       // first client retransmission; doubles
    uint64_t client_deadline_us = 5'000'000; // give up on a request after this

    uint32_t n() const { return replica_count(f); }
    ReplicaId primary() const { return primary_of(view, n()); }
};

}  // namespace ndbft
