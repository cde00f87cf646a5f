#pragma once

#include <deque>
#include <map>
#include <memory>
#include <set>
#include <vector>

#include "appkit/app.hpp"
#include "core/messages.hpp"
#include "core/protocol_config.hpp"
#include "engine/services.hpp"
#include "engine/slot.hpp"
#include "engine/suspicion.hpp"

namespace ndbft::engine {

struct ReplicaCounters {
    uint64_t null_requests = 0;        // minted (primary) / accepted (backup)
    uint64_t entries_piggybacked = 0;  // primary: postnd entries on real carriers
    uint64_t entries_null_carried = 0; // primary: postnd entries on null carriers
    uint64_t entries_standalone = 0;   // primary: postnd entries sent via POSTC rounds
    uint64_t fetches_sent = 0;
    uint64_t executions = 0;
    uint64_t restarts = 0;             // watchdog restores from snapshot
};

// One replica of the ordering engine. Single-threaded and purely reactive:
// the host feeds it messages and timer callbacks, it talks back through
// Services. All protocol state is in-memory; there is no view change and no
// state transfer, so a suspicion that halts a slot halts the replica's
// delivery pipeline (safety over liveness).
class Replica {
  public:
    Replica(const ProtocolConfig& cfg, ReplicaId id, const KeyStore* keys,
            std::unique_ptr<app::AppContract> application, Services* services);

    void on_message(const ProtocolMessage& msg);
    void on_timer(uint64_t token);

    ReplicaId id() const { return id_; }
    bool is_primary() const { return id_ == cfg_.primary(); }
    SeqNum last_delivered() const { return last_delivered_; }
    SeqNum next_seq() const { return next_seq_; }
    bool delivery_frozen() const { return frozen_; }
    const std::vector<SuspicionEvent>& suspicions() const { return suspicions_; }
    const ReplicaCounters& counters() const { return counters_; }
    const Slot* find_slot(SeqNum seq) const;
    Digest state_digest() const;
    const app::AppContract& application() const { return *app_; }

  private:
    // -- message handlers ---------------------------------------------------
    void on_request(const ProtocolMessage& msg);
    void on_pre_prepare(const ProtocolMessage& msg);
    void on_ppu_contrib(const ProtocolMessage& msg);
    void on_ppu_decision(const ProtocolMessage& msg);
    void on_prepare(const ProtocolMessage& msg);
    void on_commit(const ProtocolMessage& msg);
    void on_postc_pre_prepare(const ProtocolMessage& msg);
    void on_postc_round(const ProtocolMessage& msg);
    void on_fetch_nd(const ProtocolMessage& msg);
    void on_nd_values(const ProtocolMessage& msg);

    // -- primary ------------------------------------------------------------
    void primary_order(const ProtocolMessage& request_msg);
    void primary_try_decide(SeqNum seq, Slot& slot);
    void seal_and_multicast(ProtocolMessage& msg, AuthMode mode);
    void mint_null_request();

    // -- backup nd flows ----------------------------------------------------
    void send_contribution(SeqNum seq, Slot& slot);
    bool resolve_decision(SeqNum seq, Slot& slot);
    void send_fetch(SeqNum seq, Slot& slot);
    bool verify_decision_entry(const Slot& slot, const NdShare& entry,
                               const Bytes& full_value) const;
    void check_postnd_entry(SeqNum seq, Slot& slot);
    void maybe_agree_carried(SeqNum seq, Slot& slot);
    void maybe_postc_progress(SeqNum seq, Slot& slot);

    // -- progression --------------------------------------------------------
    void accept_pre_prepare(const ProtocolMessage& msg, bool from_self);
    void set_nd_digest(SeqNum seq, Slot& slot);
    void advance(SeqNum seq, Slot& slot);
    void try_deliver();
    bool execute_and_deliver(SeqNum seq, Slot& slot);
    void record_postnd(SeqNum seq, Slot& slot, const NdPayload& recorded,
                       const Digest& result_digest);
    void send_reply(SeqNum seq, Slot& slot, const Bytes& result);

    // -- plumbing -----------------------------------------------------------
    Slot& get_slot(SeqNum seq);
    bool within_horizon(SeqNum seq) const;
    void defer(SeqNum seq, const ProtocolMessage& msg);
    void drain_deferred(SeqNum seq);
    void suspect(SeqNum seq, Suspicion reason, const std::string& detail);
    void set_phase(SeqNum seq, Slot& slot, Phase p);
    void arm_nd_timer(SeqNum seq, Slot& slot);
    void arm_retry_timer();
    void arm_flush_timer();
    std::vector<ProtocolMessage> resend_wires(SeqNum seq, Slot& slot);
    void resend_for(SeqNum seq, Slot& slot);
    void resend_to(ReplicaId peer, SeqNum seq, Slot& slot);
    size_t quorum_votes(const std::map<ReplicaId, std::pair<Digest, Digest>>& votes,
                        const Slot& slot) const;
    size_t postc_votes(const std::map<ReplicaId, Digest>& votes, const Slot& slot) const;
    NdPayload resolved_pre_payload(const Slot& slot) const;
    Digest cert_nd_digest(const Slot& slot) const;
    AuthTag own_contrib_tag(SeqNum seq, const Slot& slot) const;
    void send_to_replica(ReplicaId dst, const ProtocolMessage& msg);
    ProtocolMessage make_msg(MsgType type, SeqNum seq, MsgBody body) const;

    ProtocolConfig cfg_;
    ReplicaId id_;
    const KeyStore* keys_;
    std::unique_ptr<app::AppContract> app_;
    Services* svc_;

    std::map<SeqNum, Slot> slots_;
    SeqNum next_seq_ = 1;        // primary's allocator
    SeqNum last_delivered_ = 0;  // highest contiguously delivered seq
    bool frozen_ = false;

    // Primary-side client bookkeeping: the slot currently ordering each
    // client's request and the last reply sent to it.
    std::map<ClientId, std::pair<uint64_t, SeqNum>> inflight_;
    std::map<ClientId, ProtocolMessage> last_reply_;

    // Primary, optimized mode: recorded entries awaiting a carrier.
    std::deque<PostndWire> pending_carry_;
    bool flush_armed_ = false;

    bool retry_armed_ = false;
    uint32_t retry_attempts_ = 0;
    SeqNum retry_mark_ = 0;  // last_delivered_ when the timer was armed

    std::vector<SuspicionEvent> suspicions_;
    std::set<std::pair<SeqNum, Suspicion>> suspicion_keys_;
    ReplicaCounters counters_;
};

} // namespace ndbft::engine
