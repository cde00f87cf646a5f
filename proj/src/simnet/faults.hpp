#pragma once

#include <map>
#include <optional>

#include "core/auth.hpp"
#include "core/messages.hpp"
#include "core/protocol_config.hpp"
#include "simnet/scenario.hpp"

namespace ndbft::sim {

// Applies a scenario's fault script to the message stream. Scripted replicas
// run unmodified engine code; this layer rewrites what they put on the wire
// (per destination, so equivocation is possible) and silences crashed nodes.
// Rewritten messages are resealed with the scripted replica's own keys,
// which a real Byzantine node could do just as well.
class FaultEngine {
  public:
    FaultEngine(const Scenario& scenario, const ProtocolConfig& cfg,
                const KeyStore* keys);

    bool crashed(NodeId node, uint64_t now_us) const;

    // Feeds the interceptor a message arriving at `dst`. Used to stockpile
    // genuine client requests as equivocation material.
    void observe_inbound(NodeId dst, const ProtocolMessage& msg);

    // Rewrites `msg` as scripted for the (src, dst) link. Returns false if
    // the message is suppressed entirely.
    bool rewrite(NodeId src, NodeId dst, ProtocolMessage& msg);

  private:
    struct NodeScript {
        std::vector<FaultClause> clauses;
        // Encoded client REQUESTs seen by this node, keyed by digest.
        std::map<Digest, Bytes> request_cache;
        // Sequence -> shared-counter program, for schedule-poisoning faults.
        std::map<SeqNum, Bytes> programs;
    };

    const FaultClause* active(const NodeScript& ns, Behavior b, SeqNum seq) const;
    void remember_request(NodeScript& ns, const Bytes& request_wire);
    void remember_program(NodeScript& ns, SeqNum seq, const ProtocolMessage& pp);
    void reseal(ProtocolMessage& msg, NodeId dst) const;
    bool rewrite_pre_prepare(NodeScript& ns, NodeId dst, ProtocolMessage& msg);
    void rewrite_postnd(const NodeScript& ns, PostndWire& entry, bool& touched);

    ProtocolConfig cfg_;
    const KeyStore* keys_;
    std::string app_;
    uint32_t half_;  // first backup id of the equivocation target half
    std::map<ReplicaId, NodeScript> scripts_;
};

}  // namespace ndbft::sim
