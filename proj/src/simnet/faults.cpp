#include "simnet/faults.hpp"

#include "core/digest.hpp"
#include "appkit/counter_model.hpp"
#include "ndcontrol/deadlock.hpp"

namespace ndbft::sim {

FaultEngine::FaultEngine(const Scenario& scenario, const ProtocolConfig& cfg,
                         const KeyStore* keys)
    : cfg_(cfg), keys_(keys), app_(scenario.app), half_(cfg.n() / 2 + 1) {
    for (const auto& fc : scenario.faults) scripts_[fc.replica].clauses.push_back(fc);
}

bool FaultEngine::crashed(NodeId node, uint64_t now_us) const {
    if (is_client_node(node)) return false;
    auto it = scripts_.find(static_cast<ReplicaId>(node));
    if (it == scripts_.end()) return false;
    for (const auto& fc : it->second.clauses)
        if (fc.behavior == Behavior::kCrashReplica && now_us >= fc.at_time_us)
            return true;
    return false;
}

const FaultClause* FaultEngine::active(const NodeScript& ns, Behavior b,
                                       SeqNum seq) const {
    for (const auto& fc : ns.clauses)
        if (fc.behavior == b && seq >= fc.from_seq && seq <= fc.to_seq) return &fc;
    return nullptr;
}

void FaultEngine::observe_inbound(NodeId dst, const ProtocolMessage& msg) {
    if (is_client_node(dst) || msg.type != MsgType::kRequest) return;
    auto it = scripts_.find(static_cast<ReplicaId>(dst));
    if (it == scripts_.end()) return;
    remember_request(it->second, encode(msg));
}

void FaultEngine::remember_request(NodeScript& ns, const Bytes& request_wire) {
    ns.request_cache.emplace(sha256(request_wire), request_wire);
}

void FaultEngine::remember_program(NodeScript& ns, SeqNum seq,
                                   const ProtocolMessage& pp) {
    if (!active(ns, Behavior::kDeadlockOrder, seq) &&
        !active(ns, Behavior::kCrashOrder, seq))
        return;
    try {
        ProtocolMessage req = decode(pp.as<PrePrepareBody>().request_wire);
        ByteView op = req.as<RequestBody>().op;
        if (app_ == "composite_demo") {
            ByteReader r(op);
            ns.programs[seq] = r.blob();
        } else {
            ns.programs[seq] = Bytes(op.begin(), op.end());
        }
    } catch (const WireError&) {
    }
}

void FaultEngine::reseal(ProtocolMessage& msg, NodeId dst) const {
    if (msg.type == MsgType::kReply)
        seal_for_client(msg, *keys_, dst);
    else if (msg.type == MsgType::kPpuContrib)
        seal(msg, *keys_, cfg_.share_auth_mode);
    else
        seal(msg, *keys_, cfg_.auth_mode);
}

void FaultEngine::rewrite_postnd(const NodeScript& ns, PostndWire& entry,
                                 bool& touched) {
    if (active(ns, Behavior::kWrongPostndValues, entry.seq)) {
        NdClass target = entry.values.find(kNdVpost) ? kNdVpost : kNdNpost;
        if (const Bytes* seg = entry.values.find(target)) {
            Bytes bad = *seg;
            if (bad.empty()) bad.push_back(1);
            bad[0] ^= 0xff;
            entry.values.set(target, bad);
            touched = true;
        }
    }
    if (active(ns, Behavior::kWrongReplyDigest, entry.seq)) {
        entry.reply_digest.bytes[0] ^= 0xff;
        touched = true;
    }
    const bool deadlock = active(ns, Behavior::kDeadlockOrder, entry.seq) != nullptr;
    const bool unfunded = active(ns, Behavior::kCrashOrder, entry.seq) != nullptr;
    if ((deadlock || unfunded) && entry.values.find(kNdNpost)) {
        auto it = ns.programs.find(entry.seq);
        if (it == ns.programs.end()) return;
        try {
            app::CounterProgram prog = app::decode_counter_program(it->second);
            auto grants = deadlock ? app::counter_deadlock_grants(prog)
                                   : app::counter_unfunded_grants(prog);
            entry.values.set(kNdNpost, ndc::encode_grants(grants));
            touched = true;
        } catch (const WireError&) {
        }
    }
}

bool FaultEngine::rewrite_pre_prepare(NodeScript& ns, NodeId dst,
                                      ProtocolMessage& msg) {
    const SeqNum seq = msg.header.seq;
    auto& body = msg.as<PrePrepareBody>();
    remember_request(ns, body.request_wire);
    remember_program(ns, seq, msg);
    bool touched = false;

    if (active(ns, Behavior::kWrongNdType, seq)) {
        body.mask = body.mask == 0 ? kNdNpost : 0;
        body.pre_payload = {};
        touched = true;
    }
    if (active(ns, Behavior::kWrongVpreValue, seq)) {
        if (const Bytes* seg = body.pre_payload.find(kNdVpre)) {
            Bytes bad = *seg;
            if (bad.empty()) bad.push_back(1);
            bad[0] ^= 0xff;
            body.pre_payload.set(kNdVpre, bad);
            touched = true;
        }
    }
    if (active(ns, Behavior::kEquivocatePrePrepare, seq) && dst >= half_) {
        const Digest current = sha256(body.request_wire);
        for (const auto& [digest, wire] : ns.request_cache) {
            if (digest == current) continue;
            body.request_wire = wire;
            touched = true;
            break;
        }
    }
    for (auto& entry : body.piggyback) rewrite_postnd(ns, entry, touched);

    if (touched) reseal(msg, dst);
    return true;
}

bool FaultEngine::rewrite(NodeId src, NodeId dst, ProtocolMessage& msg) {
    if (is_client_node(src)) return true;
    auto it = scripts_.find(static_cast<ReplicaId>(src));
    if (it == scripts_.end()) return true;
    NodeScript& ns = it->second;
    bool touched = false;

    switch (msg.type) {
        case MsgType::kPrePrepare:
            return rewrite_pre_prepare(ns, dst, msg);
        case MsgType::kPpuDecision: {
            if (active(ns, Behavior::kOmitPpuDecision, msg.header.seq)) return false;
            if (active(ns, Behavior::kForgePpuEntry, msg.header.seq)) {
                auto& entries = msg.as<PpuDecisionBody>().entries;
                if (!entries.empty()) {
                    Bytes& v = entries.back().value;
                    if (v.empty()) v.push_back(1);
                    v[0] ^= 0xff;
                    touched = true;
                }
            }
            break;
        }
        case MsgType::kNdValues:
            // Keep the omission airtight: fetch responses count as publishing
            // the decision's contents.
            if (active(ns, Behavior::kOmitPpuDecision, msg.header.seq)) return false;
            break;
        case MsgType::kPostcPrePrepare:
            rewrite_postnd(ns, msg.as<PostcPrePrepareBody>().entry, touched);
            break;
        case MsgType::kReply:
            if (active(ns, Behavior::kCorruptReply, msg.header.seq)) {
                Bytes& r = msg.as<ReplyBody>().result;
                if (r.empty()) r.push_back(1);
                r[0] ^= 0xff;
                touched = true;
            }
            break;
        default:
            break;
    }
    if (touched) reseal(msg, dst);
    return true;
}

}  // namespace ndbft::sim
