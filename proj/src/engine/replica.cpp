#include "engine/replica.hpp"

#include <algorithm>

#include "core/digest.hpp"
#include "engine/trace.hpp"
#include "ndcontrol/postnd.hpp"

namespace ndbft::engine {

namespace {

Digest message_digest(const ProtocolMessage& m) { return sha256(encode_unauth(m)); }

Digest digest_from_value(const Bytes& value) {
    Digest d;
    std::copy(value.begin(), value.end(), d.bytes.begin());
    return d;
}

// Encoded piggyback list, the part of the certificate digest beyond the
// resolved pre payload.
void encode_piggyback(ByteWriter& w, const std::vector<PostndWire>& entries) {
    w.u32(static_cast<uint32_t>(entries.size()));
    for (const auto& e : entries) e.encode(w);
}

} // namespace

Replica::Replica(const ProtocolConfig& cfg, ReplicaId id, const KeyStore* keys,
                 std::unique_ptr<app::AppContract> application, Services* services)
    : cfg_(cfg), id_(id), keys_(keys), app_(std::move(application)), svc_(services) {}

const Slot* Replica::find_slot(SeqNum seq) const {
    auto it = slots_.find(seq);
    return it == slots_.end() ? nullptr : &it->second;
}

Digest Replica::state_digest() const { return sha256(app_->snapshot()); }

Slot& Replica::get_slot(SeqNum seq) { return slots_[seq]; }

bool Replica::within_horizon(SeqNum seq) const {
    return seq > last_delivered_ && seq <= last_delivered_ + cfg_.buffer_horizon;
}

ProtocolMessage Replica::make_msg(MsgType type, SeqNum seq, MsgBody body) const {
    ProtocolMessage m;
    m.type = type;
    m.header = MsgHeader{cfg_.view, seq, id_, cfg_.epoch};
    m.body = std::move(body);
    return m;
}

void Replica::send_to_replica(ReplicaId dst, const ProtocolMessage& msg) {
    if (dst != id_) svc_->send(dst, msg);
}

void Replica::seal_and_multicast(ProtocolMessage& msg, AuthMode mode) {
    seal(msg, *keys_, mode);
    for (ReplicaId r = 0; r < cfg_.n(); ++r) send_to_replica(r, msg);
}

// ---------------------------------------------------------------------------
// Entry points

void Replica::on_message(const ProtocolMessage& msg) {
    if (msg.header.epoch != cfg_.epoch) return;
    if (msg.type != MsgType::kRequest && msg.header.view != cfg_.view) return;
    if (msg.type == MsgType::kReply) return;  // client-bound only

    // Sender ids must be plausible before any key lookup. Null requests never
    // travel bare, so a bare REQUEST always comes from the client band.
    const NodeId sender = msg.header.sender;
    if (msg.type == MsgType::kRequest) {
        if (!is_client_node(sender)) return;
    } else if (is_client_node(sender) || sender >= cfg_.n() || sender == id_) {
        return;
    }

    const AuthMode expected =
        msg.type == MsgType::kPpuContrib ? cfg_.share_auth_mode : cfg_.auth_mode;
    if (msg.auth.mode != expected) return;
    if (!verify_seal(msg, *keys_, id_)) return;

    switch (msg.type) {
    case MsgType::kRequest: on_request(msg); break;
    case MsgType::kPrePrepare: on_pre_prepare(msg); break;
    case MsgType::kPpuContrib: on_ppu_contrib(msg); break;
    case MsgType::kPpuDecision: on_ppu_decision(msg); break;
    case MsgType::kPrepare: on_prepare(msg); break;
    case MsgType::kCommit: on_commit(msg); break;
    case MsgType::kPostcPrePrepare: on_postc_pre_prepare(msg); break;
    case MsgType::kPostcPrepare:
    case MsgType::kPostcCommit: on_postc_round(msg); break;
    case MsgType::kFetchNd: on_fetch_nd(msg); break;
    case MsgType::kNdValues: on_nd_values(msg); break;
    default: break;
    }
}

void Replica::on_timer(uint64_t token) {
    switch (timer_kind(token)) {
    case TimerKind::kFlush: {
        flush_armed_ = false;
        if (is_primary() && cfg_.optimized && !pending_carry_.empty()) mint_null_request();
        break;
    }
    case TimerKind::kRetry: {
        retry_armed_ = false;
        if (frozen_) return;
        if (last_delivered_ != retry_mark_) retry_attempts_ = 0;
        auto it = slots_.find(last_delivered_ + 1);
        if (it == slots_.end() || it->second.phase == Phase::kDelivered) {
            retry_attempts_ = 0;
            return;  // nothing in flight; rearmed when work appears
        }
        if (retry_attempts_ >= cfg_.retry_max_attempts) return;  // stalled for good
        ++retry_attempts_;
        resend_for(it->first, it->second);
        arm_retry_timer();
        break;
    }
    case TimerKind::kNdTimeout: {
        const SeqNum seq = timer_payload(token);
        auto it = slots_.find(seq);
        if (it == slots_.end() || frozen_) return;
        Slot& slot = it->second;
        if (slot.phase == Phase::kDelivered || slot.poisoned) return;
        const bool ppu_stuck = slot.plan.needs_ppu_phase && !slot.ppu.decided;
        const bool post_stuck = slot.plan.needs_post_commit && !is_primary() &&
                                slot.phase >= Phase::kCommitted && !slot.postnd_agreed;
        if (ppu_stuck || post_stuck)
            suspect(seq, Suspicion::kNdAgreementFailed,
                    ppu_stuck ? "no resolved decision" : "no post agreement");
        break;
    }
    default: break;
    }
}

// ---------------------------------------------------------------------------
// Client requests

void Replica::on_request(const ProtocolMessage& msg) {
    const auto& rb = msg.as<RequestBody>();
    if (is_null_request(rb)) return;
    if (msg.header.sender != client_node(rb.client)) return;
    if (!is_primary()) {
        // Backups relay; the client's authenticator already carries an entry
        // for the primary.
        svc_->send(cfg_.primary(), msg);
        return;
    }

    auto cached = last_reply_.find(rb.client);
    if (cached != last_reply_.end()) {
        const auto& reply = cached->second.as<ReplyBody>();
        if (reply.request_id == rb.request_id) {
            svc_->send(client_node(rb.client), cached->second);
            return;
        }
        if (reply.request_id > rb.request_id) return;
    }

    auto inflight = inflight_.find(rb.client);
    if (inflight != inflight_.end()) {
        if (inflight->second.first == rb.request_id) {
            // Retransmitted request for a slot still in flight: nudge the
            // backups with that slot's messages again.
            auto it = slots_.find(inflight->second.second);
            if (it != slots_.end()) resend_for(it->first, it->second);
        }
        return;  // one request per client at a time
    }

    primary_order(msg);
}

void Replica::primary_order(const ProtocolMessage& request_msg) {
    const auto& rb = request_msg.as<RequestBody>();
    const SeqNum seq = next_seq_++;
    Bytes request_wire = encode(request_msg);

    app::AppRequest req{cfg_.view, seq, sha256(request_wire), ByteView(rb.op)};
    app::ProposeResult prop = app_->propose_value(req);

    PrePrepareBody body;
    body.request_wire = std::move(request_wire);
    body.mask = prop.mask;
    body.pre_payload = std::move(prop.payload);
    if (cfg_.optimized) {
        while (!pending_carry_.empty()) {
            body.piggyback.push_back(std::move(pending_carry_.front()));
            pending_carry_.pop_front();
        }
        counters_.entries_piggybacked += body.piggyback.size();
    }

    ProtocolMessage pp = make_msg(MsgType::kPrePrepare, seq, std::move(body));
    seal_and_multicast(pp, cfg_.auth_mode);
    inflight_[rb.client] = {rb.request_id, seq};
    accept_pre_prepare(pp, /*from_self=*/true);
}

void Replica::mint_null_request() {
    const SeqNum seq = next_seq_++;
    ProtocolMessage reqmsg = make_null_request(id_, seq, cfg_.epoch);
    seal(reqmsg, *keys_, cfg_.auth_mode);

    PrePrepareBody body;
    body.request_wire = encode(reqmsg);
    body.mask = 0;
    while (!pending_carry_.empty()) {
        body.piggyback.push_back(std::move(pending_carry_.front()));
        pending_carry_.pop_front();
    }
    counters_.entries_null_carried += body.piggyback.size();

    ProtocolMessage pp = make_msg(MsgType::kPrePrepare, seq, std::move(body));
    seal_and_multicast(pp, cfg_.auth_mode);
    accept_pre_prepare(pp, /*from_self=*/true);
}

// ---------------------------------------------------------------------------
// Pre-prepare

void Replica::on_pre_prepare(const ProtocolMessage& msg) {
    if (msg.header.sender != cfg_.primary() || is_primary()) return;
    const SeqNum seq = msg.header.seq;
    if (!within_horizon(seq)) return;

    auto existing = slots_.find(seq);
    if (existing != slots_.end() && existing->second.phase != Phase::kEmpty) {
        Slot& slot = existing->second;
        if (message_digest(msg) == slot.pre_prepare_digest) {
            resend_to(cfg_.primary(), seq, slot);  // it may have missed our votes
        } else {
            suspect(seq, Suspicion::kBadOrder, "conflicting pre-prepare");
        }
        return;
    }

    accept_pre_prepare(msg, /*from_self=*/false);
}

void Replica::accept_pre_prepare(const ProtocolMessage& msg, bool from_self) {
    const SeqNum seq = msg.header.seq;
    const auto& body = msg.as<PrePrepareBody>();

    ProtocolMessage embedded;
    if (from_self) {
        embedded = decode(body.request_wire);
    } else {
        try {
            embedded = decode(body.request_wire);
        } catch (const WireError&) {
            suspect(seq, Suspicion::kBadOrder, "undecodable embedded request");
            return;
        }
        if (embedded.type != MsgType::kRequest || embedded.header.epoch != cfg_.epoch) {
            suspect(seq, Suspicion::kBadOrder, "embedded message is not a request");
            return;
        }
        const auto& rb = embedded.as<RequestBody>();
        if (is_null_request(rb)) {
            if (embedded.header.sender != cfg_.primary() ||
                !verify_seal(embedded, *keys_, id_)) {
                suspect(seq, Suspicion::kBadOrder, "null request not sealed by primary");
                return;
            }
            if (rb.request_id != seq || !rb.op.empty() || body.mask != 0 ||
                !body.pre_payload.empty()) {
                suspect(seq, Suspicion::kBadOrder, "malformed null request");
                return;
            }
        } else if (embedded.header.sender != client_node(rb.client) ||
                   !verify_seal(embedded, *keys_, id_)) {
            suspect(seq, Suspicion::kBadOrder, "embedded client seal invalid");
            return;
        }
        if (!mask_valid(body.mask)) {
            suspect(seq, Suspicion::kBadOrder, "reserved nd mask bits");
            return;
        }
        if (body.pre_payload.classes() != pre_classes(body.mask)) {
            suspect(seq, Suspicion::kBadOrder, "pre payload classes disagree with mask");
            return;
        }
        if (!cfg_.optimized && !body.piggyback.empty()) {
            suspect(seq, Suspicion::kBadOrder, "piggyback outside optimized mode");
            return;
        }
        for (const auto& e : body.piggyback) {
            if (e.seq >= seq) {
                suspect(seq, Suspicion::kBadOrder, "piggybacked entry from the future");
                return;
            }
        }
        if (!is_null_request(rb)) {
            if (body.mask != app_->mask_of(ByteView(rb.op))) {
                suspect(seq, Suspicion::kNdTypeMismatch,
                        "declared mask disagrees with app");
                return;
            }
            app::AppRequest req{cfg_.view, seq, sha256(body.request_wire),
                                ByteView(rb.op)};
            switch (app_->check_value(req, body.mask, body.pre_payload)) {
            case app::CheckVerdict::kAccept: break;
            case app::CheckVerdict::kTypeMismatch:
                suspect(seq, Suspicion::kNdTypeMismatch, "app rejected nd classes");
                return;
            case app::CheckVerdict::kValueRejected:
                suspect(seq, Suspicion::kNdValueRejected,
                        "verifiable pre value rejected");
                return;
            }
        }
    }

    Slot& slot = get_slot(seq);
    slot.pre_prepare = msg;
    slot.pre_prepare_digest = message_digest(msg);
    slot.request = embedded.as<RequestBody>();
    slot.req_digest = sha256(body.request_wire);
    slot.is_null = is_null_request(slot.request);
    slot.mask = body.mask;
    slot.plan = ndc::plan_phases(body.mask);
    slot.pre_payload = body.pre_payload;
    slot.piggyback = body.piggyback;
    set_phase(seq, slot, Phase::kPrePrepared);
    if (slot.is_null) ++counters_.null_requests;

    // Bind piggybacked postnd entries to their slots. First binding wins; a
    // second carrier naming the same seq with different values is primary
    // equivocation.
    for (const auto& e : slot.piggyback) {
        Slot& target = get_slot(e.seq);
        if (target.postnd.has_value()) {
            if (ndc::postnd_digest(e) != target.postnd_digest) {
                target.poisoned = true;
                suspect(e.seq, Suspicion::kBadOrder, "conflicting postnd entries");
            } else if (target.carried_by == 0) {
                target.carried_by = seq;  // primary's own entry, recorded locally
            }
            continue;
        }
        target.postnd = e;
        target.postnd_digest = ndc::postnd_digest(e);
        target.carried_by = seq;
        check_postnd_entry(e.seq, target);
    }

    if (slot.plan.needs_ppu_phase) {
        slot.ppu.seq = seq;
        slot.ppu.req_digest = slot.req_digest;
        if (from_self) {
            const Bytes* share = slot.pre_payload.find(kNdNpre);
            slot.ppu.own_share = share ? *share : Bytes{};
            primary_try_decide(seq, slot);
        } else {
            send_contribution(seq, slot);
            arm_nd_timer(seq, slot);
        }
    } else {
        set_nd_digest(seq, slot);
    }

    // This slot may itself have a postnd entry parked by an earlier carrier
    // or a buffered standalone round.
    check_postnd_entry(seq, slot);
    maybe_agree_carried(seq, slot);

    drain_deferred(seq);
    advance(seq, slot);
    try_deliver();
    arm_retry_timer();
}

// Validates a slot's pending postnd entry once both the entry and the
// request are known: class shape against the mask, then the app's check for
// verifiable post segments.
void Replica::check_postnd_entry(SeqNum seq, Slot& slot) {
    if (!slot.postnd || slot.postnd_checked || slot.poisoned) return;
    if (slot.phase == Phase::kEmpty) return;  // request not known yet
    if (!slot.plan.needs_post_commit) {
        slot.poisoned = true;
        suspect(seq, Suspicion::kBadOrder, "postnd entry for a slot without post classes");
        return;
    }
    const NdPayload& values = slot.postnd->values;
    if (values.classes() != post_classes(slot.mask)) {
        slot.poisoned = true;
        suspect(seq, Suspicion::kNdTypeMismatch, "post value classes disagree with mask");
        return;
    }
    if (mask_has(slot.mask, kNdVpost)) {
        app::AppRequest req{cfg_.view, seq, slot.req_digest, ByteView(slot.request.op)};
        if (app_->check_value(req, slot.mask, values) != app::CheckVerdict::kAccept) {
            slot.poisoned = true;
            suspect(seq, Suspicion::kNdValueRejected, "verifiable post value rejected");
            return;
        }
    }
    slot.postnd_checked = true;
}

// Settles a carried entry whose carrier had already committed by the time the
// entry became checkable.
void Replica::maybe_agree_carried(SeqNum seq, Slot& slot) {
    if (!slot.postnd || !slot.postnd_checked || slot.postnd_agreed || slot.poisoned)
        return;
    if (slot.carried_by == 0) return;
    auto it = slots_.find(slot.carried_by);
    if (it == slots_.end() || it->second.phase < Phase::kCommitted) return;
    slot.postnd_agreed = true;
    svc_->trace(TraceLine('A')
                    .field("r", id_)
                    .field("s", seq)
                    .field("post", slot.postnd_digest)
                    .field("via", std::string("pig"))
                    .str());
    try_deliver();
}

// ---------------------------------------------------------------------------
// NPRE: contribution, decision, resolution

void Replica::send_contribution(SeqNum seq, Slot& slot) {
    if (!slot.ppu.contributed) {
        app::AppRequest req{cfg_.view, seq, slot.req_digest, ByteView(slot.request.op)};
        app::ProposeResult prop = app_->propose_value(req);
        const Bytes* share = prop.payload.find(kNdNpre);
        slot.ppu.own_share = share ? *share : Bytes{};
        slot.ppu.contributed = true;
    }
    ProtocolMessage m = make_msg(MsgType::kPpuContrib, seq,
                                 PpuContribBody{slot.req_digest, slot.ppu.own_share});
    seal(m, *keys_, cfg_.share_auth_mode);
    if (cfg_.optimized) {
        // Everyone logs everyone's share so digest decisions resolve locally.
        for (ReplicaId r = 0; r < cfg_.n(); ++r) send_to_replica(r, m);
    } else {
        svc_->send(cfg_.primary(), m);
    }
}

AuthTag Replica::own_contrib_tag(SeqNum seq, const Slot& slot) const {
    return keys_->make(cfg_.share_auth_mode, id_,
                       contrib_sign_bytes(cfg_.view, seq, cfg_.epoch, id_,
                                          slot.req_digest, slot.ppu.own_share));
}

void Replica::on_ppu_contrib(const ProtocolMessage& msg) {
    const SeqNum seq = msg.header.seq;
    if (!within_horizon(seq)) return;
    const ReplicaId sender = static_cast<ReplicaId>(msg.header.sender);
    if (sender == cfg_.primary()) return;  // only backups contribute

    Slot& slot = get_slot(seq);
    if (slot.phase == Phase::kEmpty) {
        defer(seq, msg);
        return;
    }
    if (!slot.plan.needs_ppu_phase) return;
    const auto& body = msg.as<PpuContribBody>();
    if (body.req_digest != slot.req_digest) return;
    const bool fresh =
        slot.ppu.contributions.emplace(sender, std::make_pair(body.share, msg.auth))
            .second;
    if (!fresh) {
        resend_to(sender, seq, slot);  // still re-sending: it waits on us
        return;
    }

    if (is_primary()) {
        primary_try_decide(seq, slot);
    } else if (!slot.ppu.decided && !slot.ppu.missing.empty()) {
        resolve_decision(seq, slot);
    }
}

void Replica::primary_try_decide(SeqNum seq, Slot& slot) {
    if (slot.ppu.decided || slot.ppu.contributions.size() < 2 * cfg_.f) return;

    const AuthTag own_tag = own_contrib_tag(seq, slot);
    slot.ppu.decision = ndc::choose_decision(id_, slot.ppu.own_share, own_tag,
                                             slot.ppu.contributions, cfg_.f,
                                             /*as_digests=*/false);
    slot.ppu.decided = true;

    std::vector<NdShare> wire_entries =
        cfg_.optimized ? ndc::choose_decision(id_, slot.ppu.own_share, own_tag,
                                              slot.ppu.contributions, cfg_.f,
                                              /*as_digests=*/true)
                       : slot.ppu.decision;
    ProtocolMessage m = make_msg(
        MsgType::kPpuDecision, seq,
        PpuDecisionBody{slot.req_digest, cfg_.optimized, std::move(wire_entries)});
    seal_and_multicast(m, cfg_.auth_mode);

    set_nd_digest(seq, slot);
    advance(seq, slot);
}

bool Replica::verify_decision_entry(const Slot& slot, const NdShare& entry,
                                    const Bytes& full_value) const {
    Bytes preimage = contrib_sign_bytes(cfg_.view, slot.ppu.seq, cfg_.epoch,
                                        entry.proposer, slot.req_digest, full_value);
    return keys_->verify(entry.tag, entry.proposer, id_, preimage);
}

void Replica::on_ppu_decision(const ProtocolMessage& msg) {
    if (msg.header.sender != cfg_.primary() || is_primary()) return;
    const SeqNum seq = msg.header.seq;
    if (!within_horizon(seq)) return;

    Slot& slot = get_slot(seq);
    if (slot.phase == Phase::kEmpty) {
        defer(seq, msg);
        return;
    }
    if (!slot.plan.needs_ppu_phase) return;
    const auto& body = msg.as<PpuDecisionBody>();
    if (body.req_digest != slot.req_digest) return;
    if (slot.ppu.decided) {
        if (slot.prepare_sent) {  // duplicate decision; peer may have lost our prepare
            ProtocolMessage m = make_msg(MsgType::kPrepare, seq,
                                         PrepareBody{slot.req_digest, slot.nd_digest});
            seal_and_multicast(m, cfg_.auth_mode);
        }
        return;
    }
    if (!slot.ppu.decision.empty()) return;  // digest form already under resolution

    auto shape = ndc::check_decision_shape(body.entries, cfg_.primary(), cfg_.f);
    if (!shape.ok) {
        suspect(seq, Suspicion::kNdValueRejected,
                std::string("decision shape: ") + shape.why);
        return;
    }

    // The primary's entry must match the share it put in the pre-prepare;
    // anything else is a self-contradicting primary.
    const Bytes* pp_share = slot.pre_payload.find(kNdNpre);
    const Bytes primary_share = pp_share ? *pp_share : Bytes{};
    for (const auto& e : body.entries) {
        if (e.proposer != cfg_.primary()) continue;
        const bool match =
            body.values_are_digests
                ? (e.value.size() == 32 &&
                   sha256(primary_share) == digest_from_value(e.value))
                : (e.value == primary_share);
        if (!match) {
            suspect(seq, Suspicion::kNdValueRejected,
                    "decision contradicts pre-prepare share");
            return;
        }
    }

    if (!body.values_are_digests) {
        for (const auto& e : body.entries) {
            if (!verify_decision_entry(slot, e, e.value)) {
                suspect(seq, Suspicion::kNdValueRejected, "forged decision entry");
                return;
            }
        }
        slot.ppu.decision = body.entries;
        slot.ppu.decided = true;
        set_nd_digest(seq, slot);
        advance(seq, slot);
        return;
    }

    slot.ppu.decision = body.entries;  // digests, resolved below
    resolve_decision(seq, slot);
}

// Materializes full values for a digest-form decision from local knowledge
// (own share, the pre-prepare's primary share, logged contributions), fetching
// whatever is still missing. Returns true once resolved.
bool Replica::resolve_decision(SeqNum seq, Slot& slot) {
    if (slot.ppu.decided || slot.ppu.decision.empty()) return slot.ppu.decided;

    std::vector<NdShare> full;
    std::vector<ReplicaId> missing;
    for (const auto& e : slot.ppu.decision) {
        const Bytes* candidate = nullptr;
        if (e.proposer == id_) {
            candidate = &slot.ppu.own_share;
        } else if (e.proposer == cfg_.primary()) {
            candidate = slot.pre_payload.find(kNdNpre);
        } else {
            auto it = slot.ppu.contributions.find(e.proposer);
            if (it != slot.ppu.contributions.end()) candidate = &it->second.first;
        }
        if (!candidate) {
            missing.push_back(e.proposer);
            continue;
        }
        if (e.value.size() != 32) {
            suspect(seq, Suspicion::kNdValueRejected, "digest entry of wrong size");
            return false;
        }
        if (sha256(*candidate) != digest_from_value(e.value)) {
            suspect(seq, Suspicion::kNdValueRejected, "decision digest mismatches share");
            return false;
        }
        if (!verify_decision_entry(slot, e, *candidate)) {
            suspect(seq, Suspicion::kNdValueRejected, "forged decision entry");
            return false;
        }
        NdShare resolved = e;
        resolved.is_digest = false;
        resolved.value = *candidate;
        full.push_back(std::move(resolved));
    }

    if (!missing.empty()) {
        slot.ppu.missing = std::move(missing);
        send_fetch(seq, slot);
        return false;
    }

    slot.ppu.missing.clear();
    slot.ppu.decision = std::move(full);
    slot.ppu.decided = true;
    set_nd_digest(seq, slot);
    advance(seq, slot);
    return true;
}

void Replica::send_fetch(SeqNum seq, Slot& slot) {
    ProtocolMessage m = make_msg(MsgType::kFetchNd, seq,
                                 FetchNdBody{slot.req_digest, slot.ppu.missing});
    seal(m, *keys_, cfg_.auth_mode);
    svc_->send(cfg_.primary(), m);
    ++counters_.fetches_sent;
}

void Replica::on_fetch_nd(const ProtocolMessage& msg) {
    if (!is_primary()) return;
    const SeqNum seq = msg.header.seq;
    auto it = slots_.find(seq);
    if (it == slots_.end() || !it->second.ppu.decided) return;
    Slot& slot = it->second;
    const auto& body = msg.as<FetchNdBody>();
    if (body.req_digest != slot.req_digest) return;

    std::vector<NdShare> entries;
    for (ReplicaId p : body.proposers) {
        for (const auto& d : slot.ppu.decision) {
            if (d.proposer == p) entries.push_back(d);  // full values held locally
        }
    }
    if (entries.empty()) return;
    ProtocolMessage m = make_msg(MsgType::kNdValues, seq,
                                 NdValuesBody{slot.req_digest, std::move(entries)});
    seal(m, *keys_, cfg_.auth_mode);
    svc_->send(msg.header.sender, m);
}

void Replica::on_nd_values(const ProtocolMessage& msg) {
    if (msg.header.sender != cfg_.primary() || is_primary()) return;
    const SeqNum seq = msg.header.seq;
    if (!within_horizon(seq)) return;
    Slot& slot = get_slot(seq);
    if (slot.phase == Phase::kEmpty) {
        defer(seq, msg);
        return;
    }
    if (!slot.plan.needs_ppu_phase || slot.ppu.decided || slot.ppu.missing.empty())
        return;
    const auto& body = msg.as<NdValuesBody>();
    if (body.req_digest != slot.req_digest) return;

    for (const auto& e : body.entries) {
        if (e.is_digest) continue;
        if (std::find(slot.ppu.missing.begin(), slot.ppu.missing.end(), e.proposer) ==
            slot.ppu.missing.end())
            continue;
        if (!verify_decision_entry(slot, e, e.value)) {
            suspect(seq, Suspicion::kNdValueRejected, "fetched share fails verification");
            return;
        }
        slot.ppu.contributions.emplace(e.proposer, std::make_pair(e.value, e.tag));
    }
    resolve_decision(seq, slot);
}

// ---------------------------------------------------------------------------
// Prepare / commit

void Replica::on_prepare(const ProtocolMessage& msg) {
    const ReplicaId sender = static_cast<ReplicaId>(msg.header.sender);
    if (sender == cfg_.primary()) return;  // the pre-prepare is the primary's prepare
    const SeqNum seq = msg.header.seq;
    if (!within_horizon(seq)) return;
    const auto& body = msg.as<PrepareBody>();
    Slot& slot = get_slot(seq);
    const bool fresh =
        slot.prepares.emplace(sender, std::make_pair(body.req_digest, body.nd_digest))
            .second;
    if (!fresh) {
        resend_to(sender, seq, slot);  // still re-sending: it waits on us
        return;
    }
    advance(seq, slot);
}

void Replica::on_commit(const ProtocolMessage& msg) {
    const ReplicaId sender = static_cast<ReplicaId>(msg.header.sender);
    const SeqNum seq = msg.header.seq;
    if (!within_horizon(seq)) return;
    const auto& body = msg.as<PrepareBody>();
    Slot& slot = get_slot(seq);
    const bool fresh =
        slot.commits.emplace(sender, std::make_pair(body.req_digest, body.nd_digest))
            .second;
    if (!fresh) {
        resend_to(sender, seq, slot);  // still re-sending: it waits on us
        return;
    }
    advance(seq, slot);
}

size_t Replica::quorum_votes(const std::map<ReplicaId, std::pair<Digest, Digest>>& votes,
                             const Slot& slot) const {
    size_t matching = 0;
    for (const auto& [sender, digests] : votes) {
        if (sender == id_) continue;
        if (digests.first == slot.req_digest && digests.second == slot.nd_digest)
            ++matching;
    }
    return matching;
}

size_t Replica::postc_votes(const std::map<ReplicaId, Digest>& votes,
                            const Slot& slot) const {
    size_t matching = 0;
    for (const auto& [sender, digest] : votes) {
        if (sender == id_) continue;
        if (digest == slot.postnd_digest) ++matching;
    }
    return matching;
}

NdPayload Replica::resolved_pre_payload(const Slot& slot) const {
    NdPayload p = slot.pre_payload;
    if (slot.plan.needs_ppu_phase)
        p.set(kNdNpre,
              ndc::resolved_decision_bytes(ndc::decision_values(slot.ppu.decision)));
    return p;
}

Digest Replica::cert_nd_digest(const Slot& slot) const {
    ByteWriter w;
    resolved_pre_payload(slot).encode(w);
    encode_piggyback(w, slot.piggyback);
    return sha256(w.bytes());
}

void Replica::set_nd_digest(SeqNum seq, Slot& slot) {
    if (slot.nd_digest_known) return;
    slot.nd_digest = cert_nd_digest(slot);
    slot.nd_digest_known = true;
    if (!is_primary() && !slot.prepare_sent) {
        ProtocolMessage m = make_msg(MsgType::kPrepare, seq,
                                     PrepareBody{slot.req_digest, slot.nd_digest});
        seal_and_multicast(m, cfg_.auth_mode);
        slot.prepare_sent = true;
    }
}

void Replica::advance(SeqNum seq, Slot& slot) {
    if (slot.phase == Phase::kPrePrepared && slot.nd_digest_known &&
        quorum_votes(slot.prepares, slot) >= 2 * cfg_.f) {
        set_phase(seq, slot, Phase::kPrepared);
        if (!slot.commit_sent) {
            ProtocolMessage m = make_msg(MsgType::kCommit, seq,
                                         PrepareBody{slot.req_digest, slot.nd_digest});
            seal_and_multicast(m, cfg_.auth_mode);
            slot.commit_sent = true;
        }
    }
    if (slot.phase == Phase::kPrepared &&
        quorum_votes(slot.commits, slot) >= 2 * cfg_.f) {
        set_phase(seq, slot, Phase::kCommitted);
        // A committed carrier settles the entries it piggybacked.
        for (const auto& e : slot.piggyback) {
            Slot& target = get_slot(e.seq);
            if (target.carried_by == seq) maybe_agree_carried(e.seq, target);
        }
        maybe_postc_progress(seq, slot);
        try_deliver();
    }
}

// ---------------------------------------------------------------------------
// Standalone post-commit agreement

void Replica::on_postc_pre_prepare(const ProtocolMessage& msg) {
    if (msg.header.sender != cfg_.primary() || is_primary()) return;
    if (cfg_.optimized) return;  // piggybacking replaces the standalone rounds
    const SeqNum seq = msg.header.seq;
    if (!within_horizon(seq)) return;
    Slot& slot = get_slot(seq);
    if (slot.phase == Phase::kEmpty) {
        defer(seq, msg);
        return;
    }
    const auto& body = msg.as<PostcPrePrepareBody>();
    if (!slot.plan.needs_post_commit || body.entry.seq != seq) {
        suspect(seq, Suspicion::kBadOrder, "postnd entry does not fit the slot");
        return;
    }
    if (slot.postnd.has_value()) {
        if (ndc::postnd_digest(body.entry) == slot.postnd_digest) {
            if (slot.postc_prepare_sent) {  // duplicate; re-vote for lossy peers
                ProtocolMessage m = make_msg(MsgType::kPostcPrepare, seq,
                                             PostcRoundBody{slot.postnd_digest});
                seal_and_multicast(m, cfg_.auth_mode);
            }
        } else {
            slot.poisoned = true;
            suspect(seq, Suspicion::kBadOrder, "conflicting postnd entries");
        }
        return;
    }

    slot.postnd = body.entry;
    slot.postnd_digest = ndc::postnd_digest(body.entry);
    slot.carried_by = 0;
    check_postnd_entry(seq, slot);
    if (!slot.postnd_checked) return;  // suspicion already raised

    ProtocolMessage m = make_msg(MsgType::kPostcPrepare, seq,
                                 PostcRoundBody{slot.postnd_digest});
    seal_and_multicast(m, cfg_.auth_mode);
    slot.postc_prepare_sent = true;
    maybe_postc_progress(seq, slot);
}

void Replica::on_postc_round(const ProtocolMessage& msg) {
    if (cfg_.optimized) return;
    const SeqNum seq = msg.header.seq;
    // Votes for already-delivered slots still matter to the primary, whose
    // own entry settles after it replied.
    if (seq > last_delivered_ + cfg_.buffer_horizon) return;
    const ReplicaId sender = static_cast<ReplicaId>(msg.header.sender);
    Slot& slot = get_slot(seq);
    if (slot.phase == Phase::kEmpty) {
        if (seq > last_delivered_) defer(seq, msg);
        return;
    }
    const auto& body = msg.as<PostcRoundBody>();
    bool fresh = true;
    if (msg.type == MsgType::kPostcPrepare) {
        if (sender == cfg_.primary()) return;  // the entry itself is the primary's vote
        fresh = slot.postc_prepares.emplace(sender, body.postnd_digest).second;
    } else {
        fresh = slot.postc_commits.emplace(sender, body.postnd_digest).second;
    }
    if (!fresh) {
        resend_to(sender, seq, slot);  // still re-sending: it waits on us
        return;
    }
    maybe_postc_progress(seq, slot);
}

void Replica::maybe_postc_progress(SeqNum seq, Slot& slot) {
    if (cfg_.optimized) return;
    if (!slot.plan.needs_post_commit || !slot.postnd || slot.poisoned) return;
    const bool participant_ready = is_primary() || slot.postc_prepare_sent;
    if (!slot.postc_commit_sent && participant_ready &&
        postc_votes(slot.postc_prepares, slot) >= 2 * cfg_.f) {
        ProtocolMessage m = make_msg(MsgType::kPostcCommit, seq,
                                     PostcRoundBody{slot.postnd_digest});
        seal_and_multicast(m, cfg_.auth_mode);
        slot.postc_commit_sent = true;
    }
    if (!slot.postnd_agreed && slot.postc_commit_sent &&
        postc_votes(slot.postc_commits, slot) >= 2 * cfg_.f) {
        slot.postnd_agreed = true;
        svc_->trace(TraceLine('A')
                        .field("r", id_)
                        .field("s", seq)
                        .field("post", slot.postnd_digest)
                        .field("via", std::string("postc"))
                        .str());
        try_deliver();
    }
}

// ---------------------------------------------------------------------------
// Delivery and execution

void Replica::try_deliver() {
    while (!frozen_) {
        auto it = slots_.find(last_delivered_ + 1);
        if (it == slots_.end()) return;
        const SeqNum seq = it->first;
        Slot& slot = it->second;
        if (slot.poisoned) return;
        if (slot.phase == Phase::kEmpty || slot.phase == Phase::kPrePrepared ||
            slot.phase == Phase::kPrepared || slot.phase == Phase::kDelivered)
            return;

        if (slot.is_null) {
            set_phase(seq, slot, Phase::kDelivered);
            last_delivered_ = seq;
            continue;
        }

        if (slot.plan.needs_post_commit && !is_primary()) {
            if (!(slot.postnd && slot.postnd_checked && slot.postnd_agreed)) {
                if (slot.phase != Phase::kNdPending) {
                    set_phase(seq, slot, Phase::kNdPending);
                    arm_nd_timer(seq, slot);
                }
                return;
            }
        }

        if (!execute_and_deliver(seq, slot)) return;
    }
}

bool Replica::execute_and_deliver(SeqNum seq, Slot& slot) {
    app::AppRequest req{cfg_.view, seq, slot.req_digest, ByteView(slot.request.op)};
    NdPayload resolved = resolved_pre_payload(slot);
    const bool replaying_post = slot.plan.needs_post_commit && !is_primary();
    if (replaying_post) {
        for (const auto& seg : slot.postnd->values.segments)
            resolved.set(static_cast<NdClass>(seg.class_bit), seg.data);

        ndc::OrderCheck check = app_->pre_replay_check(req, resolved);
        if (check.verdict != ndc::OrderVerdict::kOk) {
            svc_->trace(TraceLine('W')
                            .field("r", id_)
                            .field("s", seq)
                            .field("event", std::string("analysis_reject"))
                            .field("verdict",
                                   std::string(ndc::verdict_name(check.verdict)))
                            .str());
            suspect(seq, Suspicion::kExecCrashOrDeadlock,
                    std::string("schedule analysis: ") +
                        ndc::verdict_name(check.verdict));
            frozen_ = true;
            return false;
        }
    }

    Bytes snap = app_->snapshot();
    app::ExecResult res = app_->execute(req, resolved);
    if (res.outcome != app::ExecOutcome::kOk) {
        app_->restore(snap);
        ++counters_.restarts;
        svc_->trace(TraceLine('W')
                        .field("r", id_)
                        .field("s", seq)
                        .field("event", std::string("restart"))
                        .field("cause",
                               std::string(res.outcome == app::ExecOutcome::kCrash
                                               ? "crash"
                                               : "budget"))
                        .field("state", state_digest())
                        .str());
        suspect(seq, Suspicion::kExecCrashOrDeadlock,
                res.outcome == app::ExecOutcome::kCrash
                    ? "execution crashed"
                    : "execution budget exhausted");
        frozen_ = true;
        return false;
    }
    ++counters_.executions;

    const Digest result_digest = sha256(res.result);
    NdPayload post_values;
    if (slot.plan.needs_post_commit) {
        if (is_primary()) {
            record_postnd(seq, slot, res.recorded, result_digest);
            post_values = res.recorded;
        } else {
            post_values = slot.postnd->values;
            if (result_digest != slot.postnd->reply_digest)
                suspect(seq, Suspicion::kReplyDigestMismatch,
                        "replayed result disagrees with recorded reply digest");
        }
    }

    set_phase(seq, slot, Phase::kDelivered);
    last_delivered_ = seq;

    ByteWriter w;
    resolved_pre_payload(slot).encode(w);
    post_values.encode(w);
    svc_->trace(TraceLine('D')
                    .field("r", id_)
                    .field("v", cfg_.view)
                    .field("s", seq)
                    .field("req", slot.req_digest)
                    .field("nd", sha256(w.bytes()))
                    .field("res", result_digest)
                    .field("st", state_digest())
                    .field("mask", static_cast<uint64_t>(slot.mask))
                    .str());

    send_reply(seq, slot, res.result);
    return true;
}

void Replica::record_postnd(SeqNum seq, Slot& slot, const NdPayload& recorded,
                            const Digest& result_digest) {
    PostndWire entry{seq, recorded, result_digest};
    slot.postnd = entry;
    slot.postnd_digest = ndc::postnd_digest(entry);
    slot.postnd_checked = true;
    svc_->trace(TraceLine('R')
                    .field("r", id_)
                    .field("s", seq)
                    .field("post", slot.postnd_digest)
                    .str());
    if (cfg_.optimized) {
        pending_carry_.push_back(std::move(entry));
        arm_flush_timer();
    } else {
        ++counters_.entries_standalone;
        ProtocolMessage m = make_msg(MsgType::kPostcPrePrepare, seq,
                                     PostcPrePrepareBody{*slot.postnd});
        seal_and_multicast(m, cfg_.auth_mode);
    }
}

void Replica::send_reply(SeqNum seq, Slot& slot, const Bytes& result) {
    const ClientId client = slot.request.client;
    ProtocolMessage m = make_msg(
        MsgType::kReply, seq,
        ReplyBody{client, slot.request.request_id, result, sha256(result)});
    seal_for_client(m, *keys_, client_node(client));
    svc_->send(client_node(client), m);
    slot.reply_sent = true;
    last_reply_[client] = m;
    auto it = inflight_.find(client);
    if (it != inflight_.end() && it->second.first == slot.request.request_id)
        inflight_.erase(it);
}

// ---------------------------------------------------------------------------
// Plumbing

void Replica::defer(SeqNum seq, const ProtocolMessage& msg) {
    Slot& slot = get_slot(seq);
    if (slot.deferred.size() < 64) slot.deferred.push_back(msg);
}

void Replica::drain_deferred(SeqNum seq) {
    auto it = slots_.find(seq);
    if (it == slots_.end()) return;
    std::vector<ProtocolMessage> queued;
    queued.swap(it->second.deferred);
    for (const auto& m : queued) on_message(m);
}

void Replica::suspect(SeqNum seq, Suspicion reason, const std::string& detail) {
    if (!suspicion_keys_.insert({seq, reason}).second) return;
    suspicions_.push_back(SuspicionEvent{seq, reason, detail});
    svc_->trace(TraceLine('S')
                    .field("r", id_)
                    .field("s", seq)
                    .field("reason", std::string(suspicion_name(reason)))
                    .str());
}

void Replica::set_phase(SeqNum seq, Slot& slot, Phase p) {
    slot.phase = p;
    svc_->trace(TraceLine('P')
                    .field("r", id_)
                    .field("s", seq)
                    .field("phase", std::string(phase_name(p)))
                    .str());
}

void Replica::arm_nd_timer(SeqNum seq, Slot& slot) {
    if (slot.nd_timer_armed) return;
    slot.nd_timer_armed = true;
    svc_->set_timer(svc_->now_us() + cfg_.agreement_timeout_us,
                    timer_token(TimerKind::kNdTimeout, seq));
}

void Replica::arm_retry_timer() {
    if (retry_armed_) return;
    retry_armed_ = true;
    retry_mark_ = last_delivered_;
    const uint64_t backoff = cfg_.retry_base_us << std::min<uint32_t>(retry_attempts_, 8);
    svc_->set_timer(svc_->now_us() + backoff, timer_token(TimerKind::kRetry, 0));
}

void Replica::arm_flush_timer() {
    if (flush_armed_) return;
    flush_armed_ = true;
    svc_->set_timer(svc_->now_us() + cfg_.flush_timer_us,
                    timer_token(TimerKind::kFlush, 0));
}

// Everything of ours a peer could be missing for this slot, sealed and
// ready to send. The pre-prepare keeps its original (already sealed) wire.
std::vector<ProtocolMessage> Replica::resend_wires(SeqNum seq, Slot& slot) {
    std::vector<ProtocolMessage> out;
    if (slot.phase == Phase::kEmpty) return out;
    if (is_primary()) {
        out.push_back(slot.pre_prepare);
        if (slot.plan.needs_ppu_phase && slot.ppu.decided) {
            std::vector<NdShare> wire_entries =
                cfg_.optimized
                    ? ndc::choose_decision(id_, slot.ppu.own_share,
                                           own_contrib_tag(seq, slot),
                                           slot.ppu.contributions, cfg_.f, true)
                    : slot.ppu.decision;
            ProtocolMessage m =
                make_msg(MsgType::kPpuDecision, seq,
                         PpuDecisionBody{slot.req_digest, cfg_.optimized,
                                         std::move(wire_entries)});
            seal(m, *keys_, cfg_.auth_mode);
            out.push_back(std::move(m));
        }
        if (!cfg_.optimized && slot.postnd) {
            ProtocolMessage m = make_msg(MsgType::kPostcPrePrepare, seq,
                                         PostcPrePrepareBody{*slot.postnd});
            seal(m, *keys_, cfg_.auth_mode);
            out.push_back(std::move(m));
        }
    } else {
        if (slot.prepare_sent) {
            ProtocolMessage m = make_msg(MsgType::kPrepare, seq,
                                         PrepareBody{slot.req_digest, slot.nd_digest});
            seal(m, *keys_, cfg_.auth_mode);
            out.push_back(std::move(m));
        }
        if (slot.postc_prepare_sent) {
            ProtocolMessage m = make_msg(MsgType::kPostcPrepare, seq,
                                         PostcRoundBody{slot.postnd_digest});
            seal(m, *keys_, cfg_.auth_mode);
            out.push_back(std::move(m));
        }
    }
    if (slot.commit_sent) {
        ProtocolMessage m = make_msg(MsgType::kCommit, seq,
                                     PrepareBody{slot.req_digest, slot.nd_digest});
        seal(m, *keys_, cfg_.auth_mode);
        out.push_back(std::move(m));
    }
    if (slot.postc_commit_sent) {
        ProtocolMessage m = make_msg(MsgType::kPostcCommit, seq,
                                     PostcRoundBody{slot.postnd_digest});
        seal(m, *keys_, cfg_.auth_mode);
        out.push_back(std::move(m));
    }
    return out;
}

// Loss recovery, self-driven: re-emit this replica's contribution to the
// given slot's progress toward everyone. Called for the lowest undelivered
// slot on the retry timer and when a retransmitted client request shows the
// slot is still in flight. Both callers are timer-damped, so multicast here
// cannot snowball.
void Replica::resend_for(SeqNum seq, Slot& slot) {
    if (slot.phase == Phase::kDelivered) return;
    if (!is_primary() && slot.plan.needs_ppu_phase && slot.ppu.contributed &&
        !slot.ppu.decided) {
        send_contribution(seq, slot);
        if (!slot.ppu.missing.empty()) send_fetch(seq, slot);
    }
    for (const ProtocolMessage& m : resend_wires(seq, slot)) {
        for (ReplicaId r = 0; r < cfg_.n(); ++r) send_to_replica(r, m);
    }
}

// Loss recovery, duplicate-driven: a message we already hold arrived again,
// so its sender is stuck waiting for something of ours. Hand that one peer
// everything this slot produced, once; the single shot per (slot, peer)
// keeps two finished replicas from volleying resends at each other forever.
void Replica::resend_to(ReplicaId peer, SeqNum seq, Slot& slot) {
    if (peer == id_ || slot.nudged.count(peer)) return;
    std::vector<ProtocolMessage> wires = resend_wires(seq, slot);
    if (wires.empty()) return;
    slot.nudged.insert(peer);
    for (const ProtocolMessage& m : wires) send_to_replica(peer, m);
}

} // namespace ndbft::engine
