#include "core/messages.hpp"

namespace ndbft {

const char* msg_type_name(MsgType t) {
    switch (t) {
        case MsgType::kRequest: return "REQUEST";
        case MsgType::kPrePrepare: return "PRE_PREPARE";
        case MsgType::kPpuContrib: return "PPU_CONTRIB";
        case MsgType::kPpuDecision: return "PPU_DECISION";
        case MsgType::kPrepare: return "PREPARE";
        case MsgType::kCommit: return "COMMIT";
        case MsgType::kPostcPrePrepare: return "POSTC_PRE_PREPARE";
        case MsgType::kPostcPrepare: return "POSTC_PREPARE";
        case MsgType::kPostcCommit: return "POSTC_COMMIT";
        case MsgType::kReply: return "REPLY";
        case MsgType::kFetchNd: return "FETCH_ND";
        case MsgType::kNdValues: return "ND_VALUES";
    }
    return "UNKNOWN";
}

namespace {

constexpr size_t kMaxPiggyback = 4096;
constexpr size_t kMaxDecisionEntries = 4096;
constexpr size_t kMaxFetchIds = 4096;

void encode_body(ByteWriter& w, const ProtocolMessage& m) {
    switch (m.type) {
        case MsgType::kRequest: {
            const auto& b = m.as<RequestBody>();
            w.u64(b.client);
            w.u64(b.request_id);
            w.blob(b.op);
            return;
        }
        case MsgType::kPrePrepare: {
            const auto& b = m.as<PrePrepareBody>();
            w.blob(b.request_wire);
            w.u8(b.mask);
            b.pre_payload.encode(w);
            w.u32(static_cast<uint32_t>(b.piggyback.size()));
            for (const auto& e : b.piggyback) e.encode(w);
            return;
        }
        case MsgType::kPpuContrib: {
            const auto& b = m.as<PpuContribBody>();
            encode_digest(w, b.req_digest);
            w.blob(b.share);
            return;
        }
        case MsgType::kPpuDecision: {
            const auto& b = m.as<PpuDecisionBody>();
            encode_digest(w, b.req_digest);
            w.u8(b.values_are_digests ? 1 : 0);
            w.u32(static_cast<uint32_t>(b.entries.size()));
            for (const auto& e : b.entries) e.encode(w);
            return;
        }
        case MsgType::kPrepare:
        case MsgType::kCommit: {
            const auto& b = m.as<PrepareBody>();
            encode_digest(w, b.req_digest);
            encode_digest(w, b.nd_digest);
            return;
        }
        case MsgType::kPostcPrePrepare: {
            m.as<PostcPrePrepareBody>().entry.encode(w);
            return;
        }
        case MsgType::kPostcPrepare:
        case MsgType::kPostcCommit: {
            encode_digest(w, m.as<PostcRoundBody>().postnd_digest);
            return;
        }
        case MsgType::kReply: {
            const auto& b = m.as<ReplyBody>();
            w.u64(b.client);
            w.u64(b.request_id);
            w.blob(b.result);
            encode_digest(w, b.result_digest);
            return;
        }
        case MsgType::kFetchNd: {
            const auto& b = m.as<FetchNdBody>();
            encode_digest(w, b.req_digest);
            w.u32(static_cast<uint32_t>(b.proposers.size()));
            for (ReplicaId p : b.proposers) w.u32(p);
            return;
        }
        case MsgType::kNdValues: {
            const auto& b = m.as<NdValuesBody>();
            encode_digest(w, b.req_digest);
            w.u32(static_cast<uint32_t>(b.entries.size()));
            for (const auto& e : b.entries) e.encode(w);
            return;
        }
    }
    throw WireError(0, "encode: unknown message type");
}

MsgBody decode_body(ByteReader& r, MsgType type) {
    switch (type) {
        case MsgType::kRequest: {
            RequestBody b;
            b.client = r.u64();
            b.request_id = r.u64();
            b.op = r.blob();
            return b;
        }
        case MsgType::kPrePrepare: {
            PrePrepareBody b;
            b.request_wire = r.blob();
            b.mask = r.u8();
            if (!mask_valid(b.mask))
                r.fail("pre-prepare nd mask out of range");
            b.pre_payload = NdPayload::decode(r);
            uint32_t count = r.count(kMaxPiggyback);
            b.piggyback.reserve(count);
            SeqNum prev = 0;
            for (uint32_t i = 0; i < count; ++i) {
                b.piggyback.push_back(PostndWire::decode(r));
                if (b.piggyback.back().seq <= prev)
                    r.fail("piggyback entries not seq-ascending");
                prev = b.piggyback.back().seq;
            }
            return b;
        }
        case MsgType::kPpuContrib: {
            PpuContribBody b;
            b.req_digest = decode_digest(r);
            b.share = r.blob();
            return b;
        }
        case MsgType::kPpuDecision: {
            PpuDecisionBody b;
            b.req_digest = decode_digest(r);
            uint8_t flag = r.u8();
            if (flag > 1) r.fail("invalid decision digest flag");
            b.values_are_digests = flag == 1;
            uint32_t count = r.count(kMaxDecisionEntries);
            b.entries.reserve(count);
            for (uint32_t i = 0; i < count; ++i)
                b.entries.push_back(NdShare::decode(r));
            return b;
        }
        case MsgType::kPrepare:
        case MsgType::kCommit: {
            PrepareBody b;
            b.req_digest = decode_digest(r);
            b.nd_digest = decode_digest(r);
            return b;
        }
        case MsgType::kPostcPrePrepare: {
            PostcPrePrepareBody b;
            b.entry = PostndWire::decode(r);
            return b;
        }
        case MsgType::kPostcPrepare:
        case MsgType::kPostcCommit: {
            PostcRoundBody b;
            b.postnd_digest = decode_digest(r);
            return b;
        }
        case MsgType::kReply: {
            ReplyBody b;
            b.client = r.u64();
            b.request_id = r.u64();
            b.result = r.blob();
            b.result_digest = decode_digest(r);
            return b;
        }
        case MsgType::kFetchNd: {
            FetchNdBody b;
            b.req_digest = decode_digest(r);
            uint32_t count = r.count(kMaxFetchIds);
            b.proposers.reserve(count);
            for (uint32_t i = 0; i < count; ++i)
                b.proposers.push_back(r.u32());
            return b;
        }
        case MsgType::kNdValues: {
            NdValuesBody b;
            b.req_digest = decode_digest(r);
            uint32_t count = r.count(kMaxDecisionEntries);
            b.entries.reserve(count);
            for (uint32_t i = 0; i < count; ++i)
                b.entries.push_back(NdShare::decode(r));
            return b;
        }
    }
    r.fail("unknown message type");
}

void encode_prefix(ByteWriter& w, const ProtocolMessage& m) {
    w.u8(static_cast<uint8_t>(m.type));
    w.u64(m.header.view);
    w.u64(m.header.seq);
    w.u64(m.header.sender);
    w.u64(m.header.epoch);
    encode_body(w, m);
}

}  // namespace

Bytes encode_unauth(const ProtocolMessage& m) {
    ByteWriter w;
    encode_prefix(w, m);
    return w.take();
}

Bytes encode(const ProtocolMessage& m) {
    ByteWriter w;
    encode_prefix(w, m);
    encode_auth(w, m.auth);
    return w.take();
}

ProtocolMessage decode(ByteView wire) {
    ByteReader r(wire);
    ProtocolMessage m;
    uint8_t tag = r.u8();
    if (tag < 1 || tag >= kNumMsgTypes) r.fail("unknown message type");
    m.type = static_cast<MsgType>(tag);
    m.header.view = r.u64();
    m.header.seq = r.u64();
    m.header.sender = r.u64();
    m.header.epoch = r.u64();
    m.body = decode_body(r, m.type);
    m.auth = decode_auth(r);
    r.expect_done();
    return m;
}

void seal(ProtocolMessage& m, const KeyStore& keys, AuthMode mode) {
    m.auth = keys.make(mode, m.header.sender, encode_unauth(m));
}

void seal_for_client(ProtocolMessage& m, const KeyStore& keys, NodeId client) {
    m.auth = keys.authenticator_for_node(m.header.sender, client, encode_unauth(m));
}

bool verify_seal(const ProtocolMessage& m, const KeyStore& keys, NodeId receiver) {
    return keys.verify(m.auth, m.header.sender, receiver, encode_unauth(m));
}

ProtocolMessage make_request(ClientId client, uint64_t request_id, Bytes op,
                             uint64_t epoch) {
    ProtocolMessage m;
    m.type = MsgType::kRequest;
    m.header.sender = client_node(client);
    m.header.epoch = epoch;
    m.body = RequestBody{client, request_id, std::move(op)};
    return m;
}

ProtocolMessage make_null_request(ReplicaId primary, SeqNum seq, uint64_t epoch) {
    // Null requests carry the reserved client id and the slot's sequence
    // number as request id, so each is distinct and self-describing.
    ProtocolMessage m;
    m.type = MsgType::kRequest;
    m.header.sender = primary;
    m.header.epoch = epoch;
    m.body = RequestBody{kNullClient, seq, {}};
    return m;
}

bool is_null_request(const RequestBody& r) { return r.client == kNullClient; }

Bytes contrib_sign_bytes(ViewNum view, SeqNum seq, uint64_t epoch,
                         ReplicaId proposer, const Digest& req_digest,
                         const Bytes& share) {
    ProtocolMessage m;
    m.type = MsgType::kPpuContrib;
    m.header = MsgHeader{view, seq, proposer, epoch};
    m.body = PpuContribBody{req_digest, share};
    return encode_unauth(m);
}

}  // namespace ndbft
