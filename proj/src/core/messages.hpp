#pragma once

#include <variant>
#include <vector>

#include "core/auth.hpp"
#include "core/bytes.hpp"
#include "core/nd.hpp"
#include "core/types.hpp"

namespace ndbft {

enum class MsgType : uint8_t {
    kRequest = 1,
    kPrePrepare = 2,
    kPpuContrib = 3,    // backup's share, pre-prepare-update phase
    kPpuDecision = 4,   // primary's 2f+1 decision set
    kPrepare = 5,
    kCommit = 6,
    kPostcPrePrepare = 7,
    kPostcPrepare = 8,
    kPostcCommit = 9,
    kReply = 10,
    kFetchNd = 11,
    kNdValues = 12,
};
constexpr size_t kNumMsgTypes = 13;

const char* msg_type_name(MsgType t);

struct MsgHeader {
    ViewNum view = 0;
    SeqNum seq = 0;
    NodeId sender = 0;
    uint64_t epoch = 0;  // run identifier; messages from other runs are dropped

    bool operator==(const MsgHeader&) const = default;
};

struct RequestBody {
    ClientId client = 0;
    uint64_t request_id = 0;
    Bytes op;
    bool operator==(const RequestBody&) const = default;
};

struct PrePrepareBody {
    Bytes request_wire;  // full encoded REQUEST, client authentication included
    NdTypeMask mask = 0;
    NdPayload pre_payload;               // VPRE values and/or primary's NPRE share
    std::vector<PostndWire> piggyback;   // postnd entries riding this slot
    bool operator==(const PrePrepareBody&) const = default;
};

struct PpuContribBody {
    Digest req_digest;
    Bytes share;
    bool operator==(const PpuContribBody&) const = default;
};

struct PpuDecisionBody {
    Digest req_digest;
    bool values_are_digests = false;
    std::vector<NdShare> entries;
    bool operator==(const PpuDecisionBody&) const = default;
};

struct PrepareBody {  // also COMMIT
    Digest req_digest;
    Digest nd_digest;
    bool operator==(const PrepareBody&) const = default;
};

struct PostcPrePrepareBody {
    PostndWire entry;
    bool operator==(const PostcPrePrepareBody&) const = default;
};

struct PostcRoundBody {  // POSTC_PREPARE and POSTC_COMMIT
    Digest postnd_digest;
    bool operator==(const PostcRoundBody&) const = default;
};

struct ReplyBody {
    ClientId client = 0;
    uint64_t request_id = 0;
    Bytes result;
    Digest result_digest;
    bool operator==(const ReplyBody&) const = default;
};

struct FetchNdBody {
    Digest req_digest;
    std::vector<ReplicaId> proposers;
    bool operator==(const FetchNdBody&) const = default;
};

struct NdValuesBody {
    Digest req_digest;
    std::vector<NdShare> entries;  // full values
    bool operator==(const NdValuesBody&) const = default;
};

using MsgBody =
    std::variant<RequestBody, PrePrepareBody, PpuContribBody, PpuDecisionBody,
                 PrepareBody, PostcPrePrepareBody, PostcRoundBody, ReplyBody,
                 FetchNdBody, NdValuesBody>;

struct ProtocolMessage {
    MsgType type = MsgType::kRequest;
    MsgHeader header;
    MsgBody body;
    AuthTag auth;

    bool operator==(const ProtocolMessage&) const = default;

    template <typename T>
    const T& as() const {
        return std::get<T>(body);
    }
    template <typename T>
    T& as() {
        return std::get<T>(body);
    }
};

// Canonical encoding. `encode` emits the authenticated wire form;
// `encode_unauth` omits the trailing tag and is the byte string the tag is
// computed over. decode throws WireError on malformed input.
Bytes encode(const ProtocolMessage& m);
Bytes encode_unauth(const ProtocolMessage& m);
ProtocolMessage decode(ByteView wire);

// Authenticates `m` in place as `m.header.sender` using `mode`.
void seal(ProtocolMessage& m, const KeyStore& keys, AuthMode mode);
// Authenticates a reply destined for a single client endpoint.
void seal_for_client(ProtocolMessage& m, const KeyStore& keys, NodeId client);
bool verify_seal(const ProtocolMessage& m, const KeyStore& keys, NodeId receiver);

ProtocolMessage make_request(ClientId client, uint64_t request_id, Bytes op,
                             uint64_t epoch);
// Null requests are minted and sealed by the primary; `sender` is the
// primary's own node id since no client stands behind them.
ProtocolMessage make_null_request(ReplicaId primary, SeqNum seq, uint64_t epoch);
bool is_null_request(const RequestBody& r);

// The byte string a proposer's decision-set tag covers: the unauthenticated
// encoding of that proposer's PPU_CONTRIB message. Reconstructable by any
// replica from (view, seq, epoch, proposer, request digest, share).
Bytes contrib_sign_bytes(ViewNum view, SeqNum seq, uint64_t epoch,
                         ReplicaId proposer, const Digest& req_digest,
                         const Bytes& share);

}  // namespace ndbft
