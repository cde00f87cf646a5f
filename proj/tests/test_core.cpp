#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "core/digest.hpp"
#include "core/messages.hpp"
#include "core/nd.hpp"
#include "core/protocol_config.hpp"

using namespace ndbft;

namespace {

Bytes hex_bytes(const std::string& hex) {
    Bytes out;
    for (size_t i = 0; i + 1 < hex.size(); i += 2)
        out.push_back(uint8_t(std::stoul(hex.substr(i, 2), nullptr, 16)));
    return out;
}

std::string hex_of(ByteView b) {
    static const char* k = "0123456789abcdef";
    std::string s;
    for (uint8_t c : b) {
        s.push_back(k[c >> 4]);
        s.push_back(k[c & 0xf]);
    }
    return s;
}

Digest d_of(uint8_t fill) {
    Digest d;
    d.bytes.fill(fill);
    return d;
}

}  // namespace

TEST_CASE("sha256 known vectors") {
    CHECK(sha256({}).hex() ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    Bytes abc = to_bytes("abc");
    CHECK(sha256(abc).hex() ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("incremental hasher matches one-shot") {
    Bytes data = to_bytes("the quick brown fox jumps over the lazy dog");
    Hasher h;
    h.update(ByteView(data.data(), 10)).update(ByteView(data.data() + 10, data.size() - 10));
    CHECK(h.finish() == sha256(data));

    Hasher h2;
    h2.update_u64(0x0807060504030201ull);
    Bytes le = {1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(h2.finish() == sha256(le));
}

TEST_CASE("expand_digest sizes and prefix consistency") {
    Digest root = sha256(to_bytes("root"));
    CHECK(expand_digest(root, 0).empty());
    Bytes a = expand_digest(root, 32);
    Bytes b = expand_digest(root, 100);
    CHECK(a.size() == 32);
    CHECK(b.size() == 100);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
    CHECK(expand_digest(root, 100) == b);
    CHECK(expand_digest(sha256(to_bytes("other")), 100) != b);
}

TEST_CASE("hmac-sha256 rfc 4231 vectors") {
    // Test case 1: key = 20 x 0x0b, data = "Hi There".
    Bytes key1(20, 0x0b);
    CHECK(hex_of(hmac_sha256(key1, to_bytes("Hi There"))) ==
          "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
    // Test case 2: key = "Jefe", data = "what do ya want for nothing?".
    CHECK(hex_of(hmac_sha256(to_bytes("Jefe"), to_bytes("what do ya want for nothing?"))) ==
          "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST_CASE("nd mask name round trip") {
    for (NdTypeMask m = 0; m <= kNdMaskAll; m++) {
        CHECK(mask_from_name(mask_name(m)) == m);
    }
    CHECK(mask_name(0) == "0");
    CHECK(mask_from_name("VPRE|NPOST") == (kNdVpre | kNdNpost));
    CHECK_THROWS_AS(mask_from_name("BOGUS"), std::invalid_argument);
}

TEST_CASE("keystore authenticator verified per receiver") {
    KeyStore keys(to_bytes("seed-a"), 4);
    Bytes msg = to_bytes("hello replicas");
    AuthTag tag = keys.authenticator_for_replicas(2, msg);
    REQUIRE(tag.macs.size() == 4);
    for (NodeId r = 0; r < 4; r++) CHECK(keys.verify(tag, 2, r, msg));

    Bytes other = to_bytes("hello replicax");
    for (NodeId r = 0; r < 4; r++) CHECK_FALSE(keys.verify(tag, 2, r, other));

    // Entries are receiver-specific: swapping two entries breaks exactly
    // those receivers.
    AuthTag swapped = tag;
    std::swap(swapped.macs[0], swapped.macs[1]);
    CHECK_FALSE(keys.verify(swapped, 2, 0, msg));
    CHECK_FALSE(keys.verify(swapped, 2, 1, msg));
    CHECK(keys.verify(swapped, 2, 3, msg));

    // A different key store (different master seed) rejects everything.
    KeyStore keys2(to_bytes("seed-b"), 4);
    for (NodeId r = 0; r < 4; r++) CHECK_FALSE(keys2.verify(tag, 2, r, msg));
}

TEST_CASE("keystore signatures for replicas and clients") {
    KeyStore keys(to_bytes("seed-a"), 4);
    Bytes msg = to_bytes("signed payload");
    AuthTag tag = keys.sign(1, msg);
    CHECK(keys.verify(tag, 1, 3, msg));
    CHECK_FALSE(keys.verify(tag, 2, 3, msg));  // wrong claimed sender
    Bytes other = to_bytes("signed payloae");
    CHECK_FALSE(keys.verify(tag, 1, 3, other));

    NodeId client = client_node(7);
    AuthTag ctag = keys.sign(client, msg);
    CHECK(keys.verify(ctag, client, 0, msg));
    CHECK_FALSE(keys.verify(ctag, client_node(8), 0, msg));

    AuthTag single = keys.authenticator_for_node(0, client, msg);
    REQUIRE(single.macs.size() == 1);
    CHECK(keys.verify(single, 0, client, msg));
    CHECK_FALSE(keys.verify(single, 0, client_node(8), msg));

    CHECK_FALSE(keys.verify(tag, 9, 3, msg));  // replica id out of range
}

namespace {

ProtocolMessage sample_request() {
    return make_request(7, 3, to_bytes("op-bytes"), 42);
}

std::vector<ProtocolMessage> sample_messages() {
    std::vector<ProtocolMessage> out;
    KeyStore keys(to_bytes("wire-seed"), 4);

    ProtocolMessage req = sample_request();
    seal(req, keys, AuthMode::kSignature);
    out.push_back(req);

    NdPayload pre;
    pre.set(kNdVpre, to_bytes("vpre-value"));
    pre.set(kNdNpre, to_bytes("primary-share"));
    PostndWire entry;
    entry.seq = 9;
    entry.values.set(kNdNpost, to_bytes("sched"));
    entry.reply_digest = d_of(0xaa);
    ProtocolMessage pp;
    pp.type = MsgType::kPrePrepare;
    pp.header = {0, 11, 0, 42};
    pp.body = PrePrepareBody{encode(req), kNdVpre | kNdNpre, pre, {entry}};
    seal(pp, keys, AuthMode::kAuthenticator);
    out.push_back(pp);

    ProtocolMessage contrib;
    contrib.type = MsgType::kPpuContrib;
    contrib.header = {0, 11, 2, 42};
    contrib.body = PpuContribBody{d_of(0x11), to_bytes("share-2")};
    seal(contrib, keys, AuthMode::kAuthenticator);
    out.push_back(contrib);

    NdShare s1{0, false, to_bytes("share-0"), keys.authenticator_for_replicas(0, to_bytes("x"))};
    NdShare s2{2, true, Bytes(32, 0x5c), keys.sign(2, to_bytes("y"))};
    ProtocolMessage dec;
    dec.type = MsgType::kPpuDecision;
    dec.header = {0, 11, 0, 42};
    dec.body = PpuDecisionBody{d_of(0x11), true, {s1, s2}};
    seal(dec, keys, AuthMode::kAuthenticator);
    out.push_back(dec);

    for (MsgType t : {MsgType::kPrepare, MsgType::kCommit}) {
        ProtocolMessage m;
        m.type = t;
        m.header = {0, 11, 3, 42};
        m.body = PrepareBody{d_of(0x11), d_of(0x22)};
        seal(m, keys, AuthMode::kAuthenticator);
        out.push_back(m);
    }

    ProtocolMessage postc;
    postc.type = MsgType::kPostcPrePrepare;
    postc.header = {0, 12, 0, 42};
    postc.body = PostcPrePrepareBody{entry};
    seal(postc, keys, AuthMode::kAuthenticator);
    out.push_back(postc);

    for (MsgType t : {MsgType::kPostcPrepare, MsgType::kPostcCommit}) {
        ProtocolMessage m;
        m.type = t;
        m.header = {0, 12, 1, 42};
        m.body = PostcRoundBody{d_of(0x33)};
        seal(m, keys, AuthMode::kAuthenticator);
        out.push_back(m);
    }

    ProtocolMessage reply;
    reply.type = MsgType::kReply;
    reply.header = {0, 11, 2, 42};
    reply.body = ReplyBody{7, 3, to_bytes("result"), sha256(to_bytes("result"))};
    seal_for_client(reply, keys, client_node(7));
    out.push_back(reply);

    ProtocolMessage fetch;
    fetch.type = MsgType::kFetchNd;
    fetch.header = {0, 11, 3, 42};
    fetch.body = FetchNdBody{d_of(0x11), {0, 2}};
    seal(fetch, keys, AuthMode::kAuthenticator);
    out.push_back(fetch);

    ProtocolMessage vals;
    vals.type = MsgType::kNdValues;
    vals.header = {0, 11, 0, 42};
    vals.body = NdValuesBody{d_of(0x11), {s1}};
    seal(vals, keys, AuthMode::kAuthenticator);
    out.push_back(vals);

    return out;
}

}  // namespace

TEST_CASE("every message type round-trips") {
    auto msgs = sample_messages();
    CHECK(msgs.size() == 12);
    for (const auto& m : msgs) {
        Bytes wire = encode(m);
        ProtocolMessage back = decode(wire);
        CHECK(back == m);
        CHECK(encode(back) == wire);
    }
}

TEST_CASE("embedded request survives pre-prepare round trip") {
    auto msgs = sample_messages();
    const auto& pp = msgs[1];
    ProtocolMessage back = decode(encode(pp));
    ProtocolMessage req = decode(back.as<PrePrepareBody>().request_wire);
    CHECK(req == msgs[0]);
    CHECK(req.as<RequestBody>().client == 7);
}

TEST_CASE("null request is distinguishable and seq-tagged") {
    ProtocolMessage m = make_null_request(0, 17, 42);
    const auto& r = m.as<RequestBody>();
    CHECK(is_null_request(r));
    CHECK(r.request_id == 17);
    CHECK(r.op.empty());
    CHECK_FALSE(is_null_request(sample_request().as<RequestBody>()));
}

TEST_CASE("truncated input always throws") {
    for (const auto& m : sample_messages()) {
        Bytes wire = encode(m);
        // Every strict prefix must fail to decode.
        for (size_t len = 0; len < wire.size(); len++) {
            CHECK_THROWS_AS(decode(ByteView(wire.data(), len)), WireError);
        }
        Bytes extended = wire;
        extended.push_back(0);
        CHECK_THROWS_AS(decode(extended), WireError);
    }
}

TEST_CASE("single-byte mutations never alias another canonical message") {
    auto msgs = sample_messages();
    const Bytes wire = encode(msgs[1]);  // pre-prepare, richest structure
    std::mt19937_64 rng(20240915);
    int decoded_ok = 0;
    for (int trial = 0; trial < 1000; trial++) {
        Bytes mut = wire;
        size_t pos = rng() % mut.size();
        uint8_t delta = uint8_t(1 + rng() % 255);
        mut[pos] ^= delta;
        try {
            ProtocolMessage m = decode(mut);
            decoded_ok++;
            CHECK(m != msgs[1]);
            // Canonical form: whatever decodes must re-encode byte-identically.
            CHECK(encode(m) == mut);
        } catch (const WireError&) {
        }
    }
    // Most single-byte flips land in value fields and still parse; the point
    // is that none of them alias the original message.
    CHECK(decoded_ok > 0);
}

TEST_CASE("seal and verify over the wire") {
    KeyStore keys(to_bytes("wire-seed"), 4);
    auto msgs = sample_messages();
    for (const auto& m : msgs) {
        if (m.type == MsgType::kReply) {
            CHECK(verify_seal(m, keys, client_node(7)));
            continue;
        }
        if (m.type == MsgType::kRequest) {
            for (NodeId r = 0; r < 4; r++) CHECK(verify_seal(m, keys, r));
            continue;
        }
        for (NodeId r = 0; r < 4; r++) CHECK(verify_seal(m, keys, r));
    }

    // Tampering with any body field invalidates the seal.
    ProtocolMessage tampered = msgs[4];
    tampered.as<PrepareBody>().nd_digest = d_of(0xff);
    CHECK_FALSE(verify_seal(tampered, keys, 0));
}

TEST_CASE("contribution tag bytes match the contribution message") {
    KeyStore keys(to_bytes("wire-seed"), 4);
    Digest rd = d_of(0x44);
    Bytes share = to_bytes("my-share");
    ProtocolMessage contrib;
    contrib.type = MsgType::kPpuContrib;
    contrib.header = {3, 21, 1, 42};
    contrib.body = PpuContribBody{rd, share};
    CHECK(contrib_sign_bytes(3, 21, 42, 1, rd, share) == encode_unauth(contrib));

    // The tag sealed onto the contribution verifies against the
    // reconstructed bytes, which is what decision-set verification does.
    seal(contrib, keys, AuthMode::kAuthenticator);
    Bytes rebuilt = contrib_sign_bytes(3, 21, 42, 1, rd, share);
    for (NodeId r = 0; r < 4; r++) CHECK(keys.verify(contrib.auth, 1, r, rebuilt));
}

TEST_CASE("nd payload invariants enforced on decode") {
    NdPayload p;
    p.set(kNdNpost, to_bytes("b"));
    p.set(kNdVpre, to_bytes("a"));
    CHECK(p.segments[0].class_bit == kNdVpre);  // kept sorted
    CHECK(p.classes() == (kNdVpre | kNdNpost));

    ByteWriter w;
    p.encode(w);
    ByteReader r(w.bytes());
    CHECK(NdPayload::decode(r) == p);

    // Duplicate class rejected.
    ByteWriter bad;
    bad.u32(2);
    bad.u8(kNdVpre);
    bad.blob(to_bytes("a"));
    bad.u8(kNdVpre);
    bad.blob(to_bytes("b"));
    ByteReader rb(bad.bytes());
    CHECK_THROWS_AS(NdPayload::decode(rb), WireError);

    // Multi-bit class rejected.
    ByteWriter bad2;
    bad2.u32(1);
    bad2.u8(kNdVpre | kNdNpre);
    bad2.blob(to_bytes("a"));
    ByteReader rb2(bad2.bytes());
    CHECK_THROWS_AS(NdPayload::decode(rb2), WireError);
}

TEST_CASE("decision value encoding is order-sensitive and canonical") {
    Bytes a = encode_decision_values({{0, to_bytes("x")}, {1, to_bytes("y")}});
    Bytes b = encode_decision_values({{1, to_bytes("y")}, {0, to_bytes("x")}});
    CHECK(a != b);
    CHECK(encode_decision_values({{0, to_bytes("x")}, {1, to_bytes("y")}}) == a);
}

TEST_CASE("protocol config derived values") {
    ProtocolConfig cfg;
    cfg.f = 2;
    CHECK(cfg.n() == 7);
    CHECK(cfg.primary() == 0);
    CHECK(replica_count(0) == 1);
    CHECK(primary_of(5, 4) == 1);
}

TEST_CASE("hex_bytes helper self-check") {
    CHECK(hex_bytes("00ff10") == Bytes({0x00, 0xff, 0x10}));
}
