#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <memory>

#include "appkit/app.hpp"
#include "client/client.hpp"
#include "core/digest.hpp"
#include "engine/replica.hpp"
#include "engine/trace.hpp"
#include "ndcontrol/postnd.hpp"

#include "engine_harness.hpp"

using namespace ndbft;

namespace {

const engine::Slot& slot_of(const Harness& h, SeqNum seq) {
    const engine::Slot* s = h.rep->find_slot(seq);
    REQUIRE(s != nullptr);
    return *s;
}

bool has_suspicion(const Harness& h, SeqNum seq, engine::Suspicion r) {
    for (const auto& e : h.rep->suspicions())
        if (e.seq == seq && e.reason == r) return true;
    return false;
}

} // namespace

TEST_CASE("backup quorum thresholds are exactly 2f non-self votes") {
    // Every f the acceptance matrix uses, plus the off-by-one checks: with
    // 2f-1 matching votes nothing advances, the 2f-th vote advances.
    for (uint32_t f : {1u, 2u, 3u}) {
        CAPTURE(f);
        Harness h(f, /*id=*/1, /*mask=*/0);
        const uint32_t n = h.cfg.n();

        Crafted c = craft_pre_prepare(h, 1, to_bytes("op-quorum"));
        h.rep->on_message(c.pre_prepare);
        REQUIRE(slot_of(h, 1).phase == engine::Phase::kPrePrepared);

        // The backup prepared itself: one PREPARE to each other replica.
        auto prepares = h.svc.of_type(MsgType::kPrepare);
        REQUIRE(prepares.size() == n - 1);
        const Digest nd = prepares[0].as<PrepareBody>().nd_digest;
        CHECK(nd == expected_cert_digest(c.payload));

        Digest wrong = nd;
        wrong.bytes[0] ^= 1;

        // Votes from the primary never count toward the prepare quorum.
        h.rep->on_message(vote(h, MsgType::kPrepare, h.cfg.primary(), 1, c.req_digest, nd));
        CHECK(slot_of(h, 1).phase == engine::Phase::kPrePrepared);
        // A vote with the wrong nd digest never counts. Each sender's first
        // vote is the one that sticks, so this uses a spare backup.
        if (f >= 2)
            h.rep->on_message(
                vote(h, MsgType::kPrepare, 2 * f + 2, 1, c.req_digest, wrong));

        // Matching votes from backups 2..2f+1, the first of them duplicated.
        h.rep->on_message(vote(h, MsgType::kPrepare, 2, 1, c.req_digest, nd));
        h.rep->on_message(vote(h, MsgType::kPrepare, 2, 1, c.req_digest, nd));
        for (uint32_t s = 3; s <= 2 * f; ++s)
            h.rep->on_message(vote(h, MsgType::kPrepare, s, 1, c.req_digest, nd));
        CHECK(slot_of(h, 1).phase == engine::Phase::kPrePrepared);  // 2f-1 so far
        CHECK(h.svc.count_type(MsgType::kCommit) == 0);

        h.rep->on_message(vote(h, MsgType::kPrepare, 2 * f + 1, 1, c.req_digest, nd));
        CHECK(slot_of(h, 1).phase == engine::Phase::kPrepared);
        CHECK(h.svc.count_type(MsgType::kCommit) == n - 1);

        // Commits: the primary's vote does count here; a wrong-digest vote
        // from backup 2f+1 still never does.
        h.rep->on_message(vote(h, MsgType::kCommit, 2 * f + 1, 1, c.req_digest, wrong));
        h.rep->on_message(vote(h, MsgType::kCommit, h.cfg.primary(), 1, c.req_digest, nd));
        for (uint32_t s = 2; s <= 2 * f - 1; ++s)
            h.rep->on_message(vote(h, MsgType::kCommit, s, 1, c.req_digest, nd));
        CHECK(slot_of(h, 1).phase == engine::Phase::kPrepared);  // 2f-1 so far
        h.rep->on_message(vote(h, MsgType::kCommit, 2 * f, 1, c.req_digest, nd));
        CHECK(slot_of(h, 1).phase == engine::Phase::kDelivered);
        CHECK(h.rep->last_delivered() == 1);
        auto replies = h.svc.of_type(MsgType::kReply);
        REQUIRE(replies.size() == 1);
        CHECK(replies[0].as<ReplyBody>().request_id == 1);
        CHECK(h.rep->suspicions().empty());
    }
}

TEST_CASE("f=0 single replica delivers immediately") {
    Harness h(0, 0, 0);
    h.rep->on_message(client_request(h, 1, 1, to_bytes("solo")));
    CHECK(h.rep->last_delivered() == 1);
    CHECK(h.svc.count_type(MsgType::kReply) == 1);
}

TEST_CASE("primary orders requests and reaches quorum from backup votes") {
    Harness h(1, /*id=*/0, 0);
    h.rep->on_message(client_request(h, 5, 1, to_bytes("primary-path")));

    auto pps = h.svc.of_type(MsgType::kPrePrepare);
    REQUIRE(pps.size() == 3);  // one per backup
    const auto& body = pps[0].as<PrePrepareBody>();
    const Digest rd = sha256(body.request_wire);
    const Digest nd = expected_cert_digest(body.pre_payload);
    CHECK(slot_of(h, 1).phase == engine::Phase::kPrePrepared);

    // The primary sends no PREPARE of its own.
    CHECK(h.svc.count_type(MsgType::kPrepare) == 0);

    h.rep->on_message(vote(h, MsgType::kPrepare, 1, 1, rd, nd));
    CHECK(slot_of(h, 1).phase == engine::Phase::kPrePrepared);
    h.rep->on_message(vote(h, MsgType::kPrepare, 2, 1, rd, nd));
    CHECK(slot_of(h, 1).phase == engine::Phase::kPrepared);
    CHECK(h.svc.count_type(MsgType::kCommit) == 3);

    h.rep->on_message(vote(h, MsgType::kCommit, 1, 1, rd, nd));
    h.rep->on_message(vote(h, MsgType::kCommit, 2, 1, rd, nd));
    CHECK(h.rep->last_delivered() == 1);

    auto replies = h.svc.of_type(MsgType::kReply);
    REQUIRE(replies.size() == 1);
    CHECK(replies[0].as<ReplyBody>().client == 5);

    // A retransmitted request after delivery is answered from the cache.
    h.svc.sent.clear();
    h.rep->on_message(client_request(h, 5, 1, to_bytes("primary-path")));
    CHECK(h.svc.count_type(MsgType::kReply) == 1);
    CHECK(h.svc.count_type(MsgType::kPrePrepare) == 0);
}

TEST_CASE("conflicting pre-prepares raise one BAD_ORDER suspicion and keep the first") {
    Harness h(1, 1, 0);
    Crafted a = craft_pre_prepare(h, 1, to_bytes("first"), 1, 1);
    Crafted b = craft_pre_prepare(h, 1, to_bytes("second"), 2, 1);
    h.rep->on_message(a.pre_prepare);
    h.rep->on_message(b.pre_prepare);
    CHECK(has_suspicion(h, 1, engine::Suspicion::kBadOrder));
    CHECK(slot_of(h, 1).req_digest == a.req_digest);

    // Same equivocation again: still a single suspicion event.
    Crafted c = craft_pre_prepare(h, 1, to_bytes("third"), 3, 1);
    h.rep->on_message(c.pre_prepare);
    CHECK(h.rep->suspicions().size() == 1);
}

TEST_CASE("buffering horizon bounds accepted sequence numbers") {
    Harness h(1, 1, 0);
    Crafted far = craft_pre_prepare(h, h.cfg.buffer_horizon + 1, to_bytes("beyond"));
    h.rep->on_message(far.pre_prepare);
    CHECK(h.rep->find_slot(h.cfg.buffer_horizon + 1) == nullptr);
    CHECK(h.svc.count_type(MsgType::kPrepare) == 0);

    Harness h2(1, 1, 0);
    Crafted edge = craft_pre_prepare(h2, h2.cfg.buffer_horizon, to_bytes("edge"));
    h2.rep->on_message(edge.pre_prepare);
    CHECK(h2.rep->find_slot(h2.cfg.buffer_horizon) != nullptr);
}

TEST_CASE("votes arriving before the pre-prepare are counted afterwards") {
    Harness h(1, 1, 0);
    Crafted c = craft_pre_prepare(h, 1, to_bytes("early-votes"));
    const Digest nd = expected_cert_digest(c.payload);
    h.rep->on_message(vote(h, MsgType::kPrepare, 2, 1, c.req_digest, nd));
    h.rep->on_message(vote(h, MsgType::kPrepare, 3, 1, c.req_digest, nd));
    h.rep->on_message(vote(h, MsgType::kCommit, 0, 1, c.req_digest, nd));
    h.rep->on_message(vote(h, MsgType::kCommit, 2, 1, c.req_digest, nd));
    CHECK(h.rep->find_slot(1)->phase == engine::Phase::kEmpty);

    h.rep->on_message(c.pre_prepare);
    CHECK(slot_of(h, 1).phase == engine::Phase::kDelivered);
}

TEST_CASE("NPRE backup: contribution, decision verification, prepare") {
    Harness h(1, 1, kNdNpre);
    Crafted c = craft_pre_prepare(h, 1, to_bytes("lottery-ish"));
    const Bytes primary_share = *c.payload.find(kNdNpre);
    h.rep->on_message(c.pre_prepare);

    // Contribution goes to the primary only (unoptimized), and no PREPARE
    // can exist before the decision.
    auto contribs = h.svc.of_type(MsgType::kPpuContrib);
    REQUIRE(contribs.size() == 1);
    CHECK(h.svc.sent.back().dst == h.cfg.primary());
    CHECK(h.svc.count_type(MsgType::kPrepare) == 0);

    auto entry_for = [&](ReplicaId p, const Bytes& share) {
        NdShare e;
        e.proposer = p;
        e.value = share;
        e.tag = h.keys.make(h.cfg.share_auth_mode, p,
                            contrib_sign_bytes(h.cfg.view, 1, h.cfg.epoch, p,
                                               c.req_digest, share));
        return e;
    };
    const Bytes s2 = to_bytes("share-two");
    const Bytes s3 = to_bytes("share-three");
    std::vector<NdShare> entries{entry_for(0, primary_share), entry_for(2, s2),
                                 entry_for(3, s3)};

    SUBCASE("valid decision resolves and prepares") {
        ProtocolMessage dec;
        dec.type = MsgType::kPpuDecision;
        dec.header = MsgHeader{h.cfg.view, 1, h.cfg.primary(), h.cfg.epoch};
        dec.body = PpuDecisionBody{c.req_digest, false, entries};
        seal(dec, h.keys, h.cfg.auth_mode);
        h.rep->on_message(dec);

        auto prepares = h.svc.of_type(MsgType::kPrepare);
        REQUIRE(prepares.size() == 3);
        NdPayload resolved = c.payload;
        resolved.set(kNdNpre, encode_decision_values(
                                  {{0, primary_share}, {2, s2}, {3, s3}}));
        CHECK(prepares[0].as<PrepareBody>().nd_digest ==
              expected_cert_digest(resolved));
        CHECK(h.rep->suspicions().empty());
    }

    SUBCASE("forged entry is rejected") {
        entries[2].value = to_bytes("not-what-three-signed");
        ProtocolMessage dec;
        dec.type = MsgType::kPpuDecision;
        dec.header = MsgHeader{h.cfg.view, 1, h.cfg.primary(), h.cfg.epoch};
        dec.body = PpuDecisionBody{c.req_digest, false, entries};
        seal(dec, h.keys, h.cfg.auth_mode);
        h.rep->on_message(dec);
        CHECK(has_suspicion(h, 1, engine::Suspicion::kNdValueRejected));
        CHECK(h.svc.count_type(MsgType::kPrepare) == 0);
    }

    SUBCASE("decision contradicting the pre-prepare share is rejected") {
        entries[0] = entry_for(0, to_bytes("some-other-share"));
        ProtocolMessage dec;
        dec.type = MsgType::kPpuDecision;
        dec.header = MsgHeader{h.cfg.view, 1, h.cfg.primary(), h.cfg.epoch};
        dec.body = PpuDecisionBody{c.req_digest, false, entries};
        seal(dec, h.keys, h.cfg.auth_mode);
        h.rep->on_message(dec);
        CHECK(has_suspicion(h, 1, engine::Suspicion::kNdValueRejected));
    }

    SUBCASE("decision without the primary is rejected") {
        std::vector<NdShare> no_primary{entry_for(1, to_bytes("x")), entries[1],
                                        entries[2]};
        ProtocolMessage dec;
        dec.type = MsgType::kPpuDecision;
        dec.header = MsgHeader{h.cfg.view, 1, h.cfg.primary(), h.cfg.epoch};
        dec.body = PpuDecisionBody{c.req_digest, false, no_primary};
        seal(dec, h.keys, h.cfg.auth_mode);
        h.rep->on_message(dec);
        CHECK(has_suspicion(h, 1, engine::Suspicion::kNdValueRejected));
    }
}

TEST_CASE("NPRE primary: decides after 2f contributions") {
    Harness h(1, 0, kNdNpre);
    h.rep->on_message(client_request(h, 1, 1, to_bytes("decide-me")));
    auto pps = h.svc.of_type(MsgType::kPrePrepare);
    REQUIRE(pps.size() == 3);
    const auto& body = pps[0].as<PrePrepareBody>();
    const Digest rd = sha256(body.request_wire);

    auto contrib_from = [&](ReplicaId p, const Bytes& share) {
        ProtocolMessage m;
        m.type = MsgType::kPpuContrib;
        m.header = MsgHeader{h.cfg.view, 1, p, h.cfg.epoch};
        m.body = PpuContribBody{rd, share};
        seal(m, h.keys, h.cfg.share_auth_mode);
        return m;
    };

    h.rep->on_message(contrib_from(3, to_bytes("3s")));
    CHECK(h.svc.count_type(MsgType::kPpuDecision) == 0);  // 2f-1 so far
    h.rep->on_message(contrib_from(2, to_bytes("2s")));
    auto decs = h.svc.of_type(MsgType::kPpuDecision);
    REQUIRE(decs.size() == 3);

    const auto& db = decs[0].as<PpuDecisionBody>();
    CHECK_FALSE(db.values_are_digests);
    REQUIRE(db.entries.size() == 3);
    CHECK(db.entries[0].proposer == 0);
    CHECK(db.entries[1].proposer == 2);
    CHECK(db.entries[2].proposer == 3);
    CHECK(db.entries[0].value == *body.pre_payload.find(kNdNpre));
}

TEST_CASE("NPOST backup: standalone post-commit agreement gates delivery") {
    Harness h(1, 1, kNdNpost);
    Crafted c = craft_pre_prepare(h, 1, to_bytes("post-run"));
    h.rep->on_message(c.pre_prepare);
    auto prepares = h.svc.of_type(MsgType::kPrepare);
    REQUIRE(prepares.size() == 3);
    const Digest nd = prepares[0].as<PrepareBody>().nd_digest;

    h.rep->on_message(vote(h, MsgType::kPrepare, 2, 1, c.req_digest, nd));
    h.rep->on_message(vote(h, MsgType::kPrepare, 3, 1, c.req_digest, nd));
    h.rep->on_message(vote(h, MsgType::kCommit, 0, 1, c.req_digest, nd));
    h.rep->on_message(vote(h, MsgType::kCommit, 2, 1, c.req_digest, nd));

    // Committed but the postnd entry is missing: delivery must stall.
    CHECK(slot_of(h, 1).phase == engine::Phase::kNdPending);
    CHECK(h.rep->last_delivered() == 0);

    // What an honest primary would have recorded and replied.
    app::AppRequest areq{h.cfg.view, 1, c.req_digest, ByteView(slot_of(h, 1).request.op)};
    app::ExecResult primary_run = h.oracle->execute(areq, c.payload);
    REQUIRE(primary_run.outcome == app::ExecOutcome::kOk);
    PostndWire entry{1, primary_run.recorded, sha256(primary_run.result)};
    const Digest pd = ndc::postnd_digest(entry);

    SUBCASE("agreement completes and the replay matches") {
        ProtocolMessage pcp;
        pcp.type = MsgType::kPostcPrePrepare;
        pcp.header = MsgHeader{h.cfg.view, 1, h.cfg.primary(), h.cfg.epoch};
        pcp.body = PostcPrePrepareBody{entry};
        seal(pcp, h.keys, h.cfg.auth_mode);
        h.rep->on_message(pcp);
        CHECK(h.svc.count_type(MsgType::kPostcPrepare) == 3);
        CHECK(h.svc.count_type(MsgType::kPostcCommit) == 0);

        h.rep->on_message(postc_vote(h, MsgType::kPostcPrepare, 2, 1, pd));
        CHECK(h.svc.count_type(MsgType::kPostcCommit) == 0);  // 2f-1
        h.rep->on_message(postc_vote(h, MsgType::kPostcPrepare, 3, 1, pd));
        CHECK(h.svc.count_type(MsgType::kPostcCommit) == 3);
        CHECK(h.rep->last_delivered() == 0);  // commits still outstanding

        h.rep->on_message(postc_vote(h, MsgType::kPostcCommit, 0, 1, pd));
        h.rep->on_message(postc_vote(h, MsgType::kPostcCommit, 2, 1, pd));
        CHECK(h.rep->last_delivered() == 1);
        CHECK(h.rep->suspicions().empty());
        auto replies = h.svc.of_type(MsgType::kReply);
        REQUIRE(replies.size() == 1);
        CHECK(sha256(replies[0].as<ReplyBody>().result) == entry.reply_digest);
    }

    SUBCASE("recorded reply digest that disagrees with the replay is flagged") {
        entry.reply_digest.bytes[0] ^= 0xff;
        ProtocolMessage pcp;
        pcp.type = MsgType::kPostcPrePrepare;
        pcp.header = MsgHeader{h.cfg.view, 1, h.cfg.primary(), h.cfg.epoch};
        pcp.body = PostcPrePrepareBody{entry};
        seal(pcp, h.keys, h.cfg.auth_mode);
        h.rep->on_message(pcp);
        const Digest pd2 = ndc::postnd_digest(entry);
        h.rep->on_message(postc_vote(h, MsgType::kPostcPrepare, 2, 1, pd2));
        h.rep->on_message(postc_vote(h, MsgType::kPostcPrepare, 3, 1, pd2));
        h.rep->on_message(postc_vote(h, MsgType::kPostcCommit, 0, 1, pd2));
        h.rep->on_message(postc_vote(h, MsgType::kPostcCommit, 2, 1, pd2));

        CHECK(h.rep->last_delivered() == 1);
        CHECK(has_suspicion(h, 1, engine::Suspicion::kReplyDigestMismatch));
        CHECK(h.svc.count_type(MsgType::kReply) == 1);  // reply still goes out
    }
}

TEST_CASE("VPOST backup rejects a tampered verifiable post value") {
    Harness h(1, 1, kNdVpost);
    Crafted c = craft_pre_prepare(h, 1, to_bytes("vpost-run"));
    h.rep->on_message(c.pre_prepare);

    app::AppRequest areq{h.cfg.view, 1, c.req_digest, ByteView(slot_of(h, 1).request.op)};
    app::ExecResult primary_run = h.oracle->execute(areq, c.payload);
    PostndWire entry{1, primary_run.recorded, sha256(primary_run.result)};
    Bytes tampered = *entry.values.find(kNdVpost);
    tampered[0] ^= 1;
    entry.values.set(kNdVpost, tampered);

    ProtocolMessage pcp;
    pcp.type = MsgType::kPostcPrePrepare;
    pcp.header = MsgHeader{h.cfg.view, 1, h.cfg.primary(), h.cfg.epoch};
    pcp.body = PostcPrePrepareBody{entry};
    seal(pcp, h.keys, h.cfg.auth_mode);
    h.rep->on_message(pcp);

    CHECK(has_suspicion(h, 1, engine::Suspicion::kNdValueRejected));
    CHECK(h.svc.count_type(MsgType::kPostcPrepare) == 0);  // no participation
}

TEST_CASE("wrong declared mask raises ND_TYPE_MISMATCH") {
    Harness h(1, 1, kNdVpre);
    // The app expects VPRE; declare a bare mask and ship no values.
    ProtocolMessage reqm = client_request(h, 1, 1, to_bytes("typed"));
    ProtocolMessage pp;
    pp.type = MsgType::kPrePrepare;
    pp.header = MsgHeader{h.cfg.view, 1, h.cfg.primary(), h.cfg.epoch};
    pp.body = PrePrepareBody{encode(reqm), 0, {}, {}};
    seal(pp, h.keys, h.cfg.auth_mode);
    h.rep->on_message(pp);
    CHECK(has_suspicion(h, 1, engine::Suspicion::kNdTypeMismatch));
}

TEST_CASE("tampered VPRE value raises ND_VALUE_REJECTED") {
    Harness h(1, 1, kNdVpre);
    Crafted c = craft_pre_prepare(h, 1, to_bytes("verifiable"));
    Bytes bad = *c.payload.find(kNdVpre);
    bad[0] ^= 1;
    NdPayload tampered = c.payload;
    tampered.set(kNdVpre, bad);
    ProtocolMessage pp = c.pre_prepare;
    pp.as<PrePrepareBody>().pre_payload = tampered;
    seal(pp, h.keys, h.cfg.auth_mode);
    h.rep->on_message(pp);
    CHECK(has_suspicion(h, 1, engine::Suspicion::kNdValueRejected));
    CHECK(h.svc.count_type(MsgType::kPrepare) == 0);
}

TEST_CASE("null requests: accepted when sealed by the primary, rejected otherwise") {
    Harness h(1, 1, 0, /*optimized=*/true);

    SUBCASE("well-formed null request delivers without a reply") {
        ProtocolMessage reqm = make_null_request(h.cfg.primary(), 1, h.cfg.epoch);
        seal(reqm, h.keys, h.cfg.auth_mode);
        ProtocolMessage pp;
        pp.type = MsgType::kPrePrepare;
        pp.header = MsgHeader{h.cfg.view, 1, h.cfg.primary(), h.cfg.epoch};
        pp.body = PrePrepareBody{encode(reqm), 0, {}, {}};
        seal(pp, h.keys, h.cfg.auth_mode);
        h.rep->on_message(pp);
        REQUIRE(h.rep->find_slot(1) != nullptr);
        CHECK(slot_of(h, 1).is_null);

        const Digest rd = slot_of(h, 1).req_digest;
        const Digest nd = expected_cert_digest({});
        h.rep->on_message(vote(h, MsgType::kPrepare, 2, 1, rd, nd));
        h.rep->on_message(vote(h, MsgType::kPrepare, 3, 1, rd, nd));
        h.rep->on_message(vote(h, MsgType::kCommit, 0, 1, rd, nd));
        h.rep->on_message(vote(h, MsgType::kCommit, 2, 1, rd, nd));
        CHECK(h.rep->last_delivered() == 1);
        CHECK(h.svc.count_type(MsgType::kReply) == 0);
        CHECK(h.rep->counters().null_requests == 1);
    }

    SUBCASE("null request with a nonzero mask is BAD_ORDER") {
        ProtocolMessage reqm = make_null_request(h.cfg.primary(), 1, h.cfg.epoch);
        seal(reqm, h.keys, h.cfg.auth_mode);
        ProtocolMessage pp;
        pp.type = MsgType::kPrePrepare;
        pp.header = MsgHeader{h.cfg.view, 1, h.cfg.primary(), h.cfg.epoch};
        pp.body = PrePrepareBody{encode(reqm), kNdNpost, {}, {}};
        seal(pp, h.keys, h.cfg.auth_mode);
        h.rep->on_message(pp);
        CHECK(has_suspicion(h, 1, engine::Suspicion::kBadOrder));
    }

    SUBCASE("null request sealed by a backup is BAD_ORDER") {
        ProtocolMessage reqm = make_null_request(2, 1, h.cfg.epoch);
        seal(reqm, h.keys, h.cfg.auth_mode);
        ProtocolMessage pp;
        pp.type = MsgType::kPrePrepare;
        pp.header = MsgHeader{h.cfg.view, 1, h.cfg.primary(), h.cfg.epoch};
        pp.body = PrePrepareBody{encode(reqm), 0, {}, {}};
        seal(pp, h.keys, h.cfg.auth_mode);
        h.rep->on_message(pp);
        CHECK(has_suspicion(h, 1, engine::Suspicion::kBadOrder));
    }
}

TEST_CASE("retry timer re-emits the lowest in-flight slot's votes") {
    Harness h(1, 1, 0);
    Crafted c = craft_pre_prepare(h, 1, to_bytes("retry-me"));
    h.rep->on_message(c.pre_prepare);
    REQUIRE(h.svc.count_type(MsgType::kPrepare) == 3);
    REQUIRE_FALSE(h.svc.timers.empty());

    uint64_t retry_token = 0;
    for (const auto& t : h.svc.timers)
        if (engine::timer_kind(t.token) == engine::TimerKind::kRetry)
            retry_token = t.token;
    h.svc.now += h.cfg.retry_base_us;
    h.rep->on_timer(retry_token);
    CHECK(h.svc.count_type(MsgType::kPrepare) == 6);  // re-multicast once
}

TEST_CASE("suspicion events deduplicate per sequence and reason") {
    Harness h(1, 1, kNdVpre);
    Crafted c = craft_pre_prepare(h, 1, to_bytes("dup-sus"));
    Bytes bad = *c.payload.find(kNdVpre);
    bad[0] ^= 1;
    NdPayload tampered = c.payload;
    tampered.set(kNdVpre, bad);
    ProtocolMessage pp = c.pre_prepare;
    pp.as<PrePrepareBody>().pre_payload = tampered;
    seal(pp, h.keys, h.cfg.auth_mode);
    h.rep->on_message(pp);
    h.rep->on_message(pp);
    h.rep->on_message(pp);
    CHECK(h.rep->suspicions().size() == 1);
}

TEST_CASE("client completes on f+1 matching replies and not before") {
    ProtocolConfig cfg = make_cfg(1, false);
    KeyStore keys(to_bytes("engine-test-seed"), cfg.n());
    MockServices svc;
    client::Client cl(cfg, 9, &keys, &svc);

    uint64_t done_rid = 0;
    Bytes done_result;
    cl.on_complete = [&](uint64_t rid, const Bytes& res) {
        done_rid = rid;
        done_result = res;
    };

    cl.invoke(to_bytes("ping"));
    CHECK(cl.busy());
    REQUIRE(svc.sent.size() == 1);
    CHECK(svc.sent[0].dst == cfg.primary());

    auto reply_from = [&](ReplicaId r, const Bytes& result) {
        ProtocolMessage m;
        m.type = MsgType::kReply;
        m.header = MsgHeader{cfg.view, 1, r, cfg.epoch};
        m.body = ReplyBody{9, 1, result, sha256(result)};
        seal_for_client(m, keys, cl.node());
        return m;
    };

    // One matching reply plus one diverging reply: not enough.
    cl.on_message(reply_from(0, to_bytes("answer")));
    cl.on_message(reply_from(1, to_bytes("other")));
    CHECK(cl.busy());
    // Same replica repeating itself never completes a quorum.
    cl.on_message(reply_from(0, to_bytes("answer")));
    CHECK(cl.busy());
    // A second distinct replica matching: f+1 reached.
    cl.on_message(reply_from(2, to_bytes("answer")));
    CHECK_FALSE(cl.busy());
    CHECK(cl.completed() == 1);
    CHECK(done_rid == 1);
    CHECK(done_result == to_bytes("answer"));
    CHECK(cl.latencies_us().size() == 1);
}

TEST_CASE("client retransmits with doubling and fails at the deadline") {
    ProtocolConfig cfg = make_cfg(1, false);
    KeyStore keys(to_bytes("engine-test-seed"), cfg.n());
    MockServices svc;
    client::Client cl(cfg, 3, &keys, &svc);
    cl.invoke(to_bytes("slow"));

    REQUIRE(svc.timers.size() == 1);
    CHECK(svc.timers[0].deadline == cfg.client_retry_us);

    svc.now = cfg.client_retry_us;
    cl.on_timer(svc.timers[0].token);
    CHECK(svc.sent.size() == 1 + cfg.n());  // broadcast
    REQUIRE(svc.timers.size() == 2);
    CHECK(svc.timers[1].deadline == svc.now + 2 * cfg.client_retry_us);

    svc.now = cfg.client_deadline_us;
    cl.on_timer(svc.timers[1].token);
    CHECK_FALSE(cl.busy());
    CHECK(cl.failed() == 1);
    CHECK(cl.completed() == 0);
}

TEST_CASE("trace lines parse back into records") {
    engine::TraceRecord rec;
    REQUIRE(engine::parse_trace_line("D|r=2|s=17|mask=9", rec));
    CHECK(rec.kind == 'D');
    CHECK(rec.num("r") == 2);
    CHECK(rec.num("s") == 17);
    CHECK(rec.num("mask") == 9);
    CHECK_FALSE(engine::parse_trace_line("", rec));
    CHECK_FALSE(engine::parse_trace_line("D|broken", rec));
}
