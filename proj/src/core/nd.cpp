#include "core/nd.hpp"

#include <algorithm>

namespace ndbft {

void NdPayload::set(NdClass c, Bytes data) {
    for (auto& s : segments) {
        if (s.class_bit == c) {
            s.data = std::move(data);
            return;
        }
    }
    segments.push_back({uint8_t(c), std::move(data)});
    std::sort(segments.begin(), segments.end(),
              [](const Segment& a, const Segment& b) { return a.class_bit < b.class_bit; });
}

NdPayload NdPayload::filtered(NdTypeMask keep) const {
    NdPayload out;
    for (const auto& s : segments)
        if (s.class_bit & keep) out.segments.push_back(s);
    return out;
}

void NdPayload::encode(ByteWriter& w) const {
    w.u32(uint32_t(segments.size()));
    for (const auto& s : segments) {
        w.u8(s.class_bit);
        w.blob(s.data);
    }
}

NdPayload NdPayload::decode(ByteReader& r) {
    NdPayload p;
    uint32_t n = r.count(4);
    uint8_t prev = 0;
    for (uint32_t i = 0; i < n; i++) {
        Segment s;
        s.class_bit = r.u8();
        if (!mask_valid(s.class_bit) || s.class_bit == 0)
            r.fail("invalid nd segment class");
        if ((s.class_bit & (s.class_bit - 1)) != 0)
            r.fail("nd segment class must be a single bit");
        if (i > 0 && s.class_bit <= prev)
            r.fail("nd segments out of order or duplicated");
        prev = s.class_bit;
        s.data = r.blob();
        p.segments.push_back(std::move(s));
    }
    return p;
}

void NdShare::encode(ByteWriter& w) const {
    w.u32(proposer);
    w.u8(is_digest ? 1 : 0);
    w.blob(value);
    encode_auth(w, tag);
}

NdShare NdShare::decode(ByteReader& r) {
    NdShare s;
    s.proposer = r.u32();
    uint8_t flag = r.u8();
    if (flag > 1) r.fail("invalid share digest flag");
    s.is_digest = flag == 1;
    s.value = r.blob();
    if (s.is_digest && s.value.size() != 32) r.fail("share digest must be 32 bytes");
    s.tag = decode_auth(r);
    return s;
}

void PostndWire::encode(ByteWriter& w) const {
    w.u64(seq);
    values.encode(w);
    encode_digest(w, reply_digest);
}

PostndWire PostndWire::decode(ByteReader& r) {
    PostndWire p;
    p.seq = r.u64();
    p.values = NdPayload::decode(r);
    p.reply_digest = decode_digest(r);
    return p;
}

void encode_auth(ByteWriter& w, const AuthTag& tag) {
    w.u8(uint8_t(tag.mode));
    if (tag.mode == AuthMode::kAuthenticator) {
        w.u32(uint32_t(tag.macs.size()));
        for (const auto& m : tag.macs) w.raw(ByteView(m.data(), m.size()));
    } else {
        w.raw(ByteView(tag.sig.data(), tag.sig.size()));
    }
}

AuthTag decode_auth(ByteReader& r) {
    AuthTag tag;
    uint8_t mode = r.u8();
    if (mode > 1) r.fail("invalid auth mode");
    tag.mode = AuthMode(mode);
    if (tag.mode == AuthMode::kAuthenticator) {
        uint32_t n = r.count(1024);
        tag.macs.resize(n);
        for (auto& m : tag.macs) r.raw(m.data(), m.size());
    } else {
        r.raw(tag.sig.data(), tag.sig.size());
    }
    return tag;
}

void encode_digest(ByteWriter& w, const Digest& d) {
    w.raw(ByteView(d.bytes.data(), d.bytes.size()));
}

Digest decode_digest(ByteReader& r) {
    Digest d;
    r.raw(d.bytes.data(), d.bytes.size());
    return d;
}

Bytes encode_decision_values(const std::vector<std::pair<ReplicaId, Bytes>>& values) {
    ByteWriter w;
    w.u32(uint32_t(values.size()));
    for (const auto& [id, v] : values) {
        w.u32(id);
        w.blob(v);
    }
    return w.take();
}

std::vector<std::pair<ReplicaId, Bytes>> decode_decision_values(ByteView wire) {
    ByteReader r(wire);
    uint32_t n = r.count(1024);
    std::vector<std::pair<ReplicaId, Bytes>> out;
    out.reserve(n);
    for (uint32_t i = 0; i < n; i++) {
        ReplicaId id = r.u32();
        out.emplace_back(id, r.blob());
    }
    r.expect_done();
    return out;
}

}  // namespace ndbft
