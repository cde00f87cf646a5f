#pragma once

#include <optional>
#include <vector>

#include "core/auth.hpp"
#include "core/bytes.hpp"
#include "core/types.hpp"

namespace ndbft {

// Per-class segments of nondeterministic bytes. Segments are kept sorted by
// class bit and there is at most one segment per class; both properties are
// enforced on decode so the encoding stays canonical.
struct NdPayload {
    struct Segment {
        uint8_t class_bit = 0;
        Bytes data;
        bool operator==(const Segment&) const = default;
    };
    std::vector<Segment> segments;

    bool operator==(const NdPayload&) const = default;

    bool empty() const { return segments.empty(); }

    NdTypeMask classes() const {
        NdTypeMask m = 0;
        for (const auto& s : segments) m |= s.class_bit;
        return m;
    }

    const Bytes* find(NdClass c) const {
        for (const auto& s : segments)
            if (s.class_bit == c) return &s.data;
        return nullptr;
    }

    // Inserts or replaces the segment for `c`, keeping sort order.
    void set(NdClass c, Bytes data);

    // Segments restricted to the given classes.
    NdPayload filtered(NdTypeMask keep) const;

    void encode(ByteWriter& w) const;
    static NdPayload decode(ByteReader& r);
};

// One proposer's entry in an NPRE decision set. `value` holds the full share
// bytes, or its 32-byte digest when the decision was disseminated in digest
// form. `tag` is the proposer's own authentication over its contribution
// message, so any replica can verify the share's origin.
struct NdShare {
    ReplicaId proposer = 0;
    bool is_digest = false;
    Bytes value;
    AuthTag tag;

    bool operator==(const NdShare&) const = default;

    void encode(ByteWriter& w) const;
    static NdShare decode(ByteReader& r);
};

// Post-determined values plus the reply digest for one sequence number, in
// the form disseminated to backups (standalone post-commit round or
// piggybacked on a later PRE_PREPARE).
struct PostndWire {
    SeqNum seq = 0;
    NdPayload values;
    Digest reply_digest;

    bool operator==(const PostndWire&) const = default;

    void encode(ByteWriter& w) const;
    static PostndWire decode(ByteReader& r);
};

void encode_auth(ByteWriter& w, const AuthTag& tag);
AuthTag decode_auth(ByteReader& r);

void encode_digest(ByteWriter& w, const Digest& d);
Digest decode_digest(ByteReader& r);

// Canonical encoding of a full-value decision set (proposer-ascending),
// hashed to form the nd digest carried by PREPARE/COMMIT for NPRE slots.
// This is also the byte form delivered to the application's execute upcall.
Bytes encode_decision_values(const std::vector<std::pair<ReplicaId, Bytes>>& values);
std::vector<std::pair<ReplicaId, Bytes>> decode_decision_values(ByteView wire);

}  // namespace ndbft
