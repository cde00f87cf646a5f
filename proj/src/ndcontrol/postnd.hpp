#pragma once

#include "core/digest.hpp"
#include "core/nd.hpp"

namespace ndbft::ndc {

enum class PostndStatus : uint8_t {
    kRecorded,     // produced by the primary's execution, not yet shipped
    kInAgreement,  // agreement rounds running (standalone or piggybacked)
    kAgreed,       // quorum reached; delivery gate may open
};

// One postnd log entry: the post-determined values a primary execution
// recorded for a sequence number, plus the digest of the reply it produced
// in that same execution.
struct PostndEntry {
    PostndWire wire;
    PostndStatus status = PostndStatus::kRecorded;
    bool piggybacked = false;  // how it was disseminated, for metrics

    bool operator==(const PostndEntry&) const = default;
};

inline Digest postnd_digest(const PostndWire& w) {
    ByteWriter bw;
    w.encode(bw);
    return sha256(bw.bytes());
}

}  // namespace ndbft::ndc
