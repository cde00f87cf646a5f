#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

#include "core/bytes.hpp"

namespace ndbft {

using ReplicaId = uint32_t;
using ClientId = uint64_t;
using ViewNum = uint64_t;
using SeqNum = uint64_t;  // 1-based; 0 means "none"

// Node ids shared by the protocol header and the simulated network.
// Replicas occupy [0, n); clients start at kClientBase.
using NodeId = uint64_t;
constexpr NodeId kClientBase = 1'000'000;

// Reserved client id for primary-generated null requests (postnd flush).
constexpr ClientId kNullClient = ~ClientId(0);

constexpr uint32_t replica_count(uint32_t f) { return 3 * f + 1; }
constexpr ReplicaId primary_of(ViewNum v, uint32_t n) { return ReplicaId(v % n); }

inline NodeId client_node(ClientId c) { return kClientBase + c; }
inline bool is_client_node(NodeId id) { return id >= kClientBase; }
inline ClientId client_of_node(NodeId id) { return id - kClientBase; }

struct Digest {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    std::string hex() const {
        static const char* k = "0123456789abcdef";
        std::string s;
        s.reserve(64);
        for (uint8_t b : bytes) {
            s.push_back(k[b >> 4]);
            s.push_back(k[b & 0xf]);
        }
        return s;
    }

    // Short form for trace lines and log output.
    std::string hex8() const { return hex().substr(0, 8); }

    bool is_zero() const {
        for (uint8_t b : bytes)
            if (b) return false;
        return true;
    }
};

// Nondeterminism classes. A request's mask is the OR of the classes its
// execution involves; 0 marks a fully deterministic request.
enum NdClass : uint8_t {
    kNdVpre = 1 << 0,   // verifiable pre-determinable
    kNdNpre = 1 << 1,   // non-verifiable pre-determinable
    kNdVpost = 1 << 2,  // verifiable post-determinable
    kNdNpost = 1 << 3,  // non-verifiable post-determinable
};

using NdTypeMask = uint8_t;

constexpr NdTypeMask kNdMaskAll = kNdVpre | kNdNpre | kNdVpost | kNdNpost;

constexpr bool mask_valid(NdTypeMask m) { return (m & ~kNdMaskAll) == 0; }
constexpr bool mask_has(NdTypeMask m, NdClass c) { return (m & c) != 0; }
constexpr NdTypeMask pre_classes(NdTypeMask m) { return m & (kNdVpre | kNdNpre); }
constexpr NdTypeMask post_classes(NdTypeMask m) { return m & (kNdVpost | kNdNpost); }
constexpr bool mask_pre(NdTypeMask m) { return pre_classes(m) != 0; }
constexpr bool mask_post(NdTypeMask m) { return post_classes(m) != 0; }

std::string mask_name(NdTypeMask m);
// Parses "0", "VPRE", "NPRE|NPOST", ... Throws std::invalid_argument on
// unknown class names or reserved bits.
NdTypeMask mask_from_name(const std::string& s);

}  // namespace ndbft
