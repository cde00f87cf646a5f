#pragma once

#include <array>
#include <vector>

#include "core/bytes.hpp"
#include "core/types.hpp"

namespace ndbft {

enum class AuthMode : uint8_t {
    kAuthenticator = 0,  // vector of per-receiver truncated HMAC-SHA-256 tags
    kSignature = 1,      // single Ed25519 signature by the sender
};

constexpr size_t kMacTagLen = 8;
constexpr size_t kSignatureLen = 64;

using MacTag = std::array<uint8_t, kMacTagLen>;
using Signature = std::array<uint8_t, kSignatureLen>;

struct AuthTag {
    AuthMode mode = AuthMode::kAuthenticator;
    std::vector<MacTag> macs;  // authenticator mode: one entry per receiver
    Signature sig{};           // signature mode

    bool operator==(const AuthTag&) const = default;
};

Bytes hmac_sha256(ByteView key, ByteView data);

// Deterministic key material for a run: pairwise HMAC keys between any two
// nodes (replicas and clients) and one Ed25519 keypair per node, all derived
// from a master seed. Key distribution itself is out of scope.
class KeyStore {
  public:
    KeyStore(ByteView master_seed, uint32_t n_replicas);

    uint32_t n() const { return n_; }

    // Authenticator destined for the replica group: entry i verifies with
    // key(sender, replica i).
    AuthTag authenticator_for_replicas(NodeId sender, ByteView msg) const;
    // Single-receiver authenticator (replica-to-client replies).
    AuthTag authenticator_for_node(NodeId sender, NodeId receiver, ByteView msg) const;
    AuthTag sign(NodeId sender, ByteView msg) const;

    AuthTag make(AuthMode mode, NodeId sender, ByteView msg) const {
        return mode == AuthMode::kSignature ? sign(sender, msg)
                                            : authenticator_for_replicas(sender, msg);
    }

    // Verification by `receiver` of a tag made by `sender` over `msg`.
    // For authenticator tags the receiver checks exactly its own entry:
    // replica i checks entry i of a replica-group tag; a client checks the
    // single entry of a client-bound tag.
    bool verify(const AuthTag& tag, NodeId sender, NodeId receiver, ByteView msg) const;

    MacTag mac_entry(NodeId sender, NodeId receiver, ByteView msg) const;

  private:
    Bytes pair_key(NodeId a, NodeId b) const;

    uint32_t n_;
    Bytes master_;
    std::vector<std::array<uint8_t, 32>> sign_pk_;  // replicas only
    std::vector<std::array<uint8_t, 64>> sign_sk_;
    std::array<uint8_t, 32> client_sign_pk(NodeId node) const;
    std::array<uint8_t, 64> client_sign_sk(NodeId node) const;
    void derive_sign_keys(NodeId node, std::array<uint8_t, 32>& pk,
                          std::array<uint8_t, 64>& sk) const;
};

}  // namespace ndbft
