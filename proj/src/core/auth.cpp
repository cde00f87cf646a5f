#include "core/auth.hpp"

#include <sodium.h>

#include <algorithm>
#include <cassert>
#include <cstring>

#include "core/digest.hpp"

namespace ndbft {

// HMAC-SHA-256 (RFC 2104) over the EVP one-shot hash. Keys here are always
// 32 bytes, well under the 64-byte block size.
Bytes hmac_sha256(ByteView key, ByteView data) {
    constexpr size_t kBlock = 64;
    std::array<uint8_t, kBlock> k{};
    if (key.size() > kBlock) {
        Digest kd = sha256(key);
        std::copy(kd.bytes.begin(), kd.bytes.end(), k.begin());
    } else {
        std::copy(key.begin(), key.end(), k.begin());
    }
    std::array<uint8_t, kBlock> ipad, opad;
    for (size_t i = 0; i < kBlock; i++) {
        ipad[i] = k[i] ^ 0x36;
        opad[i] = k[i] ^ 0x5c;
    }
    Hasher inner;
    inner.update(ipad).update(data);
    Digest id = inner.finish();
    Hasher outer;
    outer.update(opad).update(id.bytes);
    Digest od = outer.finish();
    return Bytes(od.bytes.begin(), od.bytes.end());
}

KeyStore::KeyStore(ByteView master_seed, uint32_t n_replicas)
    : n_(n_replicas), master_(master_seed.begin(), master_seed.end()) {
    if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
    sign_pk_.resize(n_);
    sign_sk_.resize(n_);
    for (uint32_t i = 0; i < n_; i++) derive_sign_keys(i, sign_pk_[i], sign_sk_[i]);
}

void KeyStore::derive_sign_keys(NodeId node, std::array<uint8_t, 32>& pk,
                                std::array<uint8_t, 64>& sk) const {
    Hasher h;
    h.update(master_).update(to_bytes("sign")).update_u64(node);
    Digest seed = h.finish();
    crypto_sign_seed_keypair(pk.data(), sk.data(), seed.bytes.data());
}

std::array<uint8_t, 32> KeyStore::client_sign_pk(NodeId node) const {
    std::array<uint8_t, 32> pk;
    std::array<uint8_t, 64> sk;
    derive_sign_keys(node, pk, sk);
    return pk;
}

std::array<uint8_t, 64> KeyStore::client_sign_sk(NodeId node) const {
    std::array<uint8_t, 32> pk;
    std::array<uint8_t, 64> sk;
    derive_sign_keys(node, pk, sk);
    return sk;
}

Bytes KeyStore::pair_key(NodeId a, NodeId b) const {
    NodeId lo = std::min(a, b), hi = std::max(a, b);
    Hasher h;
    h.update(master_).update(to_bytes("pair")).update_u64(lo).update_u64(hi);
    Digest d = h.finish();
    return Bytes(d.bytes.begin(), d.bytes.end());
}

MacTag KeyStore::mac_entry(NodeId sender, NodeId receiver, ByteView msg) const {
    Bytes full = hmac_sha256(pair_key(sender, receiver), msg);
    MacTag t;
    std::copy(full.begin(), full.begin() + kMacTagLen, t.begin());
    return t;
}

AuthTag KeyStore::authenticator_for_replicas(NodeId sender, ByteView msg) const {
    AuthTag tag;
    tag.mode = AuthMode::kAuthenticator;
    tag.macs.reserve(n_);
    for (uint32_t i = 0; i < n_; i++) tag.macs.push_back(mac_entry(sender, i, msg));
    return tag;
}

AuthTag KeyStore::authenticator_for_node(NodeId sender, NodeId receiver,
                                         ByteView msg) const {
    AuthTag tag;
    tag.mode = AuthMode::kAuthenticator;
    tag.macs.push_back(mac_entry(sender, receiver, msg));
    return tag;
}

AuthTag KeyStore::sign(NodeId sender, ByteView msg) const {
    AuthTag tag;
    tag.mode = AuthMode::kSignature;
    std::array<uint8_t, 64> skbuf;
    const uint8_t* sk;
    if (is_client_node(sender)) {
        skbuf = client_sign_sk(sender);
        sk = skbuf.data();
    } else {
        sk = sign_sk_[sender].data();
    }
    crypto_sign_detached(tag.sig.data(), nullptr, msg.data(), msg.size(), sk);
    return tag;
}

bool KeyStore::verify(const AuthTag& tag, NodeId sender, NodeId receiver,
                      ByteView msg) const {
    if (!is_client_node(sender) && sender >= n_) return false;
    if (tag.mode == AuthMode::kSignature) {
        std::array<uint8_t, 32> pk =
            is_client_node(sender) ? client_sign_pk(sender) : sign_pk_[sender];
        return crypto_sign_verify_detached(tag.sig.data(), msg.data(), msg.size(),
                                           pk.data()) == 0;
    }
    // Receiver checks exactly its own entry. Replica-group tags are indexed
    // by replica id; single-entry tags are for one designated receiver.
    size_t idx;
    if (tag.macs.size() == 1) {
        idx = 0;
    } else if (!is_client_node(receiver) && receiver < tag.macs.size()) {
        idx = size_t(receiver);
    } else {
        return false;
    }
    MacTag expect = mac_entry(sender, receiver, msg);
    return tag.macs[idx] == expect;
}

}  // namespace ndbft
