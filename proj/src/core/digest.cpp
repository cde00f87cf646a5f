#include "core/digest.hpp"

#include <openssl/evp.h>

#include <cassert>
#include <cstring>

namespace ndbft {

Digest sha256(ByteView data) {
    Digest d;
    unsigned int len = 0;
    int rc = EVP_Digest(data.data(), data.size(), d.bytes.data(), &len,
                        EVP_sha256(), nullptr);
    assert(rc == 1 && len == 32);
    (void)rc;
    return d;
}

Hasher::Hasher() {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    ctx_ = ctx;
}

Hasher::~Hasher() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

Hasher& Hasher::update(ByteView data) {
    EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data.data(), data.size());
    return *this;
}

Hasher& Hasher::update_u64(uint64_t v) {
    uint8_t le[8];
    for (int i = 0; i < 8; i++) le[i] = uint8_t(v >> (8 * i));
    return update(ByteView(le, 8));
}

Digest Hasher::finish() {
    Digest d;
    unsigned int len = 0;
    EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), d.bytes.data(), &len);
    assert(len == 32);
    return d;
}

Digest sha256_concat(std::initializer_list<ByteView> parts) {
    Hasher h;
    for (const auto& p : parts) h.update(p);
    return h.finish();
}

Bytes expand_digest(const Digest& root, size_t len) {
    Bytes out;
    out.reserve(len);
    uint64_t counter = 0;
    while (out.size() < len) {
        Hasher h;
        h.update(root.bytes).update_u64(counter++);
        Digest block = h.finish();
        size_t take = std::min<size_t>(32, len - out.size());
        out.insert(out.end(), block.bytes.begin(), block.bytes.begin() + take);
    }
    return out;
}

}  // namespace ndbft
