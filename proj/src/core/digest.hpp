#pragma once

#include <initializer_list>

#include "core/bytes.hpp"
#include "core/types.hpp"

namespace ndbft {

Digest sha256(ByteView data);

// Incremental SHA-256; wraps the OpenSSL EVP context so call sites stay
// allocation-light in hot paths.
class Hasher {
  public:
    Hasher();
    ~Hasher();
    Hasher(const Hasher&) = delete;
    Hasher& operator=(const Hasher&) = delete;

    Hasher& update(ByteView data);
    Hasher& update_u64(uint64_t v);
    Digest finish();

  private:
    void* ctx_;
};

Digest sha256_concat(std::initializer_list<ByteView> parts);

// Deterministically expands a digest to `len` bytes via counter-mode
// rehashing. Used by the example applications to build payloads of a
// requested size from a 32-byte root.
Bytes expand_digest(const Digest& root, size_t len);

}  // namespace ndbft
