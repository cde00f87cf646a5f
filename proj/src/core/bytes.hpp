#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ndbft {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

// Thrown by ByteReader on malformed input. `offset` is the position in the
// buffer at which decoding could not continue.
class WireError : public std::runtime_error {
  public:
    WireError(size_t offset, const std::string& what)
        : std::runtime_error("wire error at offset " + std::to_string(offset) +
                             ": " + what),
          offset_(offset) {}

    size_t offset() const { return offset_; }

  private:
    size_t offset_;
};

// Canonical encoder: fixed field order, little-endian fixed-width integers,
// u32 length prefixes on variable-size fields.
class ByteWriter {
  public:
    void u8(uint8_t v) { buf_.push_back(v); }

    void u32(uint32_t v) {
        for (int i = 0; i < 4; i++) buf_.push_back(uint8_t(v >> (8 * i)));
    }

    void u64(uint64_t v) {
        for (int i = 0; i < 8; i++) buf_.push_back(uint8_t(v >> (8 * i)));
    }

    // Raw bytes, no length prefix. Use for fixed-size fields only.
    void raw(ByteView b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

    // Length-prefixed byte field.
    void blob(ByteView b) {
        u32(uint32_t(b.size()));
        raw(b);
    }

    const Bytes& bytes() const { return buf_; }
    Bytes take() { return std::move(buf_); }
    size_t size() const { return buf_.size(); }

  private:
    Bytes buf_;
};

class ByteReader {
  public:
    explicit ByteReader(ByteView b) : buf_(b) {}

    uint8_t u8() {
        need(1);
        return buf_[pos_++];
    }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; i++) v |= uint32_t(buf_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; i++) v |= uint64_t(buf_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    void raw(uint8_t* out, size_t len) {
        need(len);
        std::memcpy(out, buf_.data() + pos_, len);
        pos_ += len;
    }

    Bytes blob(size_t max_len = kMaxBlob) {
        uint32_t len = u32();
        if (len > max_len) fail("blob length " + std::to_string(len) + " exceeds limit");
        need(len);
        Bytes out(buf_.begin() + pos_, buf_.begin() + pos_ + len);
        pos_ += len;
        return out;
    }

    size_t pos() const { return pos_; }
    size_t remaining() const { return buf_.size() - pos_; }
    bool done() const { return pos_ == buf_.size(); }

    void expect_done() const {
        if (!done()) fail("trailing bytes after message body");
    }

    [[noreturn]] void fail(const std::string& what) const { throw WireError(pos_, what); }

    // Counts are bounded to keep a malformed length prefix from driving a
    // huge allocation before the buffer runs out.
    uint32_t count(uint32_t max) {
        uint32_t c = u32();
        if (c > max) fail("count " + std::to_string(c) + " exceeds limit");
        return c;
    }

  private:
    static constexpr size_t kMaxBlob = 64u << 20;

    void need(size_t len) const {
        if (buf_.size() - pos_ < len) throw WireError(pos_, "truncated input");
    }

    ByteView buf_;
    size_t pos_ = 0;
};

inline Bytes to_bytes(const std::string& s) {
    return Bytes(s.begin(), s.end());
}

}  // namespace ndbft
