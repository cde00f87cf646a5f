#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>

#include "core/types.hpp"

namespace ndbft::engine {

// Trace records are single lines of '|'-separated key=value fields after a
// one-letter record kind. They are the protocol's externally visible history:
// the safety checker, the acceptance suite, and the determinism check all
// consume this format, so emission must be deterministic given the event
// stream (no timestamps, no addresses, fields in fixed order).
//
//   D  delivery        r, v, s, req, nd, res, mask
//   P  phase change    r, s, phase
//   S  suspicion       r, s, reason
//   R  postnd recorded r, s, post
//   A  postnd agreed   r, s, post, via (pig | postc)
//   W  watchdog        r, s, event, state
//   C  client done     c, rid, res
//   T  trailer         records (appended by the run harness)

class TraceLine {
  public:
    explicit TraceLine(char kind) { out_ << kind; }

    TraceLine& field(const char* key, uint64_t v) {
        out_ << '|' << key << '=' << v;
        return *this;
    }
    TraceLine& field(const char* key, const std::string& v) {
        out_ << '|' << key << '=' << v;
        return *this;
    }
    TraceLine& field(const char* key, const Digest& d) {
        out_ << '|' << key << '=' << d.hex();
        return *this;
    }

    std::string str() const { return out_.str(); }

  private:
    std::ostringstream out_;
};

struct TraceRecord {
    char kind = '?';
    std::map<std::string, std::string> fields;

    uint64_t num(const std::string& key) const {
        auto it = fields.find(key);
        return it == fields.end() ? 0 : std::stoull(it->second);
    }
    std::string text(const std::string& key) const {
        auto it = fields.find(key);
        return it == fields.end() ? std::string() : it->second;
    }
    bool has(const std::string& key) const { return fields.count(key) != 0; }
};

// Parses one trace line. Returns false for lines that do not match the
// format; callers treat those as corruption.
inline bool parse_trace_line(const std::string& line, TraceRecord& out) {
    if (line.empty()) return false;
    out.kind = line[0];
    out.fields.clear();
    size_t pos = 1;
    while (pos < line.size()) {
        if (line[pos] != '|') return false;
        size_t eq = line.find('=', pos + 1);
        if (eq == std::string::npos) return false;
        size_t end = line.find('|', eq + 1);
        if (end == std::string::npos) end = line.size();
        out.fields[line.substr(pos + 1, eq - pos - 1)] = line.substr(eq + 1, end - eq - 1);
        pos = end;
    }
    return true;
}

} // namespace ndbft::engine
