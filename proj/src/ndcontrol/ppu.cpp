#include "ndcontrol/ppu.hpp"

#include <algorithm>

namespace ndbft::ndc {

std::vector<NdShare> choose_decision(
    ReplicaId primary, const Bytes& primary_share, const AuthTag& primary_tag,
    const std::map<ReplicaId, std::pair<Bytes, AuthTag>>& contribs,
    uint32_t f, bool as_digests) {
    std::vector<NdShare> out;
    out.reserve(2 * f + 1);
    auto push = [&](ReplicaId id, const Bytes& share, const AuthTag& tag) {
        NdShare e;
        e.proposer = id;
        e.is_digest = as_digests;
        if (as_digests) {
            Digest d = sha256(share);
            e.value.assign(d.bytes.begin(), d.bytes.end());
        } else {
            e.value = share;
        }
        e.tag = tag;
        out.push_back(std::move(e));
    };
    push(primary, primary_share, primary_tag);
    // contribs is id-ordered, so walking it takes the 2f lowest backups.
    uint32_t taken = 0;
    for (const auto& [id, sv] : contribs) {
        if (id == primary) continue;
        if (taken == 2 * f) break;
        push(id, sv.first, sv.second);
        taken++;
    }
    std::sort(out.begin(), out.end(),
              [](const NdShare& a, const NdShare& b) { return a.proposer < b.proposer; });
    return out;
}

DecisionShape check_decision_shape(const std::vector<NdShare>& entries,
                                   ReplicaId primary, uint32_t f) {
    if (entries.size() != size_t(2 * f + 1))
        return {false, "decision set size is not 2f+1"};
    bool has_primary = false;
    for (size_t i = 0; i < entries.size(); i++) {
        if (i > 0 && entries[i].proposer <= entries[i - 1].proposer)
            return {false, "decision proposers not strictly ascending"};
        if (entries[i].proposer == primary) has_primary = true;
    }
    if (!has_primary) return {false, "decision omits the primary's share"};
    return {true, nullptr};
}

std::vector<std::pair<ReplicaId, Bytes>> decision_values(
    const std::vector<NdShare>& entries) {
    std::vector<std::pair<ReplicaId, Bytes>> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.emplace_back(e.proposer, e.value);
    return out;
}

}  // namespace ndbft::ndc
