#include "ndcontrol/deadlock.hpp"

#include <algorithm>
#include <map>

namespace ndbft::ndc {

const char* verdict_name(OrderVerdict v) {
    switch (v) {
        case OrderVerdict::kOk: return "OK";
        case OrderVerdict::kDeadlock: return "DEADLOCK";
        case OrderVerdict::kInvalidOrder: return "INVALID_ORDER";
    }
    return "UNKNOWN";
}

namespace {

struct ReplayState {
    const std::vector<ThreadProgram>& programs;
    std::vector<size_t> pc;
    std::map<uint32_t, uint32_t> holder;  // lock -> thread
    bool malformed = false;

    explicit ReplayState(const std::vector<ThreadProgram>& p)
        : programs(p), pc(p.size(), 0) {}

    // Runs thread `t` forward through releases until its next acquisition
    // or the end of its script.
    void advance(uint32_t t) {
        auto& prog = programs[t];
        while (pc[t] < prog.size() && prog[pc[t]].kind == LockOpKind::kRelease) {
            auto it = holder.find(prog[pc[t]].lock);
            if (it == holder.end() || it->second != t) {
                malformed = true;
                return;
            }
            holder.erase(it);
            pc[t]++;
        }
    }

    bool finished(uint32_t t) const { return pc[t] >= programs[t].size(); }

    // The lock thread `t` is parked on, if any.
    const LockOp* next_acquire(uint32_t t) const {
        if (finished(t)) return nullptr;
        return &programs[t][pc[t]];
    }
};

}  // namespace

OrderCheck check_grant_order(const std::vector<ThreadProgram>& programs,
                             const std::vector<Grant>& grants) {
    ReplayState st(programs);
    for (uint32_t t = 0; t < programs.size(); t++) st.advance(t);

    for (size_t i = 0; i < grants.size(); i++) {
        const Grant& g = grants[i];
        if (st.malformed || g.thread >= programs.size() || st.finished(g.thread))
            return {OrderVerdict::kInvalidOrder, i, {}};
        const LockOp* op = st.next_acquire(g.thread);
        if (op->lock != g.lock) return {OrderVerdict::kInvalidOrder, i, {}};

        if (auto it = st.holder.find(g.lock); it != st.holder.end()) {
            // The prescribed grant cannot happen: the lock is held, and its
            // holder is itself parked. Walk the wait-for chain; a revisit is
            // a cycle, a free tail lock means the schedule merely stalled.
            std::vector<uint32_t> path = {g.thread};
            uint32_t lock = g.lock;
            while (true) {
                uint32_t h = st.holder.at(lock);
                auto seen = std::find(path.begin(), path.end(), h);
                if (seen != path.end())
                    return {OrderVerdict::kDeadlock, i,
                            std::vector<uint32_t>(seen, path.end())};
                const LockOp* want = st.next_acquire(h);
                if (want == nullptr || !st.holder.count(want->lock))
                    return {OrderVerdict::kInvalidOrder, i, {}};
                path.push_back(h);
                lock = want->lock;
            }
        }

        st.holder.emplace(g.lock, g.thread);
        st.pc[g.thread]++;
        st.advance(g.thread);
        if (st.malformed) return {OrderVerdict::kInvalidOrder, i, {}};
    }

    for (uint32_t t = 0; t < programs.size(); t++)
        if (!st.finished(t)) return {OrderVerdict::kInvalidOrder, grants.size(), {}};
    if (!st.holder.empty()) return {OrderVerdict::kInvalidOrder, grants.size(), {}};
    return {OrderVerdict::kOk, grants.size(), {}};
}

Bytes encode_grants(const std::vector<Grant>& grants) {
    ByteWriter w;
    w.u32(uint32_t(grants.size()));
    for (const Grant& g : grants) {
        w.u32(g.thread);
        w.u32(g.lock);
    }
    return w.take();
}

std::vector<Grant> decode_grants(ByteView wire) {
    ByteReader r(wire);
    uint32_t n = r.count(1u << 20);
    std::vector<Grant> out;
    out.reserve(n);
    for (uint32_t i = 0; i < n; i++) {
        Grant g;
        g.thread = r.u32();
        g.lock = r.u32();
        out.push_back(g);
    }
    r.expect_done();
    return out;
}

}  // namespace ndbft::ndc
