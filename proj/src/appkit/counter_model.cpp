#include "appkit/counter_model.hpp"

namespace ndbft::app {

Bytes encode_counter_program(const CounterProgram& p) {
    ByteWriter w;
    w.u32(p.cells);
    w.u32(uint32_t(p.thread_ops.size()));
    for (const auto& ops : p.thread_ops) {
        w.u32(uint32_t(ops.size()));
        for (const auto& op : ops) {
            w.u8(op.kind);
            w.u32(op.a);
            w.u32(op.b);
        }
    }
    return w.take();
}

CounterProgram decode_counter_program(ByteView wire) {
    ByteReader r(wire);
    CounterProgram p;
    p.cells = r.u32();
    if (p.cells == 0 || p.cells > 1024) r.fail("cell count out of range");
    uint32_t threads = r.count(64);
    p.thread_ops.resize(threads);
    for (auto& ops : p.thread_ops) {
        uint32_t n = r.count(4096);
        ops.reserve(n);
        for (uint32_t i = 0; i < n; i++) {
            CounterOp op;
            op.kind = r.u8();
            op.a = r.u32();
            op.b = r.u32();
            if (op.kind > CounterOp::kTransfer) r.fail("unknown counter op kind");
            if (op.a >= p.cells || op.b >= p.cells) r.fail("cell index out of range");
            if (op.kind == CounterOp::kTransfer && op.a == op.b)
                r.fail("transfer source equals destination");
            ops.push_back(op);
        }
    }
    r.expect_done();
    return p;
}

std::vector<uint64_t> counter_initial_state(uint32_t cells) {
    std::vector<uint64_t> v(cells, kCounterInitial);
    if (!v.empty()) v[0] = 0;
    return v;
}

std::vector<ndc::ThreadProgram> counter_lock_programs(const CounterProgram& p) {
    std::vector<ndc::ThreadProgram> out(p.thread_ops.size());
    for (size_t t = 0; t < p.thread_ops.size(); t++) {
        for (const auto& op : p.thread_ops[t]) {
            using ndc::LockOpKind;
            if (op.kind == CounterOp::kIncr) {
                out[t].push_back({op.a, LockOpKind::kAcquire});
                out[t].push_back({op.a, LockOpKind::kRelease});
            } else {
                out[t].push_back({op.a, LockOpKind::kAcquire});
                out[t].push_back({op.b, LockOpKind::kAcquire});
                out[t].push_back({op.b, LockOpKind::kRelease});
                out[t].push_back({op.a, LockOpKind::kRelease});
            }
        }
    }
    return out;
}

namespace {

void apply_op(const CounterOp& op, std::vector<uint64_t>& cells,
              uint32_t thread, std::vector<ndc::Grant>& grants) {
    if (op.kind == CounterOp::kIncr) {
        grants.push_back({thread, op.a});
        cells[op.a]++;
    } else {
        grants.push_back({thread, op.a});
        grants.push_back({thread, op.b});
        cells[op.a]--;
        cells[op.b]++;
    }
}

}  // namespace

std::vector<ndc::Grant> counter_record(const CounterProgram& p,
                                       std::vector<uint64_t>& cells,
                                       std::mt19937_64& rng) {
    std::vector<size_t> pc(p.thread_ops.size(), 0);
    std::vector<ndc::Grant> grants;
    while (true) {
        std::vector<uint32_t> runnable;
        for (uint32_t t = 0; t < p.thread_ops.size(); t++) {
            if (pc[t] >= p.thread_ops[t].size()) continue;
            const CounterOp& op = p.thread_ops[t][pc[t]];
            if (op.kind == CounterOp::kTransfer && cells[op.a] == 0) continue;
            runnable.push_back(t);
        }
        if (runnable.empty()) break;
        uint32_t t = runnable[rng() % runnable.size()];
        apply_op(p.thread_ops[t][pc[t]], cells, t, grants);
        pc[t]++;
    }
    return grants;
}

CounterReplay counter_replay(const CounterProgram& p,
                             const std::vector<ndc::Grant>& grants,
                             std::vector<uint64_t>& cells) {
    std::vector<size_t> pc(p.thread_ops.size(), 0);
    // For a transfer, 0 = awaiting source grant, 1 = awaiting destination.
    std::vector<uint8_t> phase(p.thread_ops.size(), 0);
    for (const auto& g : grants) {
        if (g.thread >= p.thread_ops.size()) return CounterReplay::kMismatch;
        uint32_t t = g.thread;
        if (pc[t] >= p.thread_ops[t].size()) return CounterReplay::kMismatch;
        const CounterOp& op = p.thread_ops[t][pc[t]];
        if (op.kind == CounterOp::kIncr) {
            if (g.lock != op.a || phase[t] != 0) return CounterReplay::kMismatch;
            cells[op.a]++;
            pc[t]++;
        } else if (phase[t] == 0) {
            if (g.lock != op.a) return CounterReplay::kMismatch;
            // The thread would wait forever on an empty source; nothing can
            // refill it while the source lock is held.
            if (cells[op.a] == 0) return CounterReplay::kUnderfund;
            phase[t] = 1;
        } else {
            if (g.lock != op.b) return CounterReplay::kMismatch;
            cells[op.a]--;
            cells[op.b]++;
            phase[t] = 0;
            pc[t]++;
        }
    }
    for (size_t t = 0; t < p.thread_ops.size(); t++)
        if (pc[t] < p.thread_ops[t].size() || phase[t] != 0)
            return CounterReplay::kMismatch;
    return CounterReplay::kOk;
}

namespace {

void append_thread_grants(const CounterProgram& p, uint32_t t,
                          std::vector<ndc::Grant>& out) {
    for (const auto& op : p.thread_ops[t]) {
        out.push_back({t, op.a});
        if (op.kind == CounterOp::kTransfer) out.push_back({t, op.b});
    }
}

}  // namespace

std::vector<ndc::Grant> counter_deadlock_grants(const CounterProgram& p) {
    // Interleave the opposing transfers of threads 2 and 3: each takes its
    // source, then thread 2 reaches for thread 3's held lock.
    const CounterOp& t2 = p.thread_ops[2][0];
    const CounterOp& t3 = p.thread_ops[3][0];
    return {{2, t2.a}, {3, t3.a}, {2, t2.b}};
}

std::vector<ndc::Grant> counter_unfunded_grants(const CounterProgram& p) {
    std::vector<ndc::Grant> out;
    for (uint32_t t : {1u, 2u, 3u, 0u}) append_thread_grants(p, t, out);
    return out;
}

std::vector<ndc::Grant> counter_sequential_grants(const CounterProgram& p) {
    std::vector<ndc::Grant> out;
    for (uint32_t t = 0; t < p.thread_ops.size(); t++) append_thread_grants(p, t, out);
    return out;
}

CounterProgram gen_counter_program(std::mt19937_64& rng, uint32_t extra_incrs_per_thread) {
    CounterProgram p;
    p.cells = kCounterCells;
    p.thread_ops.resize(kCounterThreads);
    p.thread_ops[0].push_back({CounterOp::kIncr, 0, 0});
    p.thread_ops[1].push_back({CounterOp::kTransfer, 0, 1});
    p.thread_ops[2].push_back({CounterOp::kTransfer, kCounterCells - 2, kCounterCells - 1});
    p.thread_ops[3].push_back({CounterOp::kTransfer, kCounterCells - 1, kCounterCells - 2});
    // Middle cells only take increments, so no schedule can run dry.
    for (uint32_t t = 0; t < kCounterThreads; t++) {
        for (uint32_t i = 0; i < extra_incrs_per_thread; i++) {
            uint32_t cell = 2 + uint32_t(rng() % (kCounterCells - 4));
            p.thread_ops[t].push_back({CounterOp::kIncr, cell, 0});
        }
    }
    return p;
}

}  // namespace ndbft::app
