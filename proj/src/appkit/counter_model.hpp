#pragma once

#include <optional>
#include <random>
#include <vector>

#include "core/bytes.hpp"
#include "ndcontrol/deadlock.hpp"

namespace ndbft::app {

// The shared-cell counter workload: k logical threads of read-modify-write
// ops over shared cells guarded by per-cell locks. An increment never
// blocks; a transfer waits until its source cell is nonzero, then moves one
// unit under both cells' locks (source acquired first).
//
// Generator layout contract (relied on by the scripted fault behaviors):
//   thread 0 op 0: incr(0)            — funds cell 0, which starts empty
//   thread 1 op 0: transfer(0 -> 1)   — runnable only after the funding incr
//   thread 2 op 0: transfer(c-2 -> c-1)
//   thread 3 op 0: transfer(c-1 -> c-2)  — opposing pair for lock cycles
// All remaining ops are increments over the middle cells, so an honest
// schedule always exists and cell balances never drift negative.

struct CounterOp {
    enum Kind : uint8_t { kIncr = 0, kTransfer = 1 };
    uint8_t kind = kIncr;
    uint32_t a = 0;  // incr target / transfer source
    uint32_t b = 0;  // transfer destination
    bool operator==(const CounterOp&) const = default;
};

struct CounterProgram {
    uint32_t cells = 0;
    std::vector<std::vector<CounterOp>> thread_ops;
    bool operator==(const CounterProgram&) const = default;
};

constexpr uint32_t kCounterThreads = 4;
constexpr uint32_t kCounterCells = 8;
constexpr uint64_t kCounterInitial = 100;  // all cells but cell 0, which is 0

Bytes encode_counter_program(const CounterProgram& p);
CounterProgram decode_counter_program(ByteView op);  // throws WireError

// Fresh service state for `cells` cells.
std::vector<uint64_t> counter_initial_state(uint32_t cells);

// Lock acquire/release scripts per thread, as consumed by the pre-replay
// deadlock analysis.
std::vector<ndc::ThreadProgram> counter_lock_programs(const CounterProgram& p);

// Honest recording execution: random op-atomic interleaving over runnable
// threads. Mutates `cells`, returns the grant schedule.
std::vector<ndc::Grant> counter_record(const CounterProgram& p,
                                       std::vector<uint64_t>& cells,
                                       std::mt19937_64& rng);

enum class CounterReplay : uint8_t {
    kOk,
    kMismatch,   // grants contradict the program
    kUnderfund,  // a transfer was scheduled against an empty source: livelock
};

// Follows a prescribed grant schedule exactly. Mutates `cells` as it goes;
// callers restore from snapshot on failure.
CounterReplay counter_replay(const CounterProgram& p,
                             const std::vector<ndc::Grant>& grants,
                             std::vector<uint64_t>& cells);

// Deterministic schedule with a genuine lock cycle on the opposing pair;
// rejected by deadlock analysis before any execution.
std::vector<ndc::Grant> counter_deadlock_grants(const CounterProgram& p);

// Deterministic schedule that is lock-clean (threads run sequentially, so
// analysis passes) but runs the funded transfer before its funding
// increment, which livelocks replay.
std::vector<ndc::Grant> counter_unfunded_grants(const CounterProgram& p);

// Deterministic lock-clean, fully funded schedule distinct from any honest
// recording with overwhelming probability (threads run sequentially, funding
// thread first). Replays fine but yields a different interleaving.
std::vector<ndc::Grant> counter_sequential_grants(const CounterProgram& p);

// Workload generator honoring the layout contract above.
CounterProgram gen_counter_program(std::mt19937_64& rng, uint32_t extra_incrs_per_thread = 4);

}  // namespace ndbft::app
