#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/types.hpp"
#include "simnet/simnet.hpp"

namespace ndbft::bench {

// One closed-loop benchmark campaign: the cartesian product of the mask,
// value-size, and client-count sweeps, each point run as a fault-free
// scenario in virtual time. All metrics are virtual-time metrics; nothing
// here measures the host machine.
struct BenchConfig {
    std::vector<NdTypeMask> masks = {0};
    std::vector<size_t> nd_sizes = {256};      // per-class value size, bytes
    std::vector<uint32_t> client_counts = {1};
    size_t request_size = 1024;                // request and reply payload
    uint32_t iterations = 1000;                // requests per client
    uint32_t f = 1;
    bool optimized = false;
    uint64_t seed = 1;

    // Scenario plumbing shared by every sweep point. The default link models
    // a LAN: 100 us one-way delay plus 80 ns/byte egress serialization.
    sim::LinkModel link{.per_byte_ns = 80};
    uint64_t think_time_us = 0;
    uint64_t think_jitter_us = 0;

    // Throws std::invalid_argument describing the first violated constraint.
    void validate() const;
};

// Measurements for a single sweep point. Latencies are client-observed
// (request issue to accepted reply); throughput divides completed requests
// by the virtual time the workload took.
struct BenchRow {
    NdTypeMask mask = 0;
    size_t nd_size = 0;        // per-class value size
    uint32_t clients = 0;
    size_t nd_bytes_total = 0; // nd_size times the number of classes in mask

    double mean_latency_us = 0.0;
    uint64_t p50_latency_us = 0;
    uint64_t p99_latency_us = 0;
    double throughput_rps = 0.0;
    uint64_t msgs_total = 0;
    uint64_t bytes_total = 0;
    double piggyback_ratio = 0.0;

    uint64_t completed = 0;
    uint64_t duration_us = 0;
    std::map<MsgType, sim::TagStats> per_type;
};

struct BenchResult {
    BenchConfig config;
    std::vector<BenchRow> rows;
};

// Runs every sweep point. Deterministic given the config (including seed).
// Throws std::runtime_error if any point trips the safety checker: the
// benchmark scripts no faults, so a violation is an engine defect, not a
// measurement.
BenchResult bench(const BenchConfig& config);

// Fraction of postnd entries that rode an existing PRE_PREPARE rather than
// a null request or a standalone agreement round. Zero when the sweep point
// produced no postnd entries at all.
double piggyback_ratio(const engine::ReplicaCounters& totals);

// Closed-loop sanity: each client cycles request -> reply -> think, so
// throughput times the mean cycle time should recover the client count.
// Returns that product; callers compare it against row.clients.
double closed_loop_concurrency(const BenchRow& row, const BenchConfig& config);

// CSV with the stable column set
//   mask,nd_size,clients,mean_latency_us,p99_latency_us,throughput_rps,
//   msgs_total,bytes_total,piggyback_ratio
// one row per sweep point, header first. Byte-identical across runs of the
// same config.
std::string to_csv(const BenchResult& result);

// JSON mirror of the CSV plus the fields the CSV omits (percentiles beyond
// p99, per-message-type counts, totals, and the config itself).
std::string to_json(const BenchResult& result);

// Writes <prefix>.csv and <prefix>.json. Throws std::runtime_error if either
// file cannot be written.
void write_outputs(const BenchResult& result, const std::string& prefix);

}  // namespace ndbft::bench
