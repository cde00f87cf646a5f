#pragma once

#include <map>
#include <memory>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "client/client.hpp"
#include "engine/replica.hpp"
#include "simnet/faults.hpp"
#include "simnet/safety.hpp"
#include "simnet/scenario.hpp"

namespace ndbft::sim {

struct TagStats {
    uint64_t msgs = 0;
    uint64_t bytes = 0;
    bool operator==(const TagStats&) const = default;
};

struct Metrics {
    std::vector<uint64_t> latencies_us;  // completed requests, client-observed
    uint64_t completed = 0;
    uint64_t failed = 0;
    uint64_t msgs_total = 0;
    uint64_t bytes_total = 0;
    std::map<MsgType, TagStats> per_tag;
    engine::ReplicaCounters replica_totals;
    // Virtual time at which the last client request finished (or, if the
    // workload never finished, when the event queue went quiet).
    uint64_t duration_us = 0;
};

// One deterministic run: n replicas, the scenario's clients, a link model
// with seeded per-message delay/jitter/loss draws, and the fault script.
// Identical (scenario, seed) pairs replay the exact same event history.
class Simulation {
  public:
    Simulation(const Scenario& scenario, uint64_t seed);
    ~Simulation();

    void run();

    const std::vector<std::string>& trace() const { return trace_; }
    const Metrics& metrics() const { return metrics_; }
    const engine::Replica& replica(ReplicaId id) const { return *replicas_[id]; }
    const client::Client& client(ClientId id) const { return *clients_[id]; }
    uint64_t now_us() const { return now_; }

    // Replicas whose delivered records the safety checker may trust: every
    // replica without a Byzantine script. Fail-stop crashes stay in.
    std::set<ReplicaId> correct_replicas() const;

  private:
    struct Event {
        uint64_t when = 0;
        uint64_t order = 0;
        enum Kind : uint8_t { kDeliver, kTimer, kInvoke } kind = kDeliver;
        NodeId node = 0;
        ProtocolMessage msg;
        uint64_t token = 0;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.when != b.when ? a.when > b.when : a.order > b.order;
        }
    };

    class NodeServices;

    void route(NodeId src, NodeId dst, const ProtocolMessage& msg);
    void push(Event e);
    void dispatch(const Event& e);
    void start_next_request(ClientId c);
    bool lost(NodeId src, NodeId dst, uint8_t tag, uint64_t ordinal);

    Scenario scenario_;
    uint64_t seed_;
    ProtocolConfig cfg_;
    KeyStore keys_;
    FaultEngine faults_;

    std::vector<std::unique_ptr<NodeServices>> services_;  // replicas, then clients
    std::vector<std::unique_ptr<engine::Replica>> replicas_;
    std::vector<std::unique_ptr<client::Client>> clients_;
    std::vector<uint32_t> remaining_;  // requests left to issue, per client
    std::vector<std::mt19937_64> client_rng_;

    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    uint64_t order_counter_ = 0;
    uint64_t now_ = 0;
    std::map<std::tuple<NodeId, NodeId, uint8_t>, uint64_t> link_ordinal_;
    std::map<NodeId, uint64_t> egress_free_;  // sender link busy until

    std::vector<std::string> trace_;
    std::map<ReplicaId, uint64_t> trace_counts_;
    uint64_t requests_outstanding_ = 0;
    uint64_t workload_done_us_ = 0;
    Metrics metrics_;
};

struct RunResult {
    SafetyReport report;
    Metrics metrics;
    std::vector<std::string> trace;
};

// Validates, runs, and checks one scenario end to end.
RunResult run_scenario(const Scenario& scenario, uint64_t seed);

}  // namespace ndbft::sim
