#pragma once

#include <random>
#include <vector>

#include "core/bytes.hpp"

namespace ndbft::app {

// A request-supplied task DAG. Edges always point from a lower to a higher
// node id, so the graph is acyclic by construction and the identity order is
// one valid completion order.
struct TaskGraph {
    uint32_t nodes = 0;
    std::vector<std::pair<uint32_t, uint32_t>> edges;
    bool operator==(const TaskGraph&) const = default;
};

Bytes encode_task_graph(const TaskGraph& g, size_t pad_to = 0);
TaskGraph decode_task_graph(ByteView op);  // throws WireError

// Random topological completion order (Kahn's algorithm, RNG tie-break).
std::vector<uint32_t> random_topo_order(const TaskGraph& g, std::mt19937_64& rng);

// True iff `order` is a permutation of the nodes that respects every edge.
bool check_topo_order(const TaskGraph& g, const std::vector<uint32_t>& order);

Bytes encode_order(const std::vector<uint32_t>& order);
std::vector<uint32_t> decode_order(ByteView wire);  // throws WireError

// Generator: `nodes` tasks with at least one edge, ~2 forward edges per node.
TaskGraph gen_task_graph(std::mt19937_64& rng, uint32_t nodes = 6);

}  // namespace ndbft::app
