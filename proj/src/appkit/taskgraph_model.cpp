#include "appkit/taskgraph_model.hpp"

#include <algorithm>

namespace ndbft::app {

Bytes encode_task_graph(const TaskGraph& g, size_t pad_to) {
    ByteWriter w;
    w.u32(g.nodes);
    w.u32(uint32_t(g.edges.size()));
    for (auto [from, to] : g.edges) {
        w.u32(from);
        w.u32(to);
    }
    Bytes pad;
    if (w.size() + 4 < pad_to) pad.resize(pad_to - w.size() - 4, 0);
    w.blob(pad);
    return w.take();
}

TaskGraph decode_task_graph(ByteView op) {
    ByteReader r(op);
    TaskGraph g;
    g.nodes = r.u32();
    if (g.nodes == 0 || g.nodes > 4096) r.fail("node count out of range");
    uint32_t m = r.count(1u << 16);
    g.edges.reserve(m);
    for (uint32_t i = 0; i < m; i++) {
        uint32_t from = r.u32();
        uint32_t to = r.u32();
        if (from >= to || to >= g.nodes) r.fail("edge endpoints invalid");
        g.edges.emplace_back(from, to);
    }
    r.blob();  // padding
    r.expect_done();
    return g;
}

std::vector<uint32_t> random_topo_order(const TaskGraph& g, std::mt19937_64& rng) {
    std::vector<uint32_t> indeg(g.nodes, 0);
    for (auto [from, to] : g.edges) indeg[to]++;
    std::vector<uint32_t> ready;
    for (uint32_t v = 0; v < g.nodes; v++)
        if (indeg[v] == 0) ready.push_back(v);
    std::vector<uint32_t> order;
    order.reserve(g.nodes);
    while (!ready.empty()) {
        size_t pick = rng() % ready.size();
        uint32_t v = ready[pick];
        ready.erase(ready.begin() + long(pick));
        order.push_back(v);
        for (auto [from, to] : g.edges) {
            if (from == v && --indeg[to] == 0) ready.push_back(to);
        }
    }
    return order;
}

bool check_topo_order(const TaskGraph& g, const std::vector<uint32_t>& order) {
    if (order.size() != g.nodes) return false;
    std::vector<uint32_t> pos(g.nodes, UINT32_MAX);
    for (uint32_t i = 0; i < order.size(); i++) {
        if (order[i] >= g.nodes || pos[order[i]] != UINT32_MAX) return false;
        pos[order[i]] = i;
    }
    for (auto [from, to] : g.edges)
        if (pos[from] > pos[to]) return false;
    return true;
}

Bytes encode_order(const std::vector<uint32_t>& order) {
    ByteWriter w;
    w.u32(uint32_t(order.size()));
    for (uint32_t v : order) w.u32(v);
    return w.take();
}

std::vector<uint32_t> decode_order(ByteView wire) {
    ByteReader r(wire);
    uint32_t n = r.count(4096);
    std::vector<uint32_t> out;
    out.reserve(n);
    for (uint32_t i = 0; i < n; i++) out.push_back(r.u32());
    r.expect_done();
    return out;
}

TaskGraph gen_task_graph(std::mt19937_64& rng, uint32_t nodes) {
    TaskGraph g;
    g.nodes = nodes;
    for (uint32_t to = 1; to < nodes; to++) {
        uint32_t links = 1 + uint32_t(rng() % 2);
        for (uint32_t i = 0; i < links && i < to; i++) {
            uint32_t from = uint32_t(rng() % to);
            g.edges.emplace_back(from, to);
        }
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

}  // namespace ndbft::app
