#include "simnet/simnet.hpp"

#include "appkit/app.hpp"
#include "engine/trace.hpp"

namespace ndbft::sim {

namespace {

// splitmix64: cheap, well-mixed stateless hash for per-message draws.
uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

uint64_t draw(uint64_t seed, uint64_t salt, NodeId src, NodeId dst, uint8_t tag,
              uint64_t ordinal) {
    uint64_t h = mix64(seed ^ salt);
    h = mix64(h ^ src);
    h = mix64(h ^ dst);
    h = mix64(h ^ tag);
    h = mix64(h ^ ordinal);
    return h;
}

double unit_interval(uint64_t h) { return double(h >> 11) * 0x1.0p-53; }

}  // namespace

class Simulation::NodeServices : public engine::Services {
  public:
    NodeServices(Simulation* sim, NodeId node) : sim_(sim), node_(node) {}

    uint64_t now_us() override { return sim_->now_; }
    void send(NodeId dst, const ProtocolMessage& msg) override {
        sim_->route(node_, dst, msg);
    }
    void set_timer(uint64_t deadline_us, uint64_t token) override {
        Event e;
        e.when = deadline_us;
        e.kind = Event::kTimer;
        e.node = node_;
        e.token = token;
        sim_->push(std::move(e));
    }
    void trace(const std::string& line) override {
        sim_->trace_.push_back(line);
        if (!is_client_node(node_))
            ++sim_->trace_counts_[static_cast<ReplicaId>(node_)];
    }

  private:
    Simulation* sim_;
    NodeId node_;
};

Simulation::Simulation(const Scenario& scenario, uint64_t seed)
    : scenario_(scenario),
      seed_(seed),
      cfg_(scenario.to_config()),
      keys_(to_bytes("simnet-" + std::to_string(seed)), cfg_.n()),
      faults_(scenario, cfg_, &keys_) {
    scenario_.validate();
    const uint32_t n = cfg_.n();
    for (ReplicaId r = 0; r < n; ++r) {
        services_.push_back(std::make_unique<NodeServices>(this, r));
        app::AppParams ap;
        ap.f = cfg_.f;
        ap.replica = r;
        ap.rng_seed = mix64(seed ^ (r + 1));
        ap.mask = scenario_.mask;
        ap.vpre_size = ap.npre_size = ap.vpost_size = ap.npost_size =
            scenario_.workload.nd_size;
        ap.reply_size = scenario_.workload.request_size;
        replicas_.push_back(std::make_unique<engine::Replica>(
            cfg_, r, &keys_, app::make_app(scenario_.app, ap),
            services_.back().get()));
    }
    for (ClientId c = 0; c < scenario_.workload.clients; ++c) {
        services_.push_back(std::make_unique<NodeServices>(this, client_node(c)));
        clients_.push_back(std::make_unique<client::Client>(cfg_, c, &keys_,
                                                            services_.back().get()));
        remaining_.push_back(scenario_.workload.requests_per_client);
        requests_outstanding_ += scenario_.workload.requests_per_client;
        client_rng_.emplace_back(mix64(seed ^ (0x1000 + c)));
        ClientId id = c;
        clients_.back()->on_complete = [this, id](uint64_t rid, const Bytes&) {
            if (--requests_outstanding_ == 0) workload_done_us_ = now_;
            if (remaining_[id] == 0) return;
            Event e;
            e.when = now_ + scenario_.workload.think_time_us;
            if (scenario_.workload.think_jitter_us > 0)
                e.when += draw(seed_, 0x7468, client_node(id), 0, 0, rid) %
                          (scenario_.workload.think_jitter_us + 1);
            e.kind = Event::kInvoke;
            e.node = client_node(id);
            push(std::move(e));
        };
    }
}

Simulation::~Simulation() = default;

std::set<ReplicaId> Simulation::correct_replicas() const {
    std::set<ReplicaId> out;
    for (ReplicaId r = 0; r < cfg_.n(); ++r) out.insert(r);
    for (const auto& fc : scenario_.faults)
        if (fc.behavior != Behavior::kCrashReplica) out.erase(fc.replica);
    return out;
}

void Simulation::push(Event e) {
    e.order = order_counter_++;
    queue_.push(std::move(e));
}

bool Simulation::lost(NodeId src, NodeId dst, uint8_t tag, uint64_t ordinal) {
    if (scenario_.link.loss <= 0.0) return false;
    return unit_interval(draw(seed_, 0x6c6f, src, dst, tag, ordinal)) <
           scenario_.link.loss;
}

void Simulation::route(NodeId src, NodeId dst, const ProtocolMessage& msg) {
    if (faults_.crashed(src, now_)) return;
    ProtocolMessage out = msg;
    if (!faults_.rewrite(src, dst, out)) return;

    const size_t wire_bytes = encode(out).size();
    const auto tag = static_cast<uint8_t>(out.type);
    ++metrics_.msgs_total;
    metrics_.bytes_total += wire_bytes;
    auto& ts = metrics_.per_tag[out.type];
    ++ts.msgs;
    ts.bytes += wire_bytes;

    // The sender's link transmits one message at a time; the transmission
    // itself takes size * per_byte_ns, and later sends queue behind it.
    uint64_t departs = now_;
    if (scenario_.link.per_byte_ns > 0) {
        const uint64_t tx_us =
            (wire_bytes * scenario_.link.per_byte_ns + 999) / 1000;
        uint64_t& free_at = egress_free_[src];
        departs = std::max(now_, free_at) + tx_us;
        free_at = departs;
    }

    const uint64_t ordinal = link_ordinal_[{src, dst, tag}]++;
    if (lost(src, dst, tag, ordinal)) return;

    uint64_t propagation = scenario_.link.delay_us;
    if (scenario_.link.jitter_us > 0)
        propagation += draw(seed_, 0x6a69, src, dst, tag, ordinal) %
                       (scenario_.link.jitter_us + 1);

    Event e;
    e.when = departs + propagation;
    e.kind = Event::kDeliver;
    e.node = dst;
    e.msg = std::move(out);
    push(std::move(e));
}

void Simulation::start_next_request(ClientId c) {
    if (remaining_[c] == 0 || clients_[c]->busy()) return;
    --remaining_[c];
    app::OpGenParams gp;
    gp.req_size = scenario_.workload.request_size;
    clients_[c]->invoke(app::gen_op(scenario_.app, client_rng_[c], gp));
}

void Simulation::dispatch(const Event& e) {
    if (is_client_node(e.node)) {
        const auto c = static_cast<ClientId>(e.node - kClientBase);
        switch (e.kind) {
            case Event::kDeliver:
                clients_[c]->on_message(e.msg);
                break;
            case Event::kTimer:
                clients_[c]->on_timer(e.token);
                break;
            case Event::kInvoke:
                start_next_request(c);
                break;
        }
        return;
    }
    if (faults_.crashed(e.node, now_)) return;
    const auto r = static_cast<ReplicaId>(e.node);
    switch (e.kind) {
        case Event::kDeliver:
            faults_.observe_inbound(e.node, e.msg);
            replicas_[r]->on_message(e.msg);
            break;
        case Event::kTimer:
            replicas_[r]->on_timer(e.token);
            break;
        case Event::kInvoke:
            break;
    }
}

void Simulation::run() {
    for (ClientId c = 0; c < scenario_.workload.clients; ++c) {
        Event e;
        e.when = 0;
        e.kind = Event::kInvoke;
        e.node = client_node(c);
        push(std::move(e));
    }
    while (!queue_.empty()) {
        Event e = queue_.top();
        queue_.pop();
        if (e.when > scenario_.max_virtual_us) break;
        now_ = std::max(now_, e.when);
        dispatch(e);
    }
    metrics_.duration_us = workload_done_us_ != 0 ? workload_done_us_ : now_;

    for (const auto& cl : clients_) {
        metrics_.completed += cl->completed();
        metrics_.failed += cl->failed();
        metrics_.latencies_us.insert(metrics_.latencies_us.end(),
                                     cl->latencies_us().begin(),
                                     cl->latencies_us().end());
    }
    for (const auto& rep : replicas_) {
        const auto& rc = rep->counters();
        metrics_.replica_totals.null_requests += rc.null_requests;
        metrics_.replica_totals.entries_piggybacked += rc.entries_piggybacked;
        metrics_.replica_totals.entries_null_carried += rc.entries_null_carried;
        metrics_.replica_totals.entries_standalone += rc.entries_standalone;
        metrics_.replica_totals.fetches_sent += rc.fetches_sent;
        metrics_.replica_totals.executions += rc.executions;
        metrics_.replica_totals.restarts += rc.restarts;
    }
    for (ReplicaId r = 0; r < cfg_.n(); ++r)
        trace_.push_back(engine::TraceLine('T')
                             .field("r", r)
                             .field("records", trace_counts_[r])
                             .str());
}

RunResult run_scenario(const Scenario& scenario, uint64_t seed) {
    Simulation sim(scenario, seed);
    sim.run();
    RunResult out;
    out.report = check_safety(sim.trace(), sim.correct_replicas());
    out.metrics = sim.metrics();
    out.trace = sim.trace();
    return out;
}

}  // namespace ndbft::sim
