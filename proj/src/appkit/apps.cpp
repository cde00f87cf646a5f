#include "appkit/app.hpp"

#include <algorithm>
#include <stdexcept>

#include "appkit/counter_model.hpp"
#include "appkit/taskgraph_model.hpp"

namespace ndbft::app {

Digest npre_combine(std::vector<std::pair<ReplicaId, Bytes>> shares, uint32_t f) {
    if (shares.size() != size_t(2 * f + 1))
        throw std::invalid_argument("lottery needs exactly 2f+1 shares");
    std::sort(shares.begin(), shares.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 1; i < shares.size(); i++)
        if (shares[i].first == shares[i - 1].first)
            throw std::invalid_argument("duplicate proposer in share set");
    Hasher h;
    for (const auto& [id, share] : shares) h.update(share);
    return h.finish();
}

namespace {

Bytes rng_bytes(std::mt19937_64& rng, size_t len) {
    Bytes out;
    out.reserve(len);
    while (out.size() < len) {
        uint64_t v = rng();
        for (int i = 0; i < 8 && out.size() < len; i++) out.push_back(uint8_t(v >> (8 * i)));
    }
    return out;
}

Digest mix(const Digest& state, std::string_view label,
           std::initializer_list<ByteView> parts) {
    Hasher h;
    h.update(state.bytes).update(to_bytes(std::string(label)));
    for (const auto& p : parts) h.update(p);
    return h.finish();
}

Bytes reply_bytes(const Digest& state, size_t reply_size) {
    Hasher h;
    h.update(state.bytes).update(to_bytes("reply"));
    return expand_digest(h.finish(), reply_size);
}

// Base for services whose whole observable state is one running digest.
class DigestStateApp : public AppContract {
  public:
    explicit DigestStateApp(const AppParams& params)
        : params_(params), rng_(params.rng_seed) {}

    Bytes snapshot() const override {
        return Bytes(state_.bytes.begin(), state_.bytes.end());
    }
    void restore(ByteView snap) override {
        if (snap.size() != 32) throw std::invalid_argument("bad snapshot size");
        std::copy(snap.begin(), snap.end(), state_.bytes.begin());
    }

  protected:
    AppParams params_;
    std::mt19937_64 rng_;
    Digest state_;
};

Digest vpre_rand_value(const AppRequest& req) {
    Hasher h;
    h.update_u64(req.view).update_u64(req.seq).update(req.req_digest.bytes);
    return h.finish();
}

class VpreRandApp : public DigestStateApp {
  public:
    using DigestStateApp::DigestStateApp;

    std::string_view name() const override { return "vpre_rand"; }
    NdTypeMask mask_of(ByteView) const override { return kNdVpre; }

    ProposeResult propose_value(const AppRequest& req) override {
        ProposeResult out;
        out.mask = kNdVpre;
        Digest v = vpre_rand_value(req);
        out.payload.set(kNdVpre, Bytes(v.bytes.begin(), v.bytes.end()));
        return out;
    }

    CheckVerdict check_value(const AppRequest& req, NdTypeMask mask,
                             const NdPayload& payload) override {
        if (mask != kNdVpre) return CheckVerdict::kTypeMismatch;
        if (const Bytes* v = payload.find(kNdVpre)) {
            Digest expect = vpre_rand_value(req);
            if (v->size() != 32 || !std::equal(v->begin(), v->end(), expect.bytes.begin()))
                return CheckVerdict::kValueRejected;
        }
        return CheckVerdict::kAccept;
    }

    ExecResult execute(const AppRequest& req, const NdPayload& resolved) override {
        ExecResult out;
        const Bytes* v = resolved.find(kNdVpre);
        if (!v) {
            out.outcome = ExecOutcome::kCrash;
            return out;
        }
        state_ = mix(state_, "vpre_rand", {req.op, *v});
        out.result = reply_bytes(state_, params_.reply_size);
        return out;
    }
};

class NpreLotteryApp : public DigestStateApp {
  public:
    using DigestStateApp::DigestStateApp;

    std::string_view name() const override { return "npre_lottery"; }
    NdTypeMask mask_of(ByteView) const override { return kNdNpre; }

    ProposeResult propose_value(const AppRequest&) override {
        ProposeResult out;
        out.mask = kNdNpre;
        out.payload.set(kNdNpre, rng_bytes(rng_, 32));
        return out;
    }

    CheckVerdict check_value(const AppRequest&, NdTypeMask mask,
                             const NdPayload&) override {
        return mask == kNdNpre ? CheckVerdict::kAccept : CheckVerdict::kTypeMismatch;
    }

    ExecResult execute(const AppRequest&, const NdPayload& resolved) override {
        ExecResult out;
        const Bytes* set = resolved.find(kNdNpre);
        if (!set) {
            out.outcome = ExecOutcome::kCrash;
            return out;
        }
        try {
            Digest combined = npre_combine(decode_decision_values(*set), params_.f);
            state_ = mix(state_, "npre_lottery", {combined.bytes});
        } catch (const std::exception&) {
            out.outcome = ExecOutcome::kCrash;
            return out;
        }
        out.result = reply_bytes(state_, params_.reply_size);
        return out;
    }
};

class VpostTaskgraphApp : public DigestStateApp {
  public:
    using DigestStateApp::DigestStateApp;

    std::string_view name() const override { return "vpost_taskgraph"; }
    NdTypeMask mask_of(ByteView) const override { return kNdVpost; }

    ProposeResult propose_value(const AppRequest&) override {
        return {kNdVpost, {}};
    }

    CheckVerdict check_value(const AppRequest& req, NdTypeMask mask,
                             const NdPayload& payload) override {
        if (mask != kNdVpost) return CheckVerdict::kTypeMismatch;
        if (const Bytes* seg = payload.find(kNdVpost)) {
            try {
                TaskGraph g = decode_task_graph(req.op);
                if (!check_topo_order(g, decode_order(*seg)))
                    return CheckVerdict::kValueRejected;
            } catch (const std::exception&) {
                return CheckVerdict::kValueRejected;
            }
        }
        return CheckVerdict::kAccept;
    }

    ExecResult execute(const AppRequest& req, const NdPayload& resolved) override {
        ExecResult out;
        TaskGraph g;
        try {
            g = decode_task_graph(req.op);
        } catch (const std::exception&) {
            out.outcome = ExecOutcome::kCrash;
            return out;
        }
        std::vector<uint32_t> order;
        if (const Bytes* seg = resolved.find(kNdVpost)) {
            try {
                order = decode_order(*seg);
            } catch (const std::exception&) {
                out.outcome = ExecOutcome::kCrash;
                return out;
            }
            if (!check_topo_order(g, order)) {
                out.outcome = ExecOutcome::kCrash;
                return out;
            }
        } else {
            order = random_topo_order(g, rng_);
        }
        Bytes order_wire = encode_order(order);
        state_ = mix(state_, "vpost_taskgraph", {req.op, order_wire});
        out.result = reply_bytes(state_, params_.reply_size);
        out.recorded.set(kNdVpost, std::move(order_wire));
        return out;
    }
};

Bytes encode_cells(const std::vector<uint64_t>& cells) {
    ByteWriter w;
    w.u32(uint32_t(cells.size()));
    for (uint64_t c : cells) w.u64(c);
    return w.take();
}

std::vector<uint64_t> decode_cells(ByteView snap) {
    ByteReader r(snap);
    uint32_t n = r.count(1024);
    std::vector<uint64_t> out;
    out.reserve(n);
    for (uint32_t i = 0; i < n; i++) out.push_back(r.u64());
    r.expect_done();
    return out;
}

// Shared record/replay core for the counter-based services. Runs the
// embedded schedule semantics against `cells` and reports what happened.
struct CounterRun {
    ExecOutcome outcome = ExecOutcome::kOk;
    std::vector<ndc::Grant> grants;
};

CounterRun run_counter(const CounterProgram& prog, const Bytes* grant_seg,
                       std::vector<uint64_t>& cells, std::mt19937_64& rng) {
    CounterRun out;
    if (prog.cells != cells.size()) {
        out.outcome = ExecOutcome::kCrash;
        return out;
    }
    if (grant_seg) {
        try {
            out.grants = ndc::decode_grants(*grant_seg);
        } catch (const std::exception&) {
            out.outcome = ExecOutcome::kCrash;
            return out;
        }
        switch (counter_replay(prog, out.grants, cells)) {
            case CounterReplay::kOk:
                break;
            case CounterReplay::kMismatch:
                out.outcome = ExecOutcome::kCrash;
                return out;
            case CounterReplay::kUnderfund:
                out.outcome = ExecOutcome::kBudgetExhausted;
                return out;
        }
    } else {
        out.grants = counter_record(prog, cells, rng);
    }
    return out;
}

ndc::OrderCheck counter_pre_replay(const CounterProgram& prog, const Bytes* grant_seg) {
    if (!grant_seg) return {ndc::OrderVerdict::kOk, 0, {}};
    std::vector<ndc::Grant> grants;
    try {
        grants = ndc::decode_grants(*grant_seg);
    } catch (const std::exception&) {
        return {ndc::OrderVerdict::kInvalidOrder, 0, {}};
    }
    return ndc::check_grant_order(counter_lock_programs(prog), grants);
}

class NpostCounterApp : public AppContract {
  public:
    explicit NpostCounterApp(const AppParams& params)
        : params_(params), rng_(params.rng_seed),
          cells_(counter_initial_state(kCounterCells)) {}

    std::string_view name() const override { return "npost_counter"; }
    NdTypeMask mask_of(ByteView) const override { return kNdNpost; }

    ProposeResult propose_value(const AppRequest&) override {
        return {kNdNpost, {}};
    }

    CheckVerdict check_value(const AppRequest&, NdTypeMask mask,
                             const NdPayload&) override {
        return mask == kNdNpost ? CheckVerdict::kAccept : CheckVerdict::kTypeMismatch;
    }

    ndc::OrderCheck pre_replay_check(const AppRequest& req,
                                     const NdPayload& resolved) override {
        CounterProgram prog;
        try {
            prog = decode_counter_program(req.op);
        } catch (const std::exception&) {
            return {ndc::OrderVerdict::kInvalidOrder, 0, {}};
        }
        return counter_pre_replay(prog, resolved.find(kNdNpost));
    }

    ExecResult execute(const AppRequest& req, const NdPayload& resolved) override {
        ExecResult out;
        CounterProgram prog;
        try {
            prog = decode_counter_program(req.op);
        } catch (const std::exception&) {
            out.outcome = ExecOutcome::kCrash;
            return out;
        }
        CounterRun run = run_counter(prog, resolved.find(kNdNpost), cells_, rng_);
        out.outcome = run.outcome;
        if (out.outcome != ExecOutcome::kOk) return out;
        Bytes grant_wire = ndc::encode_grants(run.grants);
        Hasher h;
        h.update(to_bytes("counter")).update(encode_cells(cells_)).update(grant_wire);
        out.result = expand_digest(h.finish(), params_.reply_size);
        out.recorded.set(kNdNpost, std::move(grant_wire));
        return out;
    }

    Bytes snapshot() const override { return encode_cells(cells_); }
    void restore(ByteView snap) override { cells_ = decode_cells(snap); }

  private:
    AppParams params_;
    std::mt19937_64 rng_;
    std::vector<uint64_t> cells_;
};

// Lottery state update plus counter execution in one request.
class CompositeDemoApp : public AppContract {
  public:
    explicit CompositeDemoApp(const AppParams& params)
        : params_(params), rng_(params.rng_seed),
          cells_(counter_initial_state(kCounterCells)) {}

    std::string_view name() const override { return "composite_demo"; }
    NdTypeMask mask_of(ByteView) const override { return kNdNpre | kNdNpost; }

    ProposeResult propose_value(const AppRequest&) override {
        ProposeResult out;
        out.mask = kNdNpre | kNdNpost;
        out.payload.set(kNdNpre, rng_bytes(rng_, 32));
        return out;
    }

    CheckVerdict check_value(const AppRequest&, NdTypeMask mask,
                             const NdPayload&) override {
        return mask == (kNdNpre | kNdNpost) ? CheckVerdict::kAccept
                                            : CheckVerdict::kTypeMismatch;
    }

    ndc::OrderCheck pre_replay_check(const AppRequest& req,
                                     const NdPayload& resolved) override {
        CounterProgram prog;
        try {
            prog = embedded_program(req.op);
        } catch (const std::exception&) {
            return {ndc::OrderVerdict::kInvalidOrder, 0, {}};
        }
        return counter_pre_replay(prog, resolved.find(kNdNpost));
    }

    ExecResult execute(const AppRequest& req, const NdPayload& resolved) override {
        ExecResult out;
        CounterProgram prog;
        try {
            prog = embedded_program(req.op);
        } catch (const std::exception&) {
            out.outcome = ExecOutcome::kCrash;
            return out;
        }
        const Bytes* set = resolved.find(kNdNpre);
        if (!set) {
            out.outcome = ExecOutcome::kCrash;
            return out;
        }
        Digest combined;
        try {
            combined = npre_combine(decode_decision_values(*set), params_.f);
        } catch (const std::exception&) {
            out.outcome = ExecOutcome::kCrash;
            return out;
        }
        CounterRun run = run_counter(prog, resolved.find(kNdNpost), cells_, rng_);
        out.outcome = run.outcome;
        if (out.outcome != ExecOutcome::kOk) return out;
        Bytes grant_wire = ndc::encode_grants(run.grants);
        lottery_ = mix(lottery_, "composite", {combined.bytes});
        Hasher h;
        h.update(lottery_.bytes).update(encode_cells(cells_)).update(grant_wire);
        out.result = expand_digest(h.finish(), params_.reply_size);
        out.recorded.set(kNdNpost, std::move(grant_wire));
        return out;
    }

    Bytes snapshot() const override {
        ByteWriter w;
        w.raw(ByteView(lottery_.bytes.data(), lottery_.bytes.size()));
        w.raw(encode_cells(cells_));
        return w.take();
    }
    void restore(ByteView snap) override {
        if (snap.size() < 32) throw std::invalid_argument("bad snapshot size");
        std::copy(snap.begin(), snap.begin() + 32, lottery_.bytes.begin());
        cells_ = decode_cells(snap.subspan(32));
    }

    static CounterProgram embedded_program(ByteView op) {
        ByteReader r(op);
        Bytes prog = r.blob();
        r.blob();  // padding
        r.expect_done();
        return decode_counter_program(prog);
    }

  private:
    AppParams params_;
    std::mt19937_64 rng_;
    Digest lottery_;
    std::vector<uint64_t> cells_;
};

// Configurable-mask service for benchmarks and mask-matrix scenarios.
// Verifiable segments are hash-recomputable from request context;
// non-verifiable segments come from the replica-local RNG.
class SyntheticApp : public DigestStateApp {
  public:
    using DigestStateApp::DigestStateApp;

    std::string_view name() const override { return "synthetic"; }
    NdTypeMask mask_of(ByteView) const override { return params_.mask; }

    ProposeResult propose_value(const AppRequest& req) override {
        ProposeResult out;
        out.mask = params_.mask;
        if (mask_has(params_.mask, kNdVpre))
            out.payload.set(kNdVpre, vpre_value(req));
        if (mask_has(params_.mask, kNdNpre))
            out.payload.set(kNdNpre, rng_bytes(rng_, params_.npre_size));
        return out;
    }

    CheckVerdict check_value(const AppRequest& req, NdTypeMask mask,
                             const NdPayload& payload) override {
        if (mask != params_.mask) return CheckVerdict::kTypeMismatch;
        if (const Bytes* v = payload.find(kNdVpre)) {
            if (*v != vpre_value(req)) return CheckVerdict::kValueRejected;
        }
        if (const Bytes* v = payload.find(kNdVpost)) {
            if (*v != vpost_value(req)) return CheckVerdict::kValueRejected;
        }
        return CheckVerdict::kAccept;
    }

    ExecResult execute(const AppRequest& req, const NdPayload& resolved) override {
        ExecResult out;
        Hasher h;
        h.update(state_.bytes).update(to_bytes("synthetic")).update(req.op);
        for (NdClass c : {kNdVpre, kNdNpre}) {
            if (!mask_has(params_.mask, c)) continue;
            const Bytes* v = resolved.find(c);
            if (!v) {
                out.outcome = ExecOutcome::kCrash;
                return out;
            }
            h.update(*v);
        }
        if (mask_has(params_.mask, kNdVpost)) {
            const Bytes* v = resolved.find(kNdVpost);
            Bytes value = v ? *v : vpost_value(req);
            if (v && *v != vpost_value(req)) {
                out.outcome = ExecOutcome::kCrash;
                return out;
            }
            h.update(value);
            out.recorded.set(kNdVpost, std::move(value));
        }
        if (mask_has(params_.mask, kNdNpost)) {
            const Bytes* v = resolved.find(kNdNpost);
            Bytes value = v ? *v : rng_bytes(rng_, params_.npost_size);
            h.update(value);
            out.recorded.set(kNdNpost, std::move(value));
        }
        state_ = h.finish();
        out.result = reply_bytes(state_, params_.reply_size);
        return out;
    }

  private:
    Bytes vpre_value(const AppRequest& req) const {
        Hasher h;
        h.update(to_bytes("syn-vpre")).update_u64(req.view).update_u64(req.seq)
            .update(req.req_digest.bytes);
        return expand_digest(h.finish(), params_.vpre_size);
    }
    Bytes vpost_value(const AppRequest& req) const {
        Hasher h;
        h.update(to_bytes("syn-vpost")).update(req.req_digest.bytes);
        return expand_digest(h.finish(), params_.vpost_size);
    }
};

}  // namespace

std::unique_ptr<AppContract> make_app(const std::string& name, const AppParams& params) {
    if (name == "vpre_rand") return std::make_unique<VpreRandApp>(params);
    if (name == "npre_lottery") return std::make_unique<NpreLotteryApp>(params);
    if (name == "vpost_taskgraph") return std::make_unique<VpostTaskgraphApp>(params);
    if (name == "npost_counter") return std::make_unique<NpostCounterApp>(params);
    if (name == "composite_demo") return std::make_unique<CompositeDemoApp>(params);
    if (name == "synthetic") return std::make_unique<SyntheticApp>(params);
    throw std::invalid_argument("unknown application: " + name);
}

const std::vector<std::string>& app_names() {
    static const std::vector<std::string> names = {
        "vpre_rand",      "npre_lottery",   "vpost_taskgraph",
        "npost_counter",  "composite_demo", "synthetic",
    };
    return names;
}

Bytes gen_op(const std::string& name, std::mt19937_64& rng, const OpGenParams& params) {
    if (name == "vpre_rand" || name == "npre_lottery" || name == "synthetic")
        return rng_bytes(rng, std::max<size_t>(params.req_size, 8));
    if (name == "vpost_taskgraph")
        return encode_task_graph(gen_task_graph(rng), params.req_size);
    if (name == "npost_counter")
        return encode_counter_program(gen_counter_program(rng));
    if (name == "composite_demo") {
        ByteWriter w;
        Bytes prog = encode_counter_program(gen_counter_program(rng));
        size_t used = prog.size() + 8;
        w.blob(prog);
        w.blob(Bytes(params.req_size > used ? params.req_size - used : 0, 0));
        return w.take();
    }
    throw std::invalid_argument("unknown application: " + name);
}

}  // namespace ndbft::app
