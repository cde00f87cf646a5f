#pragma once

#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "core/digest.hpp"
#include "core/nd.hpp"
#include "core/types.hpp"
#include "ndcontrol/deadlock.hpp"

namespace ndbft::app {

// Context handed to every application upcall.
struct AppRequest {
    ViewNum view = 0;
    SeqNum seq = 0;
    Digest req_digest;
    ByteView op;
};

struct ProposeResult {
    NdTypeMask mask = 0;
    NdPayload payload;  // pre-determinable segments only
};

enum class CheckVerdict : uint8_t {
    kAccept,
    kTypeMismatch,   // proposed mask disagrees with the app's own mask
    kValueRejected,  // a verifiable segment failed recomputation/validation
};

enum class ExecOutcome : uint8_t {
    kOk,
    kCrash,            // simulated crash during execution
    kBudgetExhausted,  // simulated hang; the watchdog budget elapses
};

struct ExecResult {
    ExecOutcome outcome = ExecOutcome::kOk;
    Bytes result;
    NdPayload recorded;     // post-determined segments this execution used
    uint64_t cost_us = 10;  // simulated execution time
};

// The upcall surface each replicated service implements. Engines call these
// from a single logical thread; all request-visible state must live inside
// snapshot scope.
//
// `execute` receives the agreed pre-determinable segments in `resolved`
// (for NPRE, the canonical encoding of the full 2f+1 decision set). When the
// mask has post-determinable bits and `resolved` lacks those segments, the
// application is running in the recording role and must generate them; when
// they are present it must replay them exactly.
class AppContract {
  public:
    virtual ~AppContract() = default;

    virtual std::string_view name() const = 0;
    virtual NdTypeMask mask_of(ByteView op) const = 0;

    virtual ProposeResult propose_value(const AppRequest& req) = 0;
    virtual CheckVerdict check_value(const AppRequest& req, NdTypeMask mask,
                                     const NdPayload& payload) = 0;

    // Deadlock analysis of a prescribed schedule before replay. Default: no
    // schedule semantics, nothing to analyze.
    virtual ndc::OrderCheck pre_replay_check(const AppRequest& req,
                                             const NdPayload& resolved) {
        (void)req;
        (void)resolved;
        return {ndc::OrderVerdict::kOk, 0, {}};
    }

    virtual ExecResult execute(const AppRequest& req, const NdPayload& resolved) = 0;

    virtual Bytes snapshot() const = 0;
    virtual void restore(ByteView snap) = 0;
};

struct AppParams {
    uint32_t f = 1;
    ReplicaId replica = 0;
    uint64_t rng_seed = 1;
    // Synthetic app: which classes it exercises and the value size per class.
    NdTypeMask mask = 0;
    size_t vpre_size = 32;
    size_t npre_size = 32;
    size_t vpost_size = 32;
    size_t npost_size = 32;
    size_t reply_size = 32;
};

// Factory over the registered application names:
//   vpre_rand, npre_lottery, vpost_taskgraph, npost_counter,
//   composite_demo, synthetic.
// Throws std::invalid_argument for unknown names.
std::unique_ptr<AppContract> make_app(const std::string& name, const AppParams& params);
const std::vector<std::string>& app_names();

// Deterministic request-operation generator for the named app, driven by the
// caller's RNG. `req_size` pads the op up to a target size where the app's
// layout allows it.
struct OpGenParams {
    size_t req_size = 64;
};
Bytes gen_op(const std::string& name, std::mt19937_64& rng, const OpGenParams& params);

// The lottery combiner: SHA-256 over the shares concatenated in ascending
// proposer order. Throws std::invalid_argument unless exactly 2f+1 shares.
Digest npre_combine(std::vector<std::pair<ReplicaId, Bytes>> shares, uint32_t f);

}  // namespace ndbft::app
