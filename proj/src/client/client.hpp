#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "core/messages.hpp"
#include "core/protocol_config.hpp"
#include "engine/services.hpp"

namespace ndbft::client {

// A closed-loop protocol client: one outstanding request at a time, completed
// when f+1 replicas reply with byte-identical results. The digest is computed
// locally from each reply's result bytes; the replica-supplied digest field is
// never trusted. Requests go to the primary first and are broadcast to all
// replicas on retransmission, doubling the interval up to a hard deadline.
class Client {
  public:
    Client(const ProtocolConfig& cfg, ClientId id, const KeyStore* keys,
           engine::Services* services);

    // Starts a new request. Precondition: !busy().
    void invoke(Bytes op);

    void on_message(const ProtocolMessage& msg);
    void on_timer(uint64_t token);

    ClientId id() const { return id_; }
    NodeId node() const { return client_node(id_); }
    bool busy() const { return busy_; }
    uint64_t completed() const { return completed_; }
    uint64_t failed() const { return failed_; }
    const std::vector<uint64_t>& latencies_us() const { return latencies_us_; }
    const std::optional<Bytes>& last_result() const { return last_result_; }

    // Invoked on completion with (request_id, result). Failures (deadline
    // exceeded) invoke it with an empty result.
    std::function<void(uint64_t, const Bytes&)> on_complete;

  private:
    void finish(const Bytes* result);

    ProtocolConfig cfg_;
    ClientId id_;
    const KeyStore* keys_;
    engine::Services* svc_;

    bool busy_ = false;
    uint64_t current_rid_ = 0;
    ProtocolMessage current_request_;
    uint64_t invoked_at_us_ = 0;
    uint64_t deadline_us_ = 0;
    uint64_t retry_interval_us_ = 0;

    // Per-replica reply digests for the current request, plus the result
    // bytes behind each digest value.
    std::map<ReplicaId, Digest> reply_digests_;
    std::map<Digest, Bytes> results_;

    uint64_t completed_ = 0;
    uint64_t failed_ = 0;
    std::vector<uint64_t> latencies_us_;
    std::optional<Bytes> last_result_;
};

} // namespace ndbft::client
