#include "client/client.hpp"

#include "core/digest.hpp"

namespace ndbft::client {

Client::Client(const ProtocolConfig& cfg, ClientId id, const KeyStore* keys,
               engine::Services* services)
    : cfg_(cfg), id_(id), keys_(keys), svc_(services) {}

void Client::invoke(Bytes op) {
    busy_ = true;
    ++current_rid_;
    current_request_ = make_request(id_, current_rid_, std::move(op), cfg_.epoch);
    seal(current_request_, *keys_, cfg_.auth_mode);
    reply_digests_.clear();
    results_.clear();
    invoked_at_us_ = svc_->now_us();
    deadline_us_ = invoked_at_us_ + cfg_.client_deadline_us;
    retry_interval_us_ = cfg_.client_retry_us;

    svc_->send(cfg_.primary(), current_request_);
    svc_->set_timer(invoked_at_us_ + retry_interval_us_,
                    engine::timer_token(engine::TimerKind::kClientRetry, current_rid_));
}

void Client::on_message(const ProtocolMessage& msg) {
    if (!busy_ || msg.type != MsgType::kReply) return;
    if (msg.header.epoch != cfg_.epoch) return;
    const NodeId sender = msg.header.sender;
    if (is_client_node(sender) || sender >= cfg_.n()) return;
    if (!verify_seal(msg, *keys_, node())) return;

    const auto& body = msg.as<ReplyBody>();
    if (body.client != id_ || body.request_id != current_rid_) return;

    const Digest digest = sha256(body.result);
    reply_digests_.emplace(static_cast<ReplicaId>(sender), digest);
    results_.emplace(digest, body.result);

    std::map<Digest, uint32_t> tally;
    for (const auto& [replica, d] : reply_digests_) ++tally[d];
    for (const auto& [d, count] : tally) {
        if (count >= cfg_.f + 1) {
            finish(&results_.at(d));
            return;
        }
    }
}

void Client::on_timer(uint64_t token) {
    if (engine::timer_kind(token) != engine::TimerKind::kClientRetry) return;
    if (!busy_ || engine::timer_payload(token) != current_rid_) return;

    const uint64_t now = svc_->now_us();
    if (now >= deadline_us_) {
        finish(nullptr);
        return;
    }
    // Retransmit to everyone; backups relay to the primary and can serve a
    // cached reply for an already-delivered request.
    for (ReplicaId r = 0; r < cfg_.n(); ++r) svc_->send(r, current_request_);
    retry_interval_us_ *= 2;
    svc_->set_timer(std::min(now + retry_interval_us_, deadline_us_),
                    engine::timer_token(engine::TimerKind::kClientRetry, current_rid_));
}

void Client::finish(const Bytes* result) {
    busy_ = false;
    if (result) {
        ++completed_;
        latencies_us_.push_back(svc_->now_us() - invoked_at_us_);
        last_result_ = *result;
        if (on_complete) on_complete(current_rid_, *result);
    } else {
        ++failed_;
        last_result_.reset();
        if (on_complete) on_complete(current_rid_, Bytes{});
    }
}

} // namespace ndbft::client
