#include "simnet/scenario.hpp"

#include <set>
#include <stdexcept>

#include "appkit/app.hpp"
#include "json.hpp"

namespace ndbft::sim {

namespace {

constexpr int kSchemaVersion = 1;

const struct {
    Behavior b;
    const char* name;
} kBehaviors[] = {
    {Behavior::kWrongVpreValue, "WRONG_VPRE_VALUE"},
    {Behavior::kWrongNdType, "WRONG_ND_TYPE"},
    {Behavior::kEquivocatePrePrepare, "EQUIVOCATE_PRE_PREPARE"},
    {Behavior::kForgePpuEntry, "FORGE_PPU_ENTRY"},
    {Behavior::kOmitPpuDecision, "OMIT_PPU_DECISION"},
    {Behavior::kWrongPostndValues, "WRONG_POSTND_VALUES"},
    {Behavior::kWrongReplyDigest, "WRONG_REPLY_DIGEST"},
    {Behavior::kDeadlockOrder, "DEADLOCK_ORDER"},
    {Behavior::kCrashOrder, "CRASH_ORDER"},
    {Behavior::kCrashReplica, "CRASH_REPLICA"},
    {Behavior::kCorruptReply, "CORRUPT_REPLY"},
};

}  // namespace

const char* behavior_name(Behavior b) {
    for (const auto& e : kBehaviors)
        if (e.b == b) return e.name;
    return "?";
}

Behavior behavior_from_name(const std::string& s) {
    for (const auto& e : kBehaviors)
        if (s == e.name) return e.b;
    throw std::invalid_argument("unknown fault behavior: " + s);
}

ProtocolConfig Scenario::to_config() const {
    ProtocolConfig cfg;
    cfg.f = f;
    cfg.optimized = optimized;
    return cfg;
}

void Scenario::validate() const {
    const auto& names = app::app_names();
    if (std::find(names.begin(), names.end(), app) == names.end())
        throw std::invalid_argument("unknown application: " + app);
    if (!mask_valid(mask))
        throw std::invalid_argument("nd mask uses reserved bits");
    if (app != "synthetic" && mask != 0)
        throw std::invalid_argument("mask is configurable for the synthetic app only");
    if (workload.clients == 0)
        throw std::invalid_argument("workload needs at least one client");
    if (workload.requests_per_client == 0)
        throw std::invalid_argument("workload needs at least one request per client");
    if (workload.request_size == 0 || workload.nd_size == 0)
        throw std::invalid_argument("workload sizes must be positive");
    if (link.loss < 0.0 || link.loss >= 1.0)
        throw std::invalid_argument("loss probability must lie in [0, 1)");
    if (max_virtual_us == 0)
        throw std::invalid_argument("max_virtual_us must be positive");

    const uint32_t n = replica_count(f);
    std::set<ReplicaId> scripted;
    for (const auto& fc : faults) {
        if (fc.replica >= n)
            throw std::invalid_argument("fault clause names a replica outside 0..n-1");
        if (fc.from_seq == 0 || fc.from_seq > fc.to_seq)
            throw std::invalid_argument("fault clause has an empty sequence window");
        scripted.insert(fc.replica);
    }
    if (scripted.size() > f)
        throw std::invalid_argument("more than f replicas carry fault scripts");
}

std::string Scenario::to_json() const {
    nlohmann::json j;
    j["version"] = kSchemaVersion;
    j["f"] = f;
    j["app"] = app;
    j["mask"] = mask_name(mask);
    j["optimized"] = optimized;
    j["link"] = {{"delay_us", link.delay_us},
                 {"jitter_us", link.jitter_us},
                 {"loss", link.loss},
                 {"per_byte_ns", link.per_byte_ns}};
    j["workload"] = {{"clients", workload.clients},
                     {"requests_per_client", workload.requests_per_client},
                     {"request_size", workload.request_size},
                     {"nd_size", workload.nd_size},
                     {"think_time_us", workload.think_time_us},
                     {"think_jitter_us", workload.think_jitter_us}};
    j["faults"] = nlohmann::json::array();
    for (const auto& fc : faults) {
        nlohmann::json e;
        e["replica"] = fc.replica;
        e["behavior"] = behavior_name(fc.behavior);
        if (fc.from_seq != 1) e["from_seq"] = fc.from_seq;
        if (fc.to_seq != std::numeric_limits<SeqNum>::max()) e["to_seq"] = fc.to_seq;
        if (fc.at_time_us != 0) e["at_time_us"] = fc.at_time_us;
        j["faults"].push_back(e);
    }
    j["max_virtual_us"] = max_virtual_us;
    return j.dump(2);
}

Scenario Scenario::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("scenario is not valid JSON: ") +
                                    e.what());
    }
    Scenario s;
    try {
        if (j.at("version").get<int>() != kSchemaVersion)
            throw std::invalid_argument("unsupported scenario schema version");
        s.f = j.at("f").get<uint32_t>();
        s.app = j.value("app", std::string("synthetic"));
        s.mask = mask_from_name(j.value("mask", std::string("0")));
        s.optimized = j.value("optimized", false);
        if (j.contains("link")) {
            const auto& l = j["link"];
            s.link.delay_us = l.value("delay_us", s.link.delay_us);
            s.link.jitter_us = l.value("jitter_us", s.link.jitter_us);
            s.link.loss = l.value("loss", s.link.loss);
            s.link.per_byte_ns = l.value("per_byte_ns", s.link.per_byte_ns);
        }
        if (j.contains("workload")) {
            const auto& w = j["workload"];
            s.workload.clients = w.value("clients", s.workload.clients);
            s.workload.requests_per_client =
                w.value("requests_per_client", s.workload.requests_per_client);
            s.workload.request_size = w.value("request_size", s.workload.request_size);
            s.workload.nd_size = w.value("nd_size", s.workload.nd_size);
            s.workload.think_time_us =
                w.value("think_time_us", s.workload.think_time_us);
            s.workload.think_jitter_us =
                w.value("think_jitter_us", s.workload.think_jitter_us);
        }
        for (const auto& e : j.value("faults", nlohmann::json::array())) {
            FaultClause fc;
            fc.replica = e.at("replica").get<ReplicaId>();
            fc.behavior = behavior_from_name(e.at("behavior").get<std::string>());
            fc.from_seq = e.value("from_seq", fc.from_seq);
            fc.to_seq = e.value("to_seq", fc.to_seq);
            fc.at_time_us = e.value("at_time_us", fc.at_time_us);
            s.faults.push_back(fc);
        }
        s.max_virtual_us = j.value("max_virtual_us", s.max_virtual_us);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("scenario schema violation: ") +
                                    e.what());
    }
    s.validate();
    return s;
}

}  // namespace ndbft::sim
