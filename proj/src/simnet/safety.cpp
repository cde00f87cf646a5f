#include "simnet/safety.hpp"

#include "engine/trace.hpp"

namespace ndbft::sim {

SafetyReport check_safety(const std::vector<std::string>& trace,
                          const std::set<ReplicaId>& correct) {
    SafetyReport report;
    std::map<ReplicaId, uint64_t> emitted;
    std::map<ReplicaId, uint64_t> trailer;

    for (const auto& line : trace) {
        engine::TraceRecord rec;
        if (!engine::parse_trace_line(line, rec)) {
            report.errors.push_back("unparseable trace line: " + line);
            continue;
        }
        if (!rec.has("r")) {
            report.errors.push_back("trace line without a replica id: " + line);
            continue;
        }
        const auto r = static_cast<ReplicaId>(rec.num("r"));
        if (rec.kind == 'T') {
            trailer[r] = rec.num("records");
            continue;
        }
        ++emitted[r];
        if (!correct.count(r)) continue;

        if (rec.kind == 'D') {
            const auto seq = rec.num("s");
            DeliveryRecord d{rec.text("req"), rec.text("nd"), rec.text("res"),
                             rec.text("st")};
            auto [it, inserted] = report.deliveries[seq].emplace(r, d);
            if (!inserted && !(it->second == d))
                report.violations.push_back(
                    {seq, "replica " + std::to_string(r) +
                              " delivered the same sequence twice with different "
                              "contents"});
        } else if (rec.kind == 'S') {
            report.suspicions.push_back(
                {r, rec.num("s"), rec.text("reason")});
        }
    }

    for (ReplicaId r : correct) {
        auto t = trailer.find(r);
        if (t == trailer.end()) {
            report.truncated = true;
            report.errors.push_back("replica " + std::to_string(r) +
                                    " has no trace trailer");
        } else if (t->second != emitted[r]) {
            report.truncated = true;
            report.errors.push_back(
                "replica " + std::to_string(r) + " trailer claims " +
                std::to_string(t->second) + " records, trace holds " +
                std::to_string(emitted[r]));
        }
    }

    for (const auto& [seq, per_replica] : report.deliveries) {
        if (per_replica.size() < 2) continue;
        const auto& [first_r, first] = *per_replica.begin();
        for (auto it = std::next(per_replica.begin()); it != per_replica.end();
             ++it) {
            const auto& [r, d] = *it;
            std::string field;
            if (d.req != first.req)
                field = "request digest";
            else if (d.nd != first.nd)
                field = "nondeterminism data";
            else if (d.res != first.res)
                field = "result digest";
            else if (d.st != first.st)
                field = "state digest";
            if (!field.empty()) {
                report.violations.push_back(
                    {seq, "replicas " + std::to_string(first_r) + " and " +
                              std::to_string(r) + " disagree on " + field});
                break;  // one violation per sequence number
            }
        }
    }
    return report;
}

}  // namespace ndbft::sim
