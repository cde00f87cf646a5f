#include "bench/bench.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "core/messages.hpp"

namespace ndbft::bench {

namespace {

// Nearest-rank percentile over the sorted latency list.
uint64_t percentile(const std::vector<uint64_t>& sorted, uint32_t p) {
    if (sorted.empty()) return 0;
    size_t rank = (sorted.size() * p + 99) / 100;
    if (rank == 0) rank = 1;
    return sorted[rank - 1];
}

sim::Scenario point_scenario(const BenchConfig& config, NdTypeMask mask,
                             size_t nd_size, uint32_t clients) {
    sim::Scenario sc;
    sc.f = config.f;
    sc.app = "synthetic";
    sc.mask = mask;
    sc.optimized = config.optimized;
    sc.link = config.link;
    sc.workload.clients = clients;
    sc.workload.requests_per_client = config.iterations;
    sc.workload.request_size = config.request_size;
    sc.workload.nd_size = nd_size;
    sc.workload.think_time_us = config.think_time_us;
    sc.workload.think_jitter_us = config.think_jitter_us;
    // Generous ceiling: fault-free runs drain their event queue long before,
    // so the only effect is to keep very large sweeps from being cut short.
    uint64_t total = uint64_t(clients) * config.iterations;
    sc.max_virtual_us = std::max(sc.max_virtual_us, total * 1'000'000);
    return sc;
}

}  // namespace

void BenchConfig::validate() const {
    if (masks.empty()) throw std::invalid_argument("mask sweep is empty");
    for (NdTypeMask m : masks)
        if (!mask_valid(m))
            throw std::invalid_argument("nd mask uses reserved bits");
    if (nd_sizes.empty()) throw std::invalid_argument("nd size sweep is empty");
    for (size_t s : nd_sizes)
        if (s == 0) throw std::invalid_argument("nd value size must be positive");
    if (client_counts.empty())
        throw std::invalid_argument("client sweep is empty");
    for (uint32_t c : client_counts)
        if (c == 0) throw std::invalid_argument("client count must be positive");
    if (request_size == 0)
        throw std::invalid_argument("request size must be positive");
    if (iterations == 0)
        throw std::invalid_argument("iteration count must be at least 1");
    if (link.loss < 0.0 || link.loss >= 1.0)
        throw std::invalid_argument("loss probability must lie in [0, 1)");
}

double piggyback_ratio(const engine::ReplicaCounters& totals) {
    uint64_t entries = totals.entries_piggybacked + totals.entries_null_carried +
                       totals.entries_standalone;
    if (entries == 0) return 0.0;
    return double(totals.entries_piggybacked) / double(entries);
}

double closed_loop_concurrency(const BenchRow& row, const BenchConfig& config) {
    double think_us =
        double(config.think_time_us) + double(config.think_jitter_us) / 2.0;
    return row.throughput_rps * (row.mean_latency_us + think_us) / 1e6;
}

BenchResult bench(const BenchConfig& config) {
    config.validate();
    BenchResult result;
    result.config = config;

    for (NdTypeMask mask : config.masks) {
        for (size_t nd_size : config.nd_sizes) {
            for (uint32_t clients : config.client_counts) {
                sim::Scenario sc = point_scenario(config, mask, nd_size, clients);
                sim::RunResult run = sim::run_scenario(sc, config.seed);
                if (!run.report.clean())
                    throw std::runtime_error(
                        "safety check failed during benchmark point mask=" +
                        mask_name(mask) + " clients=" + std::to_string(clients));

                BenchRow row;
                row.mask = mask;
                row.nd_size = nd_size;
                row.clients = clients;
                row.nd_bytes_total =
                    nd_size * size_t(std::popcount(unsigned(mask)));
                row.completed = run.metrics.completed;
                row.duration_us = run.metrics.duration_us;
                row.msgs_total = run.metrics.msgs_total;
                row.bytes_total = run.metrics.bytes_total;
                row.per_type = run.metrics.per_tag;
                row.piggyback_ratio = piggyback_ratio(run.metrics.replica_totals);

                std::vector<uint64_t> lat = run.metrics.latencies_us;
                std::sort(lat.begin(), lat.end());
                if (!lat.empty())
                    row.mean_latency_us =
                        double(std::accumulate(lat.begin(), lat.end(),
                                               uint64_t{0})) /
                        double(lat.size());
                row.p50_latency_us = percentile(lat, 50);
                row.p99_latency_us = percentile(lat, 99);
                if (row.duration_us > 0)
                    row.throughput_rps =
                        double(row.completed) * 1e6 / double(row.duration_us);

                result.rows.push_back(std::move(row));
            }
        }
    }
    return result;
}

std::string to_csv(const BenchResult& result) {
    std::string out =
        "mask,nd_size,clients,mean_latency_us,p99_latency_us,throughput_rps,"
        "msgs_total,bytes_total,piggyback_ratio\n";
    char buf[256];
    for (const BenchRow& row : result.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%zu,%u,%.3f,%llu,%.3f,%llu,%llu,%.4f\n",
                      mask_name(row.mask).c_str(), row.nd_size, row.clients,
                      row.mean_latency_us,
                      static_cast<unsigned long long>(row.p99_latency_us),
                      row.throughput_rps,
                      static_cast<unsigned long long>(row.msgs_total),
                      static_cast<unsigned long long>(row.bytes_total),
                      row.piggyback_ratio);
        out += buf;
    }
    return out;
}

std::string to_json(const BenchResult& result) {
    nlohmann::json j;
    const BenchConfig& c = result.config;
    nlohmann::json masks = nlohmann::json::array();
    for (NdTypeMask m : c.masks) masks.push_back(mask_name(m));
    j["config"] = {{"masks", masks},
                   {"nd_sizes", c.nd_sizes},
                   {"clients", c.client_counts},
                   {"request_size", c.request_size},
                   {"iterations", c.iterations},
                   {"f", c.f},
                   {"optimized", c.optimized},
                   {"seed", c.seed},
                   {"link",
                    {{"delay_us", c.link.delay_us},
                     {"jitter_us", c.link.jitter_us},
                     {"loss", c.link.loss},
                     {"per_byte_ns", c.link.per_byte_ns}}},
                   {"think_time_us", c.think_time_us},
                   {"think_jitter_us", c.think_jitter_us}};

    nlohmann::json rows = nlohmann::json::array();
    for (const BenchRow& row : result.rows) {
        nlohmann::json per_type;
        for (const auto& [type, stats] : row.per_type)
            per_type[msg_type_name(type)] = {{"msgs", stats.msgs},
                                             {"bytes", stats.bytes}};
        rows.push_back({{"mask", mask_name(row.mask)},
                        {"nd_size", row.nd_size},
                        {"clients", row.clients},
                        {"nd_bytes_total", row.nd_bytes_total},
                        {"mean_latency_us", row.mean_latency_us},
                        {"p50_latency_us", row.p50_latency_us},
                        {"p99_latency_us", row.p99_latency_us},
                        {"throughput_rps", row.throughput_rps},
                        {"msgs_total", row.msgs_total},
                        {"bytes_total", row.bytes_total},
                        {"piggyback_ratio", row.piggyback_ratio},
                        {"completed", row.completed},
                        {"duration_us", row.duration_us},
                        {"per_type", per_type}});
    }
    j["rows"] = rows;
    return j.dump(2) + "\n";
}

void write_outputs(const BenchResult& result, const std::string& prefix) {
    auto write = [](const std::string& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        out << text;
        if (!out) throw std::runtime_error("cannot write " + path);
    };
    write(prefix + ".csv", to_csv(result));
    write(prefix + ".json", to_json(result));
}

}  // namespace ndbft::bench
