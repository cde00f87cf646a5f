#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bench/bench.hpp"

using namespace ndbft;

namespace {

// Small single-point sweep; cases tweak fields as needed.
bench::BenchConfig small_config() {
    bench::BenchConfig c;
    c.masks = {0};
    c.nd_sizes = {64};
    c.client_counts = {2};
    c.request_size = 256;
    c.iterations = 10;
    c.seed = 7;
    return c;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, sep)) out.push_back(field);
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("config validation rejects each bad field") {
    auto bad = [](auto&& tweak) {
        bench::BenchConfig c = small_config();
        tweak(c);
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    };
    bad([](bench::BenchConfig& c) { c.masks.clear(); });
    bad([](bench::BenchConfig& c) { c.masks = {0x10}; });
    bad([](bench::BenchConfig& c) { c.nd_sizes.clear(); });
    bad([](bench::BenchConfig& c) { c.nd_sizes = {0}; });
    bad([](bench::BenchConfig& c) { c.client_counts.clear(); });
    bad([](bench::BenchConfig& c) { c.client_counts = {0}; });
    bad([](bench::BenchConfig& c) { c.request_size = 0; });
    bad([](bench::BenchConfig& c) { c.iterations = 0; });
    bad([](bench::BenchConfig& c) { c.link.loss = 1.5; });
    CHECK_NOTHROW(small_config().validate());
}

TEST_CASE("sweep emits one row per point in sweep order") {
    bench::BenchConfig c = small_config();
    c.masks = {0, kNdNpre};
    c.nd_sizes = {64, 128};
    c.client_counts = {1, 2};
    c.iterations = 3;
    bench::BenchResult r = bench::bench(c);

    REQUIRE(r.rows.size() == 8);
    size_t i = 0;
    for (NdTypeMask mask : c.masks)
        for (size_t nd : c.nd_sizes)
            for (uint32_t clients : c.client_counts) {
                CHECK(r.rows[i].mask == mask);
                CHECK(r.rows[i].nd_size == nd);
                CHECK(r.rows[i].clients == clients);
                CHECK(r.rows[i].nd_bytes_total == (mask == 0 ? 0 : nd));
                CHECK(r.rows[i].completed == uint64_t(clients) * c.iterations);
                ++i;
            }
}

TEST_CASE("row aggregates match an independent rerun of the same point") {
    bench::BenchConfig c = small_config();
    c.masks = {kNdNpost};
    c.nd_sizes = {256};
    c.client_counts = {4};
    c.request_size = 512;
    c.iterations = 15;
    c.optimized = true;
    c.think_jitter_us = 500;
    c.seed = 11;
    bench::BenchResult r = bench::bench(c);
    REQUIRE(r.rows.size() == 1);
    const bench::BenchRow& row = r.rows[0];

    sim::Scenario sc;
    sc.f = c.f;
    sc.app = "synthetic";
    sc.mask = kNdNpost;
    sc.optimized = true;
    sc.link = c.link;
    sc.workload.clients = 4;
    sc.workload.requests_per_client = c.iterations;
    sc.workload.request_size = c.request_size;
    sc.workload.nd_size = 256;
    sc.workload.think_jitter_us = 500;
    sim::RunResult run = sim::run_scenario(sc, c.seed);
    REQUIRE(run.report.clean());

    std::vector<uint64_t> lat = run.metrics.latencies_us;
    std::sort(lat.begin(), lat.end());
    REQUIRE(!lat.empty());
    double mean = double(std::accumulate(lat.begin(), lat.end(), uint64_t{0})) /
                  double(lat.size());
    auto pct = [&](double p) {
        size_t rank = size_t(std::ceil(p / 100.0 * double(lat.size())));
        return lat[std::max<size_t>(rank, 1) - 1];
    };

    CHECK(row.completed == run.metrics.completed);
    CHECK(row.duration_us == run.metrics.duration_us);
    CHECK(row.msgs_total == run.metrics.msgs_total);
    CHECK(row.bytes_total == run.metrics.bytes_total);
    CHECK(row.mean_latency_us == doctest::Approx(mean).epsilon(1e-9));
    CHECK(row.p50_latency_us == pct(50));
    CHECK(row.p99_latency_us == pct(99));
    CHECK(row.throughput_rps ==
          doctest::Approx(double(run.metrics.completed) * 1e6 /
                          double(run.metrics.duration_us))
              .epsilon(1e-9));
    CHECK(row.piggyback_ratio ==
          bench::piggyback_ratio(run.metrics.replica_totals));
    CHECK(row.per_type == run.metrics.per_tag);
}

TEST_CASE("identical configs produce byte-identical CSV and JSON") {
    bench::BenchConfig c = small_config();
    c.masks = {kNdVpre, kNdNpost};
    c.client_counts = {2};
    c.iterations = 8;
    c.optimized = true;
    c.think_jitter_us = 300;

    bench::BenchResult a = bench::bench(c);
    bench::BenchResult b = bench::bench(c);
    CHECK(bench::to_csv(a) == bench::to_csv(b));
    CHECK(bench::to_json(a) == bench::to_json(b));

    c.seed = 8;
    bench::BenchResult d = bench::bench(c);
    CHECK(bench::to_csv(a) != bench::to_csv(d));
}

TEST_CASE("CSV header and row shape are stable") {
    bench::BenchConfig c = small_config();
    c.masks = {kNdVpre};
    bench::BenchResult r = bench::bench(c);
    std::vector<std::string> lines = lines_of(bench::to_csv(r));

    REQUIRE(lines.size() == 2);
    CHECK(lines[0] ==
          "mask,nd_size,clients,mean_latency_us,p99_latency_us,throughput_rps,"
          "msgs_total,bytes_total,piggyback_ratio");
    std::vector<std::string> fields = split(lines[1], ',');
    REQUIRE(fields.size() == 9);
    CHECK(fields[0] == "VPRE");
    CHECK(fields[1] == "64");
    CHECK(fields[2] == "2");
    CHECK(std::stod(fields[3]) == doctest::Approx(r.rows[0].mean_latency_us)
                                      .epsilon(1e-3));
    CHECK(std::stoull(fields[4]) == r.rows[0].p99_latency_us);
    CHECK(std::stoull(fields[6]) == r.rows[0].msgs_total);
    CHECK(std::stoull(fields[7]) == r.rows[0].bytes_total);
}

TEST_CASE("piggyback ratio arithmetic") {
    engine::ReplicaCounters c;
    CHECK(bench::piggyback_ratio(c) == 0.0);
    c.entries_piggybacked = 9;
    c.entries_null_carried = 1;
    CHECK(bench::piggyback_ratio(c) == doctest::Approx(0.9));
    c.entries_standalone = 6;
    CHECK(bench::piggyback_ratio(c) == doctest::Approx(9.0 / 16.0));
}

TEST_CASE("closed-loop identity recovers the client count") {
    bench::BenchConfig c = small_config();
    c.masks = {0};
    c.client_counts = {1, 4};
    c.iterations = 40;
    bench::BenchResult r = bench::bench(c);
    for (const bench::BenchRow& row : r.rows) {
        double recovered = bench::closed_loop_concurrency(row, c);
        CHECK(std::abs(recovered - double(row.clients)) <=
              0.10 * double(row.clients));
    }

    // Think time shifts the cycle but the identity still holds once the mean
    // think is part of the cycle time.
    c.masks = {kNdVpre};
    c.client_counts = {4};
    c.think_time_us = 1000;
    c.think_jitter_us = 2000;
    r = bench::bench(c);
    double recovered = bench::closed_loop_concurrency(r.rows[0], c);
    CHECK(std::abs(recovered - 4.0) <= 0.4);
}

TEST_CASE("composite masks report summed value bytes") {
    bench::BenchConfig c = small_config();
    c.masks = {NdTypeMask(kNdVpre | kNdNpost)};
    c.nd_sizes = {128};
    c.iterations = 5;
    c.optimized = true;
    bench::BenchResult r = bench::bench(c);

    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].nd_bytes_total == 256);
    std::vector<std::string> lines = lines_of(bench::to_csv(r));
    CHECK(split(lines[1], ',')[0] == "VPRE|NPOST");
}

TEST_CASE("piggybacking saves messages and, at saturation, wins throughput") {
    bench::BenchConfig c = small_config();
    c.masks = {kNdNpost};
    c.nd_sizes = {256};
    c.client_counts = {16};
    c.request_size = 1024;
    c.iterations = 32;
    c.think_jitter_us = 2000;
    c.seed = 1;

    bench::BenchResult plain = bench::bench(c);
    c.optimized = true;
    bench::BenchResult opt = bench::bench(c);

    CHECK(opt.rows[0].piggyback_ratio >= 0.9);
    CHECK(plain.rows[0].piggyback_ratio == 0.0);
    CHECK(opt.rows[0].msgs_total < plain.rows[0].msgs_total);
    CHECK(opt.rows[0].bytes_total < plain.rows[0].bytes_total);
    CHECK(opt.rows[0].throughput_rps > plain.rows[0].throughput_rps);
}

TEST_CASE("value size stretches agreement-bearing latency faster") {
    bench::BenchConfig c = small_config();
    c.nd_sizes = {64, 4096};
    c.client_counts = {2};
    c.iterations = 20;
    c.seed = 1;

    c.masks = {kNdNpre};
    bench::BenchResult npre = bench::bench(c);
    c.masks = {kNdVpre};
    bench::BenchResult vpre = bench::bench(c);

    // NPRE pays an extra agreement phase whose messages carry the values, so
    // its latency must grow with the value size and outpace VPRE's growth.
    CHECK(npre.rows[0].mean_latency_us < npre.rows[1].mean_latency_us);
    double gap_small =
        npre.rows[0].mean_latency_us - vpre.rows[0].mean_latency_us;
    double gap_large =
        npre.rows[1].mean_latency_us - vpre.rows[1].mean_latency_us;
    CHECK(gap_small > 0);
    CHECK(gap_large > gap_small);
}

TEST_CASE("write_outputs writes both files and rejects bad paths") {
    bench::BenchConfig c = small_config();
    c.iterations = 3;
    bench::BenchResult r = bench::bench(c);

    std::string prefix =
        (std::filesystem::temp_directory_path() / "bench_out_test").string();
    bench::write_outputs(r, prefix);
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    CHECK(slurp(prefix + ".csv") == bench::to_csv(r));
    CHECK(slurp(prefix + ".json") == bench::to_json(r));
    std::remove((prefix + ".csv").c_str());
    std::remove((prefix + ".json").c_str());

    CHECK_THROWS_AS(bench::write_outputs(r, "/nonexistent-dir-xyz/out"),
                    std::runtime_error);
}

TEST_CASE("JSON mirror parses back with the CSV fields and more") {
    bench::BenchConfig c = small_config();
    c.masks = {kNdNpost};
    c.optimized = true;
    c.iterations = 6;
    bench::BenchResult r = bench::bench(c);

    nlohmann::json j = nlohmann::json::parse(bench::to_json(r));
    CHECK(j["config"]["masks"] == nlohmann::json::array({"NPOST"}));
    CHECK(j["config"]["optimized"] == true);
    CHECK(j["config"]["seed"] == 7);
    REQUIRE(j["rows"].size() == 1);
    const auto& row = j["rows"][0];
    CHECK(row["mask"] == "NPOST");
    CHECK(row["nd_size"] == 64);
    CHECK(row["clients"] == 2);
    CHECK(row["msgs_total"] == r.rows[0].msgs_total);
    CHECK(row["bytes_total"] == r.rows[0].bytes_total);
    CHECK(row["completed"] == r.rows[0].completed);
    CHECK(row["p50_latency_us"] == r.rows[0].p50_latency_us);
    CHECK(row["per_type"].contains("PRE_PREPARE"));
    CHECK(row["per_type"].contains("REPLY"));
}
