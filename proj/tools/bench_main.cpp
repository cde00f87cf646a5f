#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bench/bench.hpp"

using namespace ndbft;

// Exit codes: 0 sweep completed; 2 bad usage or an invalid configuration.
int main(int argc, char** argv) {
    CLI::App app{
        "Closed-loop benchmark in simulated time: sweeps nondeterminism "
        "masks, value sizes, and client counts, one CSV row per point."};
    std::vector<std::string> mask_names = {"0", "VPRE", "NPRE", "VPOST",
                                           "NPOST"};
    bench::BenchConfig config;
    std::string out_prefix;

    app.add_option("--mask", mask_names,
                   "Masks to sweep; classes combine with '|' "
                   "(default 0,VPRE,NPRE,VPOST,NPOST)")
        ->delimiter(',');
    app.add_option("--nd-size", config.nd_sizes,
                   "Per-class nondeterministic value sizes in bytes "
                   "(default 256)")
        ->delimiter(',');
    app.add_option("--clients", config.client_counts,
                   "Concurrent closed-loop clients (default 1)")
        ->delimiter(',');
    app.add_option("--req-size", config.request_size,
                   "Request and reply payload size in bytes (default 1024)");
    app.add_option("--iters", config.iterations,
                   "Requests per client (default 1000)");
    app.add_option("--f", config.f, "Fault threshold, n = 3f+1 (default 1)");
    app.add_flag("--opt", config.optimized,
                 "Enable the digest-dissemination and piggybacking "
                 "optimizations");
    app.add_option("--seed", config.seed, "Sweep seed (default 1)");
    app.add_option("--out", out_prefix,
                   "Write <prefix>.csv and <prefix>.json next to the stdout "
                   "CSV");
    app.add_option("--delay-us", config.link.delay_us,
                   "One-way link delay in microseconds (default 100)");
    app.add_option("--jitter-us", config.link.jitter_us,
                   "Seeded uniform extra link delay in [0, J] (default 0)");
    app.add_option("--loss", config.link.loss,
                   "Per-message drop probability in [0, 1) (default 0)");
    app.add_option("--per-byte-ns", config.link.per_byte_ns,
                   "Egress serialization in ns/byte (default 80, ~100 Mbit/s)");
    app.add_option("--think-us", config.think_time_us,
                   "Fixed client think time between requests (default 0)");
    app.add_option("--think-jitter-us", config.think_jitter_us,
                   "Seeded uniform extra think time in [0, J] (default 0)");
    CLI11_PARSE(app, argc, argv);

    try {
        config.masks.clear();
        for (const std::string& name : mask_names)
            config.masks.push_back(mask_from_name(name));

        bench::BenchResult result = bench::bench(config);
        std::cout << bench::to_csv(result);
        if (!out_prefix.empty()) bench::write_outputs(result, out_prefix);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
