#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "simnet/simnet.hpp"

using namespace ndbft;

// Exit codes: 0 run completed and the safety check is clean; 1 the safety
// check found a violation (or the trace was unusable); 2 bad usage or a
// malformed scenario file.
int main(int argc, char** argv) {
    CLI::App app{
        "Runs one scenario file on the simulated network and cross-checks "
        "the replicas' delivered histories."};
    std::string scenario_path;
    uint64_t seed = 1;
    std::string trace_path;
    bool json_out = false;
    app.add_option("--scenario", scenario_path, "Scenario file (JSON)")
        ->required();
    app.add_option("--seed", seed, "Run seed (default 1)");
    app.add_option("--trace", trace_path, "Write the full run trace to this file");
    app.add_flag("--json", json_out, "Print the run summary as JSON");
    CLI11_PARSE(app, argc, argv);

    sim::Scenario scenario;
    try {
        std::ifstream in(scenario_path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + scenario_path);
        std::stringstream buf;
        buf << in.rdbuf();
        scenario = sim::Scenario::from_json(buf.str());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    sim::RunResult run = sim::run_scenario(scenario, seed);

    if (!trace_path.empty()) {
        std::ofstream out(trace_path, std::ios::binary);
        for (const std::string& line : run.trace) out << line << "\n";
        if (!out) {
            std::cerr << "error: cannot write " << trace_path << "\n";
            return 2;
        }
    }

    const sim::Metrics& m = run.metrics;
    const sim::SafetyReport& report = run.report;
    bool ok = report.clean();

    if (json_out) {
        nlohmann::json j;
        j["scenario"] = scenario_path;
        j["seed"] = seed;
        j["completed"] = m.completed;
        j["failed"] = m.failed;
        j["duration_us"] = m.duration_us;
        j["msgs_total"] = m.msgs_total;
        j["bytes_total"] = m.bytes_total;
        j["suspicions"] = report.suspicions.size();
        nlohmann::json violations = nlohmann::json::array();
        for (const sim::Violation& v : report.violations)
            violations.push_back({{"seq", v.seq}, {"what", v.what}});
        j["violations"] = violations;
        j["trace_errors"] = report.errors;
        j["truncated"] = report.truncated;
        j["safety"] = ok ? "clean" : "violated";
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "scenario: " << scenario_path << " (app=" << scenario.app
                  << " mask=" << mask_name(scenario.mask) << " f=" << scenario.f
                  << (scenario.optimized ? " optimized" : " unoptimized")
                  << ")\n";
        std::cout << "seed: " << seed << "\n";
        std::cout << "requests: " << m.completed << " completed, " << m.failed
                  << " failed\n";
        std::cout << "duration: " << m.duration_us << " us virtual\n";
        std::cout << "messages: " << m.msgs_total << " (" << m.bytes_total
                  << " bytes)\n";
        std::cout << "suspicions: " << report.suspicions.size() << "\n";
        for (const sim::Violation& v : report.violations)
            std::cout << "violation at seq " << v.seq << ": " << v.what << "\n";
        for (const std::string& e : report.errors)
            std::cout << "trace error: " << e << "\n";
        if (report.truncated) std::cout << "trace truncated\n";
        std::cout << "safety: " << (ok ? "clean" : "VIOLATED") << "\n";
    }
    return ok ? 0 : 1;
}
