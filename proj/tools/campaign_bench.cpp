#include <chrono>
#include <cstdlib>
#include <iostream>

#include "coretest/report.hpp"

using namespace coretest;

// Times the serial campaign kernel against the parallel one on the complete
// fault catalog and verifies they produce byte-identical reports.
int main(int argc, char** argv) {
    int jobs = argc > 1 ? std::atoi(argv[1]) : 4;
    if (jobs < 2) jobs = 2;

    CampaignInput input = campaign_input_from_macro(BlockMacro::Full);
    std::vector<std::string> sites = select_sites("*");
    std::cout << "faults: " << sites.size() * 2 << " (" << sites.size()
              << " sites x 2 polarities)\n";

    using clock = std::chrono::steady_clock;
    auto ms = [](clock::duration d) {
        return std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(d).count();
    };

    auto t0 = clock::now();
    CoverageReport serial = run_campaign_serial(input, sites);
    auto t1 = clock::now();
    CoverageReport parallel = run_campaign(input, sites, jobs);
    auto t2 = clock::now();

    double serial_ms = ms(t1 - t0);
    double parallel_ms = ms(t2 - t1);
    std::cout << "serial:   " << serial_ms << " ms\n";
    std::cout << "parallel: " << parallel_ms << " ms (" << jobs << " jobs)\n";
    std::cout << "speedup:  " << serial_ms / parallel_ms << "x\n";
    std::cout << "coverage: " << serial.detected << "/" << serial.total_faults << "\n";

    if (campaign_report_json(serial, "*") != campaign_report_json(parallel, "*")) {
        std::cerr << "parallel kernel diverged from the serial reference\n";
        return 1;
    }
    return 0;
}
