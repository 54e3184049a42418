#pragma once

#include <string>
#include <vector>

#include "coretest/macros.hpp"

namespace coretest {

struct FaultVerdict {
    Fault fault;
    bool detected = false;      // the suite FAILed with this fault present
    int first_fail_index = -1;  // suite-wide vector ordinal when detected
    std::uint64_t cycles = 0;   // tester cycles spent until detection or pass
};

struct CoverageReport {
    std::string program_name;
    int total_faults = 0;
    int detected = 0;
    std::vector<std::string> undetected;  // "<site> <kind>", catalog order
    double coverage = 1.0;                // detected / total; 1.0 when vacuous
    bool vacuous = false;                 // no faults selected
    std::vector<FaultVerdict> per_fault;
};

// What a campaign executes per fault: the phase list of a block macro, or a
// user program paired with one image.
struct CampaignInput {
    std::string name;
    std::vector<TestPhase> phases;
};

CampaignInput campaign_input_from_macro(BlockMacro block);
CampaignInput campaign_input_from_program(std::string name, TestProgram program,
                                          std::vector<Word> rom);

// Anchored shell-style matcher: `*` any run, `?` any one character.
bool glob_match(const std::string& pattern, const std::string& text);

// Catalog sites matching the pattern, in catalog (natural) order.
std::vector<std::string> select_sites(const std::string& pattern);

// Grades one fault: fresh DUT, inject, run every phase until the first FAIL.
FaultVerdict grade_fault(const CampaignInput& input, const Fault& fault,
                         double clock_hz = 16e6,
                         std::uint64_t max_dut_cycles = kDefaultDutCycleBudget);

// Sweeps sites x {sa0, sa1}. jobs > 1 runs the parallel kernel; results are
// merged by fault index, so content and ordering are independent of the
// degree of parallelism.
CoverageReport run_campaign(const CampaignInput& input,
                            const std::vector<std::string>& sites, int jobs = 1,
                            double clock_hz = 16e6,
                            std::uint64_t max_dut_cycles = kDefaultDutCycleBudget);

// Serial reference for the parallel kernel: same output by construction.
// Kept as the benchmark baseline and the equivalence oracle in tests.
CoverageReport run_campaign_serial(const CampaignInput& input,
                                   const std::vector<std::string>& sites,
                                   double clock_hz = 16e6,
                                   std::uint64_t max_dut_cycles = kDefaultDutCycleBudget);

}  // namespace coretest
