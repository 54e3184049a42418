#include "coretest/campaign.hpp"

namespace coretest {

CampaignInput campaign_input_from_macro(BlockMacro block) {
    return CampaignInput{to_string(block), block_phases(block)};
}

CampaignInput campaign_input_from_program(std::string name, TestProgram program,
                                          std::vector<Word> rom) {
    CampaignInput input;
    input.name = std::move(name);
    input.phases.push_back(TestPhase{"program", std::move(rom), std::move(program)});
    return input;
}

bool glob_match(const std::string& pattern, const std::string& text) {
    std::size_t pi = 0, ti = 0;
    std::size_t star = std::string::npos, mark = 0;
    while (ti < text.size()) {
        if (pi < pattern.size() && (pattern[pi] == '?' || pattern[pi] == text[ti])) {
            ++pi;
            ++ti;
        } else if (pi < pattern.size() && pattern[pi] == '*') {
            star = pi++;
            mark = ti;
        } else if (star != std::string::npos) {
            pi = star + 1;
            ti = ++mark;
        } else {
            return false;
        }
    }
    while (pi < pattern.size() && pattern[pi] == '*') ++pi;
    return pi == pattern.size();
}

std::vector<std::string> select_sites(const std::string& pattern) {
    std::vector<std::string> out;
    for (const std::string& site : enumerate_sites()) {
        if (glob_match(pattern, site)) out.push_back(site);
    }
    return out;
}

FaultVerdict grade_fault(const CampaignInput& input, const Fault& fault, double clock_hz,
                         std::uint64_t max_dut_cycles) {
    FaultVerdict verdict;
    verdict.fault = fault;
    ModelDut dut;
    dut.model().inject(fault);
    MacroRun run = run_phases(input.phases, dut, clock_hz, max_dut_cycles);
    verdict.detected = !run.summary.pass;
    verdict.first_fail_index = run.summary.first_fail_index;
    verdict.cycles = run.summary.cycles;
    return verdict;
}

namespace {

CoverageReport aggregate(const CampaignInput& input, std::vector<FaultVerdict> verdicts) {
    CoverageReport report;
    report.program_name = input.name;
    report.total_faults = int(verdicts.size());
    for (const FaultVerdict& v : verdicts) {
        if (v.detected) {
            ++report.detected;
        } else {
            report.undetected.push_back(v.fault.site + " " + to_string(v.fault.kind));
        }
    }
    report.vacuous = verdicts.empty();
    report.coverage =
        report.vacuous ? 1.0 : double(report.detected) / double(report.total_faults);
    report.per_fault = std::move(verdicts);
    return report;
}

std::vector<Fault> fault_plan(const std::vector<std::string>& sites) {
    std::vector<Fault> faults;
    faults.reserve(sites.size() * 2);
    for (const std::string& site : sites) {
        faults.push_back(Fault{site, FaultKind::StuckAt0, 0});
        faults.push_back(Fault{site, FaultKind::StuckAt1, 0});
    }
    return faults;
}

}  // namespace

CoverageReport run_campaign_serial(const CampaignInput& input,
                                   const std::vector<std::string>& sites, double clock_hz,
                                   std::uint64_t max_dut_cycles) {
    std::vector<Fault> faults = fault_plan(sites);
    std::vector<FaultVerdict> verdicts(faults.size());
    for (std::size_t i = 0; i < faults.size(); ++i) {
        verdicts[i] = grade_fault(input, faults[i], clock_hz, max_dut_cycles);
    }
    return aggregate(input, std::move(verdicts));
}

CoverageReport run_campaign(const CampaignInput& input, const std::vector<std::string>& sites,
                            int jobs, double clock_hz, std::uint64_t max_dut_cycles) {
    if (jobs <= 1) return run_campaign_serial(input, sites, clock_hz, max_dut_cycles);

    std::vector<Fault> faults = fault_plan(sites);
    std::vector<FaultVerdict> verdicts(faults.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (long long i = 0; i < (long long)faults.size(); ++i) {
        verdicts[i] = grade_fault(input, faults[i], clock_hz, max_dut_cycles);
    }
#else
    for (std::size_t i = 0; i < faults.size(); ++i) {
        verdicts[i] = grade_fault(input, faults[i], clock_hz, max_dut_cycles);
    }
#endif
    return aggregate(input, std::move(verdicts));
}

}  // namespace coretest
