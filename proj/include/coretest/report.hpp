#pragma once

#include <string>

#include <json.hpp>

#include "coretest/campaign.hpp"

namespace coretest {

using OrderedJson = nlohmann::ordered_json;

// Canonical one-token-pair fault spelling: "<site> sa0|sa1|seu:<cycle>",
// exactly what parse_fault_list accepts.
std::string fault_spec(const Fault& fault);

struct RunContext {
    std::string program;
    bool tmr = false;
    double clock_hz = 16e6;
    std::vector<std::string> faults;  // canonical specs, input order
};

// Structured documents. Field order is fixed and no volatile data (times,
// paths, hosts) is embedded, so identical inputs serialize byte-identically.
OrderedJson run_report_json(const RunContext& ctx, const MacroRun& run);
OrderedJson campaign_report_json(const CoverageReport& report, const std::string& site_pattern);

struct TmrSuiteResult {
    int injected = 0;
    int masked = 0;             // PASS with a port trace identical to fault-free
    int diagnosis_correct = 0;  // AllAgree, or ReplicaFaulty naming the seeded replica
    int false_accusations = 0;  // wrong replica named, or voter distrusted
    std::vector<std::string> unmasked;  // "<fault spec> replica <r>", expected empty
};

// Injects every replica-region stuck-at into each replica in turn, runs the
// full suite, and checks masking plus diagnosis against the seeded truth.
TmrSuiteResult run_tmr_suite(double clock_hz = 16e6);

OrderedJson tmr_report_json(const ResourceComparison& comparison, const TmrSuiteResult& suite);

// Line-oriented audit listing: index, packed encoding, canonical text.
std::string write_listing(const TestProgram& program);

// One-line human summary of a test outcome for standard output.
std::string summarize(const TestReport& report);

}  // namespace coretest
