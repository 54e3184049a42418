#include "coretest/report.hpp"

#include <sstream>

namespace coretest {

std::string fault_spec(const Fault& fault) {
    if (fault.kind == FaultKind::Seu) {
        return fault.site + " seu:" + std::to_string(fault.seu_cycle);
    }
    return fault.site + " " + to_string(fault.kind);
}

namespace {

OrderedJson report_body(const TestReport& report) {
    OrderedJson body;
    body["verdict"] = report.pass ? "PASS" : "FAIL";
    if (report.first_fail_index >= 0) {
        body["first_fail_index"] = report.first_fail_index;
    } else {
        body["first_fail_index"] = nullptr;
    }
    body["vectors_applied"] = report.vectors_applied;
    body["cycles"] = report.cycles;
    body["wall_time_us"] = report.wall_time_us;
    if (!report.pass) body["fail_cause"] = report.fail_cause;
    return body;
}

}  // namespace

OrderedJson run_report_json(const RunContext& ctx, const MacroRun& run) {
    OrderedJson doc;
    doc["kind"] = "run";
    doc["program"] = ctx.program;
    doc["tmr"] = ctx.tmr;
    doc["clock_hz"] = ctx.clock_hz;
    doc["faults"] = ctx.faults;
    doc.update(report_body(run.summary));
    OrderedJson phases = OrderedJson::array();
    for (const PhaseResult& phase : run.phases) {
        OrderedJson p;
        p["name"] = phase.name;
        p["vector_offset"] = phase.vector_offset;
        p.update(report_body(phase.report));
        phases.push_back(std::move(p));
    }
    doc["phases"] = std::move(phases);
    return doc;
}

OrderedJson campaign_report_json(const CoverageReport& report, const std::string& site_pattern) {
    OrderedJson doc;
    doc["kind"] = "campaign";
    doc["program"] = report.program_name;
    doc["sites"] = site_pattern;
    doc["total_faults"] = report.total_faults;
    doc["detected"] = report.detected;
    doc["coverage"] = report.coverage;
    doc["vacuous"] = report.vacuous;
    doc["undetected"] = report.undetected;
    OrderedJson rows = OrderedJson::array();
    for (const FaultVerdict& v : report.per_fault) {
        OrderedJson row;
        row["fault"] = fault_spec(v.fault);
        row["verdict"] = v.detected ? "FAIL" : "PASS";
        if (v.first_fail_index >= 0) {
            row["first_fail_index"] = v.first_fail_index;
        } else {
            row["first_fail_index"] = nullptr;
        }
        row["cycles"] = v.cycles;
        rows.push_back(std::move(row));
    }
    doc["per_fault"] = std::move(rows);
    return doc;
}

TmrSuiteResult run_tmr_suite(double clock_hz) {
    TmrSuiteResult result;

    auto port_trace = [&](const MacroRun& run) {
        std::vector<Byte> ports;
        for (const PhaseResult& phase : run.phases) {
            for (const TraceRow& row : phase.dut_trace) ports.push_back(row.port_out);
        }
        return ports;
    };

    TmrDut clean;
    std::vector<Byte> baseline = port_trace(run_block_macro_detailed(BlockMacro::Full, clean, clock_hz));

    for (const std::string& site : replica_region_sites()) {
        for (FaultKind kind : {FaultKind::StuckAt0, FaultKind::StuckAt1}) {
            Fault fault{site, kind, 0};
            for (int replica = 0; replica < 3; ++replica) {
                ++result.injected;
                TmrDut dut;
                dut.model().inject_replica(replica, fault);
                MacroRun run = run_block_macro_detailed(BlockMacro::Full, dut, clock_hz);
                bool masked = run.summary.pass && port_trace(run) == baseline;
                if (masked) {
                    ++result.masked;
                } else {
                    result.unmasked.push_back(fault_spec(fault) + " replica " +
                                              std::to_string(replica));
                }
                Diagnosis diagnosis = diagnose(dut.model());
                bool correct = diagnosis.verdict == Verdict::AllAgree ||
                               (diagnosis.verdict == Verdict::ReplicaFaulty &&
                                diagnosis.replica == replica);
                if (correct) {
                    ++result.diagnosis_correct;
                } else {
                    ++result.false_accusations;
                }
            }
        }
    }
    return result;
}

OrderedJson tmr_report_json(const ResourceComparison& comparison, const TmrSuiteResult& suite) {
    auto counts = [](const BlockCounts& c) {
        OrderedJson j;
        j["alu"] = c.alu;
        j["cu"] = c.cu;
        j["shared"] = c.shared;
        j["voter"] = c.voter;
        j["total"] = c.total;
        return j;
    };

    OrderedJson doc;
    doc["kind"] = "tmr-report";
    doc["elements"]["baseline"] = counts(comparison.baseline);
    doc["elements"]["tmr"] = counts(comparison.tmr);
    doc["elements"]["ratio"] = comparison.ratio;
    doc["structural_identity"]["holds"] =
        comparison.tmr.total == comparison.baseline.total +
                                    2 * (comparison.baseline.alu + comparison.baseline.cu) +
                                    comparison.tmr.voter;
    doc["structural_identity"]["replicated_per_copy"] =
        comparison.baseline.alu + comparison.baseline.cu;
    doc["structural_identity"]["voter_elements"] = comparison.tmr.voter;
    // Reference synthesis data for the same redundancy scheme on an FPGA
    // toolchain, quoted for context only — slice counts are not element
    // counts and are never asserted against the model.
    doc["reference_synthesis"]["baseline_slices"] = 112;
    doc["reference_synthesis"]["tmr_slices"] = 201;
    doc["reference_synthesis"]["ratio"] = 201.0 / 112.0;
    doc["masking_sweep"]["faults_injected"] = suite.injected;
    doc["masking_sweep"]["masked"] = suite.masked;
    doc["masking_sweep"]["fraction"] =
        suite.injected == 0 ? 1.0 : double(suite.masked) / double(suite.injected);
    doc["masking_sweep"]["unmasked"] = suite.unmasked;
    doc["diagnosis"]["cases"] = suite.injected;
    doc["diagnosis"]["correct"] = suite.diagnosis_correct;
    doc["diagnosis"]["false_accusations"] = suite.false_accusations;
    return doc;
}

std::string write_listing(const TestProgram& program) {
    std::ostringstream out;
    std::istringstream text(disassemble(program));
    std::string line;
    int index = 0;
    while (std::getline(text, line)) {
        if (line.rfind("    ", 0) != 0) {
            out << "           " << line << "\n";  // label row
            continue;
        }
        const TesterInstruction& instr = program.instructions[index];
        std::uint32_t packed = std::uint32_t(instr.mnemonic) << 28 |
                               std::uint32_t(instr.reg < 0 ? 0 : instr.reg) << 20 |
                               std::uint32_t(instr.immediate) << 12 |
                               std::uint32_t(instr.target < 0 ? 0xFFF : instr.target & 0xFFF);
        char head[16];
        std::snprintf(head, sizeof head, "%03d %08X", index, packed);
        out << head << line << "\n";
        ++index;
    }
    return out.str();
}

std::string summarize(const TestReport& report) {
    std::ostringstream out;
    if (report.pass) {
        out << "PASS: " << report.vectors_applied << " vectors, " << report.cycles
            << " cycles, " << report.wall_time_us << " us";
    } else {
        out << "FAIL at vector " << report.first_fail_index << " (" << report.fail_cause
            << "): " << report.vectors_applied << " vectors applied, " << report.cycles
            << " cycles, " << report.wall_time_us << " us";
    }
    return out.str();
}

}  // namespace coretest
