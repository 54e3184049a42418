#include "coretest/macros.hpp"

#include <sstream>
#include <stdexcept>

namespace coretest {

const char* to_string(BlockMacro block) {
    switch (block) {
        case BlockMacro::Alu: return "alu";
        case BlockMacro::Pc: return "pc";
        case BlockMacro::Ir: return "ir";
        case BlockMacro::Memory: return "memory";
        case BlockMacro::ControlUnit: return "control-unit";
        case BlockMacro::Full: return "full";
    }
    return "?";
}

std::optional<BlockMacro> parse_block_macro(const std::string& name) {
    for (BlockMacro b : {BlockMacro::Alu, BlockMacro::Pc, BlockMacro::Ir, BlockMacro::Memory,
                         BlockMacro::ControlUnit, BlockMacro::Full}) {
        if (name == to_string(b)) return b;
    }
    return std::nullopt;
}

namespace {

constexpr Word ins(Byte op, Byte operand = 0) { return Word(Word(op) << 8 | operand); }

std::vector<std::vector<Word>> block_roms(BlockMacro block) {
    using namespace opcode;
    switch (block) {
        case BlockMacro::Alu:
            // One image, the seven chained commands behind the canonical seed.
            return {{ins(LDI, kCanonicalSeed), ins(ADD, 0x5B), ins(SUB, 0x2D), ins(AND, 0xF3),
                     ins(OR, 0x0E), ins(XOR, 0xA7), ins(NOT), ins(SHL)}};
        case BlockMacro::Pc:
            // Sequential fetch markers, then forward/backward jump targets.
            return {{ins(LDI, pc_marker(0)), ins(LDI, pc_marker(1)), ins(LDI, pc_marker(2)),
                     ins(LDI, pc_marker(3)), ins(LDI, pc_marker(4)), ins(LDI, pc_marker(5)),
                     ins(LDI, pc_marker(6)), ins(LDI, pc_marker(7))},
                    {ins(JMP, 4), ins(LDI, 0xAA), ins(LDI, 0xCC), ins(HALT), ins(LDI, 0xBB),
                     ins(JMP, 2), ins(HALT), ins(HALT)}};
        case BlockMacro::Ir:
            // Walking patterns through the operand field and opcode variety.
            return {{ins(LDI, 0x0F), ins(ADD, 0xF0), ins(NOT), ins(XOR, 0x55), ins(HALT)}};
        case BlockMacro::Memory: {
            // One image per address: write pattern, scrubbed read-back, then
            // the complement pass.
            std::vector<std::vector<Word>> roms;
            for (int a = 0; a < int(kRamWords); ++a) {
                Byte addr = Byte(a);
                roms.push_back({ins(INP), ins(STA, addr), ins(LDI, 0x00), ins(LDA, addr),
                                ins(INP), ins(STA, addr), ins(LDA, addr), ins(HALT)});
            }
            return roms;
        }
        case BlockMacro::ControlUnit: {
            // Branch flow (taken + not-taken), the RAM path, then one image
            // per low address line to catch consistent address aliasing.
            std::vector<std::vector<Word>> roms;
            roms.push_back({ins(LDI, 0x02), ins(SUB, 0x01), ins(JNZ, 4), ins(LDI, 0xEE),
                            ins(SUB, 0x01), ins(JNZ, 3), ins(OUT), ins(HALT)});
            roms.push_back({ins(INP), ins(STA, 5), ins(LDI, 0x00), ins(LDA, 5), ins(OUT),
                            ins(HALT)});
            for (int k = 0; k < 3; ++k) {
                roms.push_back({ins(INP), ins(STA, Byte(1 << k)), ins(LDI, 0x00), ins(LDA, 0),
                                ins(HALT)});
            }
            return roms;
        }
        case BlockMacro::Full:
            break;
    }
    return {};
}

std::string block_expansion(BlockMacro block) {
    switch (block) {
        case BlockMacro::Alu: return expand_macro("alu_seed", {"0x3C", "7"});
        case BlockMacro::Pc: return expand_macro("pc_check", {});
        case BlockMacro::Ir: return expand_macro("ir_check", {});
        case BlockMacro::Memory: return expand_macro("mem_march", {});
        case BlockMacro::ControlUnit: return expand_macro("cu_check", {});
        case BlockMacro::Full: break;
    }
    return {};
}

// Splits a macro expansion at its `; phase:` headers and pairs each chunk
// with the matching DUT image, appending the shared pass/fail epilogue.
std::vector<TestPhase> build_phases(BlockMacro block) {
    std::vector<std::vector<Word>> roms = block_roms(block);
    std::vector<std::string> names;
    std::vector<std::string> chunks;
    {
        std::istringstream in(block_expansion(block));
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("; phase:", 0) == 0) {
                names.push_back(line.substr(8).find_first_not_of(' ') == std::string::npos
                                    ? "phase"
                                    : line.substr(line.find_first_not_of(' ', 8)));
                chunks.emplace_back();
            } else if (!chunks.empty()) {
                chunks.back() += line + "\n";
            }
        }
    }
    if (chunks.size() != roms.size()) {
        throw std::logic_error("phase count mismatch for macro " +
                               std::string(to_string(block)));
    }

    std::vector<TestPhase> phases;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        AsmResult assembled = assemble(chunks[i] + "halt\nerror: halt\n");
        if (!assembled.ok()) {
            throw std::logic_error("internal macro program failed to assemble");
        }
        phases.push_back(TestPhase{names[i], std::move(roms[i]), std::move(assembled.program)});
    }
    return phases;
}

}  // namespace

const std::vector<TestPhase>& block_phases(BlockMacro block) {
    static const std::vector<TestPhase> alu = build_phases(BlockMacro::Alu);
    static const std::vector<TestPhase> pc = build_phases(BlockMacro::Pc);
    static const std::vector<TestPhase> ir = build_phases(BlockMacro::Ir);
    static const std::vector<TestPhase> memory = build_phases(BlockMacro::Memory);
    static const std::vector<TestPhase> cu = build_phases(BlockMacro::ControlUnit);
    static const std::vector<TestPhase> full = [] {
        std::vector<TestPhase> all;
        for (const auto* part : {&alu, &pc, &ir, &memory, &cu}) {
            all.insert(all.end(), part->begin(), part->end());
        }
        return all;
    }();
    switch (block) {
        case BlockMacro::Alu: return alu;
        case BlockMacro::Pc: return pc;
        case BlockMacro::Ir: return ir;
        case BlockMacro::Memory: return memory;
        case BlockMacro::ControlUnit: return cu;
        case BlockMacro::Full: return full;
    }
    return full;
}

MacroRun run_phases(const std::vector<TestPhase>& phases, Dut& dut, double clock_hz,
                    std::uint64_t max_dut_cycles) {
    MacroRun run;
    int vector_offset = 0;
    std::uint64_t remaining = max_dut_cycles;
    for (const TestPhase& phase : phases) {
        dut.reset();
        dut.load_rom(phase.rom);
        TestReport report = execute(phase.program, dut, clock_hz, remaining);
        std::uint64_t spent = 0;
        for (const ExecTraceEntry& entry : report.exec_trace) spent += entry.dut_cycles;
        remaining = remaining > spent ? remaining - spent : 0;

        run.summary.cycles += report.cycles;
        run.summary.vectors_applied += report.vectors_applied;
        if (!report.pass) {
            run.summary.pass = false;
            run.summary.first_fail_index = vector_offset + report.first_fail_index;
            run.summary.fail_cause = report.fail_cause;
        }
        vector_offset += report.vectors_applied;
        run.phases.push_back(PhaseResult{phase.name, vector_offset - report.vectors_applied,
                                         std::move(report), dut.trace()});
        if (!run.summary.pass) break;
    }
    run.summary.wall_time_us = cycles_to_time(run.summary.cycles, clock_hz);
    return run;
}

MacroRun run_block_macro_detailed(BlockMacro block, Dut& dut, double clock_hz,
                                  std::uint64_t max_dut_cycles) {
    return run_phases(block_phases(block), dut, clock_hz, max_dut_cycles);
}

TestReport run_block_macro(BlockMacro block, Dut& dut, double clock_hz) {
    return run_block_macro_detailed(block, dut, clock_hz).summary;
}

bool FailureSignature::all_pass() const {
    for (int ff : first_fail) {
        if (ff != -1) return false;
    }
    return true;
}

namespace {

constexpr std::array<BlockMacro, 5> kSignatureBlocks = {
    BlockMacro::Alu, BlockMacro::Pc, BlockMacro::Ir, BlockMacro::Memory,
    BlockMacro::ControlUnit};

FailureSignature signature_of_overlay(const FaultOverlay& overlay, double clock_hz) {
    FailureSignature sig;
    for (std::size_t i = 0; i < kSignatureBlocks.size(); ++i) {
        ModelDut dut;
        dut.model().set_overlay(overlay);
        dut.reset();  // reapplies the stuck-at masks to the cold state
        sig.first_fail[i] = run_block_macro(kSignatureBlocks[i], dut, clock_hz).first_fail_index;
    }
    return sig;
}

}  // namespace

FailureSignature signature_of_fault(const Fault& fault, double clock_hz) {
    FaultOverlay overlay;
    overlay.add(fault);
    return signature_of_overlay(overlay, clock_hz);
}

const std::vector<std::pair<Fault, FailureSignature>>& fault_dictionary() {
    static const std::vector<std::pair<Fault, FailureSignature>> dict = [] {
        std::vector<std::pair<Fault, FailureSignature>> rows;
        for (const std::string& path : replica_region_sites()) {
            for (FaultKind kind : {FaultKind::StuckAt0, FaultKind::StuckAt1}) {
                Fault fault{path, kind, 0};
                rows.emplace_back(fault, signature_of_fault(fault));
            }
        }
        return rows;
    }();
    return dict;
}

LocalizationResult localize(const TmrModel& model, double clock_hz) {
    LocalizationResult result;
    Diagnosis diagnosis = diagnose(model);
    result.verdict = diagnosis.verdict;
    result.replica = diagnosis.replica;
    if (diagnosis.verdict != Verdict::ReplicaFaulty) return result;

    result.signature = signature_of_overlay(model.replica_overlay(diagnosis.replica), clock_hz);
    if (result.signature.all_pass()) return result;
    for (const auto& [fault, signature] : fault_dictionary()) {
        if (signature == result.signature) result.candidates.push_back(fault);
    }
    return result;
}

}  // namespace coretest
