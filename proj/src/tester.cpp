#include "coretest/tester.hpp"

#include <cmath>

namespace coretest {

namespace {

// Shared CLKDUT body: step the core until it re-enters fetch (instruction
// boundary) or stops, appending trace rows exactly the way run_program does.
template <typename StepFn>
StepOutcome clock_one_instruction(ControllerState& s, Trace& trace, StepFn&& step_fn) {
    StepOutcome out;
    if (s.halted) {
        out.was_halted = true;
        out.dut_cycles = 3;
        return out;
    }
    do {
        TraceRow row;
        row.cycle = s.cycle;
        row.phase = s.phase;
        step_fn();
        row.pc = s.pc;
        row.bus = s.bus;
        row.port_out = observe_ports(s).port_out;
        trace.push_back(row);
        ++out.dut_cycles;
    } while (!s.halted && s.phase != Phase::Fetch);
    out.trapped = s.trap != TrapKind::None;
    return out;
}

}  // namespace

void ModelDut::reset() {
    model_.state().reset();
    apply_state_masks(model_.state(), model_.overlay());
    trace_.clear();
}

void ModelDut::load_rom(std::span<const Word> image) {
    coretest::load_rom(model_.state(), image);
}

void ModelDut::drive_port(Byte value) { model_.state().port_in = value; }

Byte ModelDut::sample_port() const { return observe_ports(model_.state()).port_out; }

StepOutcome ModelDut::clock_instruction() {
    return clock_one_instruction(model_.state(), trace_, [this] { model_.step(); });
}

void TmrDut::reset() {
    model_.reset();
    trace_.clear();
}

void TmrDut::load_rom(std::span<const Word> image) { model_.load_rom(image); }

void TmrDut::drive_port(Byte value) { model_.shared().port_in = value; }

Byte TmrDut::sample_port() const { return observe_ports(model_.shared()).port_out; }

StepOutcome TmrDut::clock_instruction() {
    return clock_one_instruction(model_.shared(), trace_, [this] { model_.step(); });
}

unsigned cycle_cost(const TesterInstruction& instr, bool branch_taken,
                    unsigned clkdut_cycles) {
    switch (instr.mnemonic) {
        case Mnemonic::Brne: return branch_taken ? 2 : 1;
        case Mnemonic::Rjmp: return 2;
        case Mnemonic::Clkdut: return clkdut_cycles;
        default: return 1;
    }
}

bool compare_signature(Byte response, Byte signature) { return response == signature; }

double cycles_to_time(std::uint64_t cycles, double clock_hz) {
    if (!(clock_hz > 0.0)) {
        throw SimError(ErrKind::ZeroClock, "clock frequency must be positive");
    }
    double us = double(cycles) * 1e6 / clock_hz;
    return std::round(us * 1e4) / 1e4;
}

SeedSequence gen_seed_sequence(Byte seed, const std::vector<SeedOp>& ops) {
    return SeedSequence{seed, ops, chain_signatures(seed, ops)};
}

TestReport execute(const TestProgram& program, Dut& dut, double clock_hz,
                   std::uint64_t max_dut_cycles) {
    TestReport report;
    TesterState st;
    const int len = int(program.instructions.size());
    const int error_index = program.error_index();
    std::uint64_t dut_cycles_total = 0;
    int compares_done = 0;

    auto fail = [&](int vector_ordinal, std::string cause) {
        report.pass = false;
        report.first_fail_index = vector_ordinal;
        report.vectors_applied = vector_ordinal + 1;
        report.fail_cause = std::move(cause);
    };

    // Generous instruction budget so a looping tester program cannot hang the
    // harness; real macros finish in a few hundred instructions.
    for (std::uint64_t steps = 0; report.pass && st.pc < len; ++steps) {
        if (steps >= 1000000) {
            fail(compares_done, "tester step budget exceeded");
            break;
        }
        const int index = st.pc;
        const TesterInstruction& instr = program.instructions[index];
        ExecTraceEntry entry;
        entry.instr_index = index;
        unsigned step_cycles = 0;
        int next_pc = st.pc + 1;

        switch (instr.mnemonic) {
            case Mnemonic::Ldi:
                st.regs[instr.reg] = instr.immediate;
                step_cycles = cycle_cost(instr, false);
                break;
            case Mnemonic::Out:
                dut.drive_port(st.regs[instr.reg]);
                step_cycles = cycle_cost(instr, false);
                break;
            case Mnemonic::In:
                st.regs[instr.reg] = dut.sample_port();
                step_cycles = cycle_cost(instr, false);
                break;
            case Mnemonic::Cpi:
                st.zero = compare_signature(st.regs[instr.reg], instr.immediate);
                ++compares_done;
                step_cycles = cycle_cost(instr, false);
                break;
            case Mnemonic::Brne: {
                bool taken = !st.zero;
                entry.branch_taken = taken;
                step_cycles = cycle_cost(instr, taken);
                if (taken) {
                    next_pc = instr.target;
                    if (instr.target == error_index) {
                        fail(compares_done - 1, "signature mismatch");
                    }
                }
                break;
            }
            case Mnemonic::Rjmp:
                entry.branch_taken = true;
                step_cycles = cycle_cost(instr, true);
                next_pc = instr.target;
                if (instr.target == error_index) {
                    fail(compares_done, "jump into error sink");
                }
                break;
            case Mnemonic::Clkdut: {
                StepOutcome dut_step = dut.clock_instruction();
                entry.dut_cycles = dut_step.dut_cycles;
                step_cycles = cycle_cost(instr, false, dut_step.dut_cycles);
                dut_cycles_total += dut_step.dut_cycles;
                if (dut_step.trapped) {
                    fail(compares_done, "dut trap: " + std::string(to_string(dut.trap())));
                } else if (dut_cycles_total > max_dut_cycles) {
                    fail(compares_done, "dut cycle budget exceeded");
                }
                break;
            }
            case Mnemonic::Nop:
                step_cycles = cycle_cost(instr, false);
                break;
            case Mnemonic::Halt:
                step_cycles = cycle_cost(instr, false);
                next_pc = len;  // stop
                break;
        }

        st.cycles += step_cycles;
        report.exec_trace.push_back(entry);
        st.pc = next_pc;
    }

    if (report.pass) {
        report.vectors_applied = compares_done;
    }
    report.cycles = st.cycles;
    report.wall_time_us = cycles_to_time(report.cycles, clock_hz);
    return report;
}

}  // namespace coretest
