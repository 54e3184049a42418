#pragma once

#include <array>
#include <string>
#include <vector>

#include "coretest/assembler.hpp"
#include "coretest/fault_engine.hpp"
#include "coretest/tmr.hpp"

namespace coretest {

// What one CLKDUT observed: how many DUT cycles the instruction took, whether
// the DUT trapped while retiring it, and whether the DUT was already halted
// (in which case nothing ran and the nominal 3-cycle cost is charged).
struct StepOutcome {
    unsigned dut_cycles = 0;
    bool trapped = false;
    bool was_halted = false;
};

// Device-under-test handle: the tester only ever touches the DUT through the
// port pins and the instruction clock, mirroring a rig that owns the clock
// line and the two GPIO ports.
class Dut {
public:
    virtual ~Dut() = default;

    virtual void reset() = 0;  // cold reset; ROM and the held input line survive
    virtual void load_rom(std::span<const Word> image) = 0;
    virtual void drive_port(Byte value) = 0;  // latched until re-driven
    virtual Byte sample_port() const = 0;
    virtual bool halted() const = 0;
    virtual TrapKind trap() const = 0;
    virtual std::uint64_t cycles() const = 0;

    // Clocks the DUT through one full instruction (back to the next fetch or
    // into halt). A halted DUT is left untouched.
    virtual StepOutcome clock_instruction() = 0;

    virtual const Trace& trace() const = 0;
};

// Plain (optionally faulted) single-core DUT.
class ModelDut : public Dut {
public:
    ModelDut() = default;

    FaultedModel& model() { return model_; }
    const FaultedModel& model() const { return model_; }

    void reset() override;
    void load_rom(std::span<const Word> image) override;
    void drive_port(Byte value) override;
    Byte sample_port() const override;
    bool halted() const override { return model_.state().halted; }
    TrapKind trap() const override { return model_.state().trap; }
    std::uint64_t cycles() const override { return model_.state().cycle; }
    StepOutcome clock_instruction() override;
    const Trace& trace() const override { return trace_; }

private:
    FaultedModel model_;
    Trace trace_;
};

// Triple-modular-redundant DUT; same pin discipline, voted outputs.
class TmrDut : public Dut {
public:
    TmrDut() = default;

    TmrModel& model() { return model_; }
    const TmrModel& model() const { return model_; }

    void reset() override;
    void load_rom(std::span<const Word> image) override;
    void drive_port(Byte value) override;
    Byte sample_port() const override;
    bool halted() const override { return model_.shared().halted; }
    TrapKind trap() const override { return model_.shared().trap; }
    std::uint64_t cycles() const override { return model_.shared().cycle; }
    StepOutcome clock_instruction() override;
    const Trace& trace() const override { return trace_; }

private:
    TmrModel model_;
    Trace trace_;
};

// One executed tester instruction; dut_cycles is meaningful for CLKDUT only.
struct ExecTraceEntry {
    int instr_index = -1;
    bool branch_taken = false;
    unsigned dut_cycles = 0;
};

struct TestReport {
    bool pass = true;
    int first_fail_index = -1;  // failing vector ordinal; -1 = none
    int vectors_applied = 0;
    std::uint64_t cycles = 0;  // tester cycles per the cost table
    double wall_time_us = 0.0;
    std::string fail_cause;  // empty on PASS
    std::vector<ExecTraceEntry> exec_trace;
};

struct TesterState {
    std::array<Byte, 32> regs{};
    int pc = 0;
    bool zero = false;
    std::uint64_t cycles = 0;
};

// Per-instruction cost: LDI/OUT/IN/CPI/NOP/HALT = 1, BRNE = 1 (2 taken),
// RJMP = 2, CLKDUT = whatever the DUT instruction took.
unsigned cycle_cost(const TesterInstruction& instr, bool branch_taken,
                    unsigned clkdut_cycles = 3);

bool compare_signature(Byte response, Byte signature);

// cycles * 10^6 / clock_hz, rounded to 4 decimal places. Throws ZeroClock.
double cycles_to_time(std::uint64_t cycles, double clock_hz);

struct SeedSequence {
    Byte seed = 0;
    std::vector<SeedOp> ops;
    std::vector<Byte> expected;  // chained accumulator value after ops[0..k]
};

SeedSequence gen_seed_sequence(Byte seed, const std::vector<SeedOp>& ops);

inline constexpr std::uint64_t kDefaultDutCycleBudget = 100000;

// Runs the program against the DUT. Stops at the first mismatch (a taken
// branch into the `error` sink), an explicit jump into the sink, a DUT trap,
// or exhausted budgets; any of those is a FAIL carrying the current vector
// ordinal, with vectors_applied = first_fail_index + 1. Falling off the end
// or HALT is a PASS.
TestReport execute(const TestProgram& program, Dut& dut, double clock_hz = 16e6,
                   std::uint64_t max_dut_cycles = kDefaultDutCycleBudget);

}  // namespace coretest
