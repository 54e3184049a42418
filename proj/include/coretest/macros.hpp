#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coretest/tester.hpp"

namespace coretest {

// The five per-block test suites plus their concatenation. Each expands to
// one or more phases; a phase is a DUT program image paired with the tester
// program that drives and checks it.
enum class BlockMacro { Alu, Pc, Ir, Memory, ControlUnit, Full };

const char* to_string(BlockMacro block);
std::optional<BlockMacro> parse_block_macro(const std::string& name);

struct TestPhase {
    std::string name;
    std::vector<Word> rom;
    TestProgram program;
};

// Cached phase lists; FULL is the concatenation of the other five in order.
const std::vector<TestPhase>& block_phases(BlockMacro block);

struct PhaseResult {
    std::string name;
    int vector_offset = 0;  // ordinal of this phase's first vector within the block
    TestReport report;
    Trace dut_trace;  // what the DUT did during this phase
};

struct MacroRun {
    TestReport summary;  // aggregated over executed phases
    std::vector<PhaseResult> phases;
};

// Runs each phase against a cold-reset DUT with that phase's image loaded,
// stopping at the first failing phase. Aggregate indices are suite-wide
// vector ordinals, so vectors_applied = first_fail_index + 1 still holds.
// max_dut_cycles is a cumulative cap across all phases.
MacroRun run_phases(const std::vector<TestPhase>& phases, Dut& dut, double clock_hz = 16e6,
                    std::uint64_t max_dut_cycles = kDefaultDutCycleBudget);

MacroRun run_block_macro_detailed(BlockMacro block, Dut& dut, double clock_hz = 16e6,
                                  std::uint64_t max_dut_cycles = kDefaultDutCycleBudget);

TestReport run_block_macro(BlockMacro block, Dut& dut, double clock_hz = 16e6);

// Per-block first failing vector ordinal (-1 = the block passed) in the
// order ALU, PC, IR, MEMORY, CONTROL_UNIT. Used as a fault dictionary key:
// behaviourally distinct faults produce distinct rows.
struct FailureSignature {
    std::array<int, 5> first_fail{-1, -1, -1, -1, -1};

    bool operator==(const FailureSignature&) const = default;
    bool all_pass() const;
};

// Signature of a single replica-region fault on an isolated (non-redundant)
// core: run the five block macros against a fresh faulted DUT each.
FailureSignature signature_of_fault(const Fault& fault, double clock_hz = 16e6);

// All replica-region faults (every region site, both stuck-at polarities)
// with their precomputed signatures; cached, deterministic order.
const std::vector<std::pair<Fault, FailureSignature>>& fault_dictionary();

struct LocalizationResult {
    Verdict verdict = Verdict::AllAgree;
    int replica = -1;
    FailureSignature signature;     // meaningful when verdict = ReplicaFaulty
    std::vector<Fault> candidates;  // dictionary rows matching the signature
};

// Diagnoses the TMR model; when exactly one replica disagrees with the
// voter, replays that replica's fault overlay on an isolated core and looks
// the resulting signature up in the dictionary. An all-pass signature (the
// fault never reaches a port) yields an empty candidate list.
LocalizationResult localize(const TmrModel& model, double clock_hz = 16e6);

}  // namespace coretest
