#pragma once

#include <map>
#include <string>
#include <vector>

#include "coretest/core_model.hpp"

namespace coretest {

// Tester instruction set: the AVR-flavored dialect of the vector/signature
// loop plus CLKDUT, the explicit "advance the DUT by one instruction"
// synchronization point.
enum class Mnemonic : std::uint8_t { Ldi, Out, In, Cpi, Brne, Rjmp, Clkdut, Nop, Halt };

const char* to_string(Mnemonic m);

struct TesterInstruction {
    Mnemonic mnemonic = Mnemonic::Nop;
    int reg = -1;        // register operand where the mnemonic takes one
    Byte immediate = 0;  // LDI/CPI
    int target = -1;     // resolved instruction index for BRNE/RJMP

    bool operator==(const TesterInstruction&) const = default;
};

struct TestProgram {
    std::vector<TesterInstruction> instructions;
    std::map<std::string, int> labels;
    std::vector<int> source_map;  // instruction -> 1-based source line

    // Index of the mismatch sink. May equal instructions.size() when the
    // `error` label trails the last instruction.
    int error_index() const {
        auto it = labels.find("error");
        return it == labels.end() ? -1 : it->second;
    }
};

enum class AsmErrKind {
    UnknownMnemonic,
    BadRegister,
    ImmediateRange,
    DuplicateLabel,
    UndefinedLabel,
    BranchOutOfRange,
};

const char* to_string(AsmErrKind kind);

struct AsmError {
    int line = 0;  // 1-based
    AsmErrKind kind = AsmErrKind::UnknownMnemonic;
    std::string message;
};

struct AsmResult {
    TestProgram program;  // meaningful only when errors is empty
    std::vector<AsmError> errors;

    bool ok() const { return errors.empty(); }
};

// Two passes: labels first, then encoding and target resolution. Errors are
// collected (at most one per line), never fail-fast. Mnemonics and registers
// are case-insensitive; labels are case-sensitive; `;` and `//` start
// comments. Branch targets must resolve inside the program, except that the
// special `error` label may sit just past the last instruction.
AsmResult assemble(const std::string& source);

// Canonical text form; assemble(disassemble(p)) is instruction-identical to
// p. Referenced labels are re-emitted as `L<index>:`, the error sink keeps
// its name.
std::string disassemble(const TestProgram& program);

// Fixed six-entry macro library. Args are decimal or 0x-hex numerals where
// numeric. Throws UnknownMacro / ArityMismatch.
//   test_vector(v, sig)  one apply/compare step (the five-line pattern + clkdut)
//   alu_seed(seed, n)    seed load plus the first n of the seven chained commands
//   mem_march()          write/verify + complement write/verify at each address
//   pc_check()           sequential-fetch markers plus jump-target checks
//   ir_check()           opcode/operand field checks
//   cu_check()           instruction mix plus address-register checks
// Multi-phase expansions separate phases with `; phase:` comment lines; each
// phase pairs with its own DUT program image.
std::string expand_macro(const std::string& name, const std::vector<std::string>& args);

// The chained command list behind alu_seed and the ALU block test: each
// result becomes the next step's accumulator.
struct SeedOp {
    AluCommand cmd = AluCommand::Add;
    Byte immediate = 0;
};

inline constexpr Byte kCanonicalSeed = 0x3C;
const std::vector<SeedOp>& canonical_seed_ops();  // exactly 7, one per command

// alu_execute chained from seed; element k is the accumulator after ops[0..k].
std::vector<Byte> chain_signatures(Byte seed, const std::vector<SeedOp>& ops);

// March constants: the pattern written at each address, then its complement.
inline Byte march_pattern(int addr) { return Byte(addr ^ 0xA5); }

// Sequential-fetch marker expected after the DUT executes its a-th
// instruction in the PC check.
inline Byte pc_marker(int index) { return Byte(0x1E + 0x0F * index); }

}  // namespace coretest
