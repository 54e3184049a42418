#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "coretest/errors.hpp"

namespace coretest {

using Byte = std::uint8_t;
using Word = std::uint16_t;

inline constexpr std::size_t kRamWords = 8;   // 8x8 RAM
inline constexpr std::size_t kRomWords = 8;   // 8x16 ROM

// The seven ALU functions. On the control-word wire the command occupies
// 3 bits; code 7 is the idle/pass code (kAluIdleCode) and is not a member.
enum class AluCommand : std::uint8_t {
    Add = 0,
    Sub = 1,
    And = 2,
    Or  = 3,
    Xor = 4,
    Not = 5,  // ignores second input
    Shl = 6,  // ignores second input
};
inline constexpr int kAluCommandCount = 7;
inline constexpr std::uint8_t kAluIdleCode = 7;

struct Flags {
    bool zero = false;
    bool carry = false;

    bool operator==(const Flags&) const = default;
};

struct AluResult {
    Byte value = 0;
    Flags flags;
};

// Total over all inputs: result plus zero/carry flags.
AluResult alu_execute(AluCommand cmd, Byte a, Byte b);

struct Instruction {
    Byte opcode = 0;
    Byte operand = 0;
};

// DUT instruction set. Unknown opcodes (and the all-zero ROM padding word)
// decode as HALT so a runaway PC terminates deterministically.
namespace opcode {
inline constexpr Byte HALT = 0x00;
inline constexpr Byte LDI = 0x11;  // acc <- operand
inline constexpr Byte LDA = 0x12;  // acc <- ram[operand]
inline constexpr Byte STA = 0x13;  // ram[operand] <- acc
inline constexpr Byte ADD = 0x21;
inline constexpr Byte SUB = 0x22;
inline constexpr Byte AND = 0x23;
inline constexpr Byte OR  = 0x24;
inline constexpr Byte XOR = 0x25;
inline constexpr Byte NOT = 0x26;
inline constexpr Byte SHL = 0x27;
inline constexpr Byte JMP = 0x31;  // pc <- operand
inline constexpr Byte JNZ = 0x32;  // pc <- operand if zero flag clear
inline constexpr Byte INP = 0x41;  // acc <- port_in
inline constexpr Byte OUT = 0x42;  // acc driven onto the bus (port mirrors acc)
}  // namespace opcode

// One cycle's worth of control signals. m_rw: 1 = read, 0 = write; the idle
// value is read. With memory disabled, m_rw low doubles as the port-input
// strobe (the only cycle that needs it is INP's execute).
struct ControlWord {
    bool pc_inc = false;
    bool pc_load = false;
    bool alu_valid = false;
    std::uint8_t alu_cmd = kAluIdleCode;  // 3-bit wire: 0..6 commands, 7 idle
    bool ir_load = false;
    bool ir_valid = false;
    bool mdr_load_ram = false;
    bool mar_load_ram = false;
    bool m_en_ram = false;
    bool m_rw = true;

    bool operator==(const ControlWord&) const = default;
};

inline constexpr int kControlWordBits = 12;

// Packing order doubles as the ctrl fault-site order and the voter word layout.
std::uint16_t pack_control(const ControlWord& cw);
ControlWord unpack_control(std::uint16_t bits);

enum class Phase : std::uint8_t { Fetch, Decode, Execute };

const char* to_string(Phase phase);

enum class TrapKind : std::uint8_t { None, AddressOutOfRange, ConflictingControl };

const char* to_string(TrapKind trap);

struct ControllerState {
    Byte pc = 0;
    Word ir = 0;           // 16-bit instruction register
    Byte acc = 0;          // ALU accumulator; mirrored on the output port
    Flags flags;
    Byte mar = 0;
    Byte mdr = 0;
    std::array<Byte, kRamWords> ram{};
    std::array<Word, kRomWords> rom{};
    Byte bus = 0;          // shared global bus; holds its value when undriven
    ControlWord ctrl;
    Phase phase = Phase::Fetch;
    int exec_step = 0;     // LDA/STA spend two cycles in Execute
    std::uint64_t cycle = 0;
    bool halted = false;
    TrapKind trap = TrapKind::None;
    Byte port_in = 0;      // test vector driven by the tester

    // Clears everything except the loaded ROM.
    void reset();
};

struct PortPins {
    Byte port_in = 0;
    Byte port_out = 0;
};

// The accumulator is the observable response register.
PortPins observe_ports(const ControllerState& s);

ControllerState reset_state();

// Copies image into ROM, zero-padding the remaining words.
void load_rom(ControllerState& s, std::span<const Word> image);

// Parses the program-image text format: one word per line as 4 hex digits,
// `#` starts a comment, at most 8 data lines.
std::vector<Word> parse_rom_image(const std::string& text);

Instruction rom_fetch(const ControllerState& s, Byte addr);

Instruction decode(Word ir);

// Registered PC: increment wraps mod 256. Asserting both inc and load throws
// ConflictingControl (only a faulted control unit can do that).
Byte pc_tick(Byte pc, bool pc_inc, bool pc_load, Byte bus);

// Applies the RAM side of the current control word (m_en_ram gated).
void ram_access(ControllerState& s);

// Per-cycle control-unit output for the current phase/opcode.
ControlWord control_decode(Phase phase, int exec_step, Instruction instr, Flags flags);

// Resolved non-ALU bus drive for one cycle. drivers counts the IR, memory-read
// and port strobes; the ALU drives only when none of these do, so it never
// contributes to a conflict.
struct BusDrive {
    int drivers = 0;
    bool driven = false;
    Byte value = 0;
};

BusDrive resolve_bus(const ControlWord& cw, Byte ir_operand, Byte ram_value, Byte port_in);

// Injection points used by the fault engine; all run mid-cycle: after the
// control unit decodes (on_control), on every value leaving the ALU
// (on_alu_value, including pass-through loads and stores), and on the bus
// value each time it is (re)resolved (on_bus).
struct StepTaps {
    std::function<void(ControlWord&)> on_control;
    std::function<void(Byte&)> on_alu_value;
    std::function<void(Byte&)> on_bus;
};

struct TraceRow {
    std::uint64_t cycle = 0;
    Phase phase = Phase::Fetch;
    Byte pc = 0;
    Byte bus = 0;
    Byte port_out = 0;

    bool operator==(const TraceRow&) const = default;
};

using Trace = std::vector<TraceRow>;

enum class RunOutcome { Halted, Trapped, CycleBudgetExceeded };

struct RunResult {
    RunOutcome outcome = RunOutcome::Halted;
    Trace trace;
};

// Advances one clock cycle through the fetch/decode/execute machine.
// Datapath errors (bus conflicts, out-of-range addresses) trap: halted is set
// and the trap kind recorded instead of throwing. Stepping a machine that has
// already stopped throws StateHalted.
void step(ControllerState& s, const StepTaps* taps = nullptr);

// Runs until HALT, a trap, or the cycle budget is exhausted.
RunResult run_program(ControllerState& s, std::uint64_t max_cycles);

}  // namespace coretest
