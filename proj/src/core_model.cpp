#include "coretest/core_model.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace coretest {

AluResult alu_execute(AluCommand cmd, Byte a, Byte b) {
    AluResult r;
    switch (cmd) {
        case AluCommand::Add: {
            unsigned sum = unsigned(a) + unsigned(b);
            r.value = Byte(sum);
            r.flags.carry = sum > 0xFF;
            break;
        }
        case AluCommand::Sub: {
            r.value = Byte(a - b);
            r.flags.carry = a < b;  // borrow out
            break;
        }
        case AluCommand::And:
            r.value = Byte(a & b);
            break;
        case AluCommand::Or:
            r.value = Byte(a | b);
            break;
        case AluCommand::Xor:
            r.value = Byte(a ^ b);
            break;
        case AluCommand::Not:
            r.value = Byte(~a);
            break;
        case AluCommand::Shl:
            r.value = Byte(a << 1);
            r.flags.carry = (a & 0x80) != 0;
            break;
    }
    r.flags.zero = r.value == 0;
    return r;
}

std::uint16_t pack_control(const ControlWord& cw) {
    std::uint16_t bits = 0;
    bits |= std::uint16_t(cw.pc_inc) << 0;
    bits |= std::uint16_t(cw.pc_load) << 1;
    bits |= std::uint16_t(cw.alu_valid) << 2;
    bits |= std::uint16_t(cw.alu_cmd & 0x7) << 3;
    bits |= std::uint16_t(cw.ir_load) << 6;
    bits |= std::uint16_t(cw.ir_valid) << 7;
    bits |= std::uint16_t(cw.mdr_load_ram) << 8;
    bits |= std::uint16_t(cw.mar_load_ram) << 9;
    bits |= std::uint16_t(cw.m_en_ram) << 10;
    bits |= std::uint16_t(cw.m_rw) << 11;
    return bits;
}

ControlWord unpack_control(std::uint16_t bits) {
    ControlWord cw;
    cw.pc_inc = bits & (1u << 0);
    cw.pc_load = bits & (1u << 1);
    cw.alu_valid = bits & (1u << 2);
    cw.alu_cmd = (bits >> 3) & 0x7;
    cw.ir_load = bits & (1u << 6);
    cw.ir_valid = bits & (1u << 7);
    cw.mdr_load_ram = bits & (1u << 8);
    cw.mar_load_ram = bits & (1u << 9);
    cw.m_en_ram = bits & (1u << 10);
    cw.m_rw = bits & (1u << 11);
    return cw;
}

const char* to_string(Phase phase) {
    switch (phase) {
        case Phase::Fetch: return "fetch";
        case Phase::Decode: return "decode";
        case Phase::Execute: return "execute";
    }
    return "?";
}

const char* to_string(TrapKind trap) {
    switch (trap) {
        case TrapKind::None: return "none";
        case TrapKind::AddressOutOfRange: return "address out of range";
        case TrapKind::ConflictingControl: return "conflicting control";
    }
    return "?";
}

void ControllerState::reset() {
    auto saved_rom = rom;
    Byte saved_port = port_in;
    *this = ControllerState{};
    rom = saved_rom;
    port_in = saved_port;
}

PortPins observe_ports(const ControllerState& s) {
    return PortPins{s.port_in, s.acc};
}

ControllerState reset_state() {
    return ControllerState{};
}

void load_rom(ControllerState& s, std::span<const Word> image) {
    if (image.size() > kRomWords) {
        throw SimError(ErrKind::ImageTooLarge,
                       std::to_string(image.size()) + " words, ROM holds " +
                           std::to_string(kRomWords));
    }
    s.rom.fill(0);
    for (std::size_t i = 0; i < image.size(); ++i) s.rom[i] = image[i];
}

std::vector<Word> parse_rom_image(const std::string& text) {
    std::vector<Word> image;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::size_t begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        std::size_t end = line.find_last_not_of(" \t\r");
        std::string tok = line.substr(begin, end - begin + 1);
        if (tok.size() != 4 ||
            !std::all_of(tok.begin(), tok.end(),
                         [](unsigned char c) { return std::isxdigit(c); })) {
            throw std::runtime_error("image line " + std::to_string(lineno) +
                                     ": expected 4 hex digits, got '" + tok + "'");
        }
        if (image.size() == kRomWords) {
            throw SimError(ErrKind::ImageTooLarge,
                           "line " + std::to_string(lineno) + ": more than " +
                               std::to_string(kRomWords) + " words");
        }
        image.push_back(Word(std::stoul(tok, nullptr, 16)));
    }
    return image;
}

Instruction rom_fetch(const ControllerState& s, Byte addr) {
    if (addr >= kRomWords) {
        throw SimError(ErrKind::AddressOutOfRange,
                       "instruction fetch from " + std::to_string(addr));
    }
    return decode(s.rom[addr]);
}

Instruction decode(Word ir) {
    return Instruction{Byte(ir >> 8), Byte(ir & 0xFF)};
}

Byte pc_tick(Byte pc, bool pc_inc, bool pc_load, Byte bus) {
    if (pc_inc && pc_load) {
        throw SimError(ErrKind::ConflictingControl, "pc_inc and pc_load both asserted");
    }
    if (pc_load) return bus;
    if (pc_inc) return Byte(pc + 1);
    return pc;
}

void ram_access(ControllerState& s) {
    if (!s.ctrl.m_en_ram) return;
    if (s.mar >= kRamWords) {
        throw SimError(ErrKind::AddressOutOfRange,
                       "data access at " + std::to_string(s.mar));
    }
    if (s.ctrl.m_rw) {
        s.mdr = s.ram[s.mar];
    } else {
        s.ram[s.mar] = s.mdr;
    }
}

namespace {

std::uint8_t cmd_code(AluCommand cmd) { return std::uint8_t(cmd); }

}  // namespace

ControlWord control_decode(Phase phase, int exec_step, Instruction instr, Flags flags) {
    ControlWord cw;
    switch (phase) {
        case Phase::Fetch:
            cw.ir_load = true;
            cw.pc_inc = true;
            return cw;
        case Phase::Decode:
            cw.ir_valid = true;
            if (instr.opcode == opcode::LDA || instr.opcode == opcode::STA) {
                cw.mar_load_ram = true;  // capture the operand as the address
            }
            return cw;
        case Phase::Execute:
            break;
    }
    switch (instr.opcode) {
        case opcode::LDI:
            cw.ir_valid = true;
            cw.alu_valid = true;  // idle command: pass the bus into acc
            break;
        case opcode::ADD:
        case opcode::SUB:
        case opcode::AND:
        case opcode::OR:
        case opcode::XOR:
        case opcode::NOT:
        case opcode::SHL:
            cw.ir_valid = true;
            cw.alu_valid = true;
            cw.alu_cmd = cmd_code(AluCommand(instr.opcode - opcode::ADD));
            break;
        case opcode::JMP:
            cw.ir_valid = true;
            cw.pc_load = true;
            break;
        case opcode::JNZ:
            cw.ir_valid = true;
            cw.pc_load = !flags.zero;
            break;
        case opcode::INP:
            cw.alu_valid = true;
            cw.m_rw = false;  // memory disabled: low read/write strobes the input port
            break;
        case opcode::OUT:
            cw.alu_valid = true;  // no other driver, so the ALU puts acc on the bus
            break;
        case opcode::LDA:
            cw.m_en_ram = true;
            cw.m_rw = true;
            if (exec_step == 1) cw.alu_valid = true;  // second cycle latches into acc
            break;
        case opcode::STA:
            if (exec_step == 0) {
                cw.alu_valid = true;      // acc onto the bus
                cw.mdr_load_ram = true;   // and into MDR
            } else {
                cw.m_en_ram = true;
                cw.m_rw = false;
            }
            break;
        default:  // HALT and any unknown encoding stop the machine
            break;
    }
    return cw;
}

BusDrive resolve_bus(const ControlWord& cw, Byte ir_operand, Byte ram_value, Byte port_in) {
    BusDrive d;
    if (cw.ir_valid) {
        ++d.drivers;
        d.driven = true;
        d.value = ir_operand;
    }
    if (cw.m_en_ram && cw.m_rw) {
        ++d.drivers;
        d.driven = true;
        d.value = ram_value;
    }
    if (!cw.m_en_ram && !cw.m_rw) {
        ++d.drivers;
        d.driven = true;
        d.value = port_in;
    }
    return d;
}

namespace {

bool is_two_step(Byte op) { return op == opcode::LDA || op == opcode::STA; }

void trap(ControllerState& s, TrapKind kind) {
    s.trap = kind;
    s.halted = true;
    ++s.cycle;
}

}  // namespace

void step(ControllerState& s, const StepTaps* taps) {
    if (s.halted) {
        throw SimError(ErrKind::StateHalted, "step on a stopped machine");
    }

    Instruction instr = decode(s.ir);
    ControlWord cw = control_decode(s.phase, s.exec_step, instr, s.flags);
    if (taps && taps->on_control) taps->on_control(cw);
    s.ctrl = cw;

    // Memory read happens early so the freshly read word can drive the bus
    // this same cycle; writes use the MDR value latched on a previous cycle.
    Byte ram_value = 0;
    if (cw.m_en_ram) {
        if (s.mar >= kRamWords) {
            trap(s, TrapKind::AddressOutOfRange);
            return;
        }
        if (cw.m_rw) {
            s.mdr = s.ram[s.mar];
            ram_value = s.mdr;
        } else {
            s.ram[s.mar] = s.mdr;
        }
    }

    BusDrive drive = resolve_bus(cw, instr.operand, ram_value, s.port_in);
    if (drive.drivers > 1 || (cw.pc_inc && cw.pc_load)) {
        trap(s, TrapKind::ConflictingControl);
        return;
    }

    Byte bus = drive.driven ? drive.value : s.bus;  // undriven bus holds its value
    if (taps && taps->on_bus) taps->on_bus(bus);

    if (cw.alu_valid) {
        if (cw.alu_cmd < kAluCommandCount) {
            AluResult r = alu_execute(AluCommand(cw.alu_cmd), s.acc, bus);
            Byte value = r.value;
            if (taps && taps->on_alu_value) taps->on_alu_value(value);
            s.acc = value;
            s.flags = r.flags;
        } else if (drive.driven) {
            // Idle command with the bus driven elsewhere: pass into acc.
            Byte value = bus;
            if (taps && taps->on_alu_value) taps->on_alu_value(value);
            s.acc = value;
        } else {
            // Idle command, bus free: the ALU drives acc out.
            Byte value = s.acc;
            if (taps && taps->on_alu_value) taps->on_alu_value(value);
            bus = value;
            if (taps && taps->on_bus) taps->on_bus(bus);
        }
    }

    if (cw.mar_load_ram) s.mar = bus;
    if (cw.mdr_load_ram && !cw.m_en_ram) s.mdr = bus;

    if (cw.ir_load) {
        if (s.pc >= kRomWords) {
            trap(s, TrapKind::AddressOutOfRange);
            return;
        }
        s.ir = s.rom[s.pc];
    }
    s.pc = pc_tick(s.pc, cw.pc_inc, cw.pc_load, bus);
    s.bus = bus;

    switch (s.phase) {
        case Phase::Fetch:
            s.phase = Phase::Decode;
            break;
        case Phase::Decode:
            s.phase = Phase::Execute;
            s.exec_step = 0;
            break;
        case Phase::Execute:
            if (is_two_step(instr.opcode) && s.exec_step == 0) {
                s.exec_step = 1;
            } else {
                bool known = instr.opcode == opcode::LDI || instr.opcode == opcode::LDA ||
                             instr.opcode == opcode::STA || instr.opcode == opcode::JMP ||
                             instr.opcode == opcode::JNZ || instr.opcode == opcode::INP ||
                             instr.opcode == opcode::OUT ||
                             (instr.opcode >= opcode::ADD && instr.opcode <= opcode::SHL);
                if (!known) s.halted = true;  // HALT or an undefined encoding
                s.phase = Phase::Fetch;
                s.exec_step = 0;
            }
            break;
    }
    ++s.cycle;
}

RunResult run_program(ControllerState& s, std::uint64_t max_cycles) {
    RunResult result;
    while (!s.halted) {
        if (s.cycle >= max_cycles) {
            result.outcome = RunOutcome::CycleBudgetExceeded;
            return result;
        }
        Phase phase = s.phase;
        std::uint64_t cycle = s.cycle;
        step(s);
        result.trace.push_back(TraceRow{cycle, phase, s.pc, s.bus, s.acc});
    }
    result.outcome = s.trap == TrapKind::None ? RunOutcome::Halted : RunOutcome::Trapped;
    return result;
}

}  // namespace coretest
