#include "coretest/assembler.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <sstream>

namespace coretest {

const char* to_string(Mnemonic m) {
    switch (m) {
        case Mnemonic::Ldi: return "ldi";
        case Mnemonic::Out: return "out";
        case Mnemonic::In: return "in";
        case Mnemonic::Cpi: return "cpi";
        case Mnemonic::Brne: return "brne";
        case Mnemonic::Rjmp: return "rjmp";
        case Mnemonic::Clkdut: return "clkdut";
        case Mnemonic::Nop: return "nop";
        case Mnemonic::Halt: return "halt";
    }
    return "?";
}

const char* to_string(AsmErrKind kind) {
    switch (kind) {
        case AsmErrKind::UnknownMnemonic: return "UnknownMnemonic";
        case AsmErrKind::BadRegister: return "BadRegister";
        case AsmErrKind::ImmediateRange: return "ImmediateRange";
        case AsmErrKind::DuplicateLabel: return "DuplicateLabel";
        case AsmErrKind::UndefinedLabel: return "UndefinedLabel";
        case AsmErrKind::BranchOutOfRange: return "BranchOutOfRange";
    }
    return "?";
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool is_ident(const std::string& s) {
    if (s.empty() || (!std::isalpha((unsigned char)s[0]) && s[0] != '_')) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_';
    });
}

std::optional<int> parse_number(const std::string& tok) {
    if (tok.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        int base = tok.rfind("0x", 0) == 0 || tok.rfind("0X", 0) == 0 ? 16 : 10;
        int v = std::stoi(base == 16 ? tok.substr(2) : tok, &used, base);
        if (used != (base == 16 ? tok.size() - 2 : tok.size())) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

std::optional<int> parse_register(const std::string& tok) {
    if (tok.size() < 2 || (tok[0] != 'r' && tok[0] != 'R')) return std::nullopt;
    auto n = parse_number(tok.substr(1));
    if (!n || *n < 0 || *n > 31) return std::nullopt;
    return n;
}

std::string strip_comment(const std::string& line) {
    std::string out = line;
    if (auto pos = out.find("//"); pos != std::string::npos) out.erase(pos);
    if (auto pos = out.find(';'); pos != std::string::npos) out.erase(pos);
    return out;
}

std::vector<std::string> split_operands(const std::string& s) {
    std::vector<std::string> ops;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) ops.push_back(trim(cur));
    if (!ops.empty() && ops.back().empty()) ops.pop_back();
    return ops;
}

struct ParsedLine {
    std::optional<std::string> label;
    bool has_instruction = false;
    TesterInstruction instr;
    std::string branch_label;  // unresolved BRNE/RJMP target
    std::optional<AsmError> error;
};

ParsedLine parse_line(const std::string& raw, int lineno) {
    ParsedLine out;
    auto fail = [&](AsmErrKind kind, const std::string& msg) {
        out.error = AsmError{lineno, kind, msg};
        return out;
    };

    std::string text = trim(strip_comment(raw));
    if (auto colon = text.find(':'); colon != std::string::npos) {
        std::string name = trim(text.substr(0, colon));
        if (!is_ident(name)) {
            return fail(AsmErrKind::UnknownMnemonic, "malformed label '" + name + "'");
        }
        out.label = name;
        text = trim(text.substr(colon + 1));
    }
    if (text.empty()) return out;

    std::string mnemonic, rest;
    if (auto sp = text.find_first_of(" \t"); sp == std::string::npos) {
        mnemonic = text;
    } else {
        mnemonic = text.substr(0, sp);
        rest = trim(text.substr(sp + 1));
    }
    std::string m = lower(mnemonic);
    auto ops = split_operands(rest);

    auto need_register = [&](const std::string& tok, bool immediate_capable) -> std::optional<int> {
        auto r = parse_register(tok);
        if (!r) {
            out.error = AsmError{lineno, AsmErrKind::BadRegister,
                                 "expected a register, got '" + tok + "'"};
            return std::nullopt;
        }
        if (immediate_capable && *r < 16) {
            out.error = AsmError{lineno, AsmErrKind::BadRegister,
                                 "r16-r31 required for immediate operands"};
            return std::nullopt;
        }
        return r;
    };
    auto need_immediate = [&](const std::string& tok) -> std::optional<int> {
        auto v = parse_number(tok);
        if (!v || *v < 0 || *v > 255) {
            out.error = AsmError{lineno, AsmErrKind::ImmediateRange,
                                 "immediate '" + tok + "' not in 0..255"};
            return std::nullopt;
        }
        return v;
    };

    out.has_instruction = true;
    if (m == "ldi" || m == "cpi") {
        if (ops.size() != 2) {
            return fail(ops.empty() ? AsmErrKind::BadRegister : AsmErrKind::ImmediateRange,
                        m + " needs a register and an immediate");
        }
        auto r = need_register(ops[0], true);
        if (!r) return out;
        auto v = need_immediate(ops[1]);
        if (!v) return out;
        out.instr.mnemonic = m == "ldi" ? Mnemonic::Ldi : Mnemonic::Cpi;
        out.instr.reg = *r;
        out.instr.immediate = Byte(*v);
    } else if (m == "out") {
        if (ops.size() != 2 || !is_ident(ops[0])) {
            return fail(AsmErrKind::UnknownMnemonic, "out needs a port and a register");
        }
        auto r = need_register(ops[1], false);
        if (!r) return out;
        out.instr.mnemonic = Mnemonic::Out;
        out.instr.reg = *r;
    } else if (m == "in") {
        if (ops.size() != 2 || !is_ident(ops[1])) {
            return fail(AsmErrKind::UnknownMnemonic, "in needs a register and a port");
        }
        auto r = need_register(ops[0], false);
        if (!r) return out;
        out.instr.mnemonic = Mnemonic::In;
        out.instr.reg = *r;
    } else if (m == "brne" || m == "rjmp") {
        if (ops.size() != 1) {
            return fail(AsmErrKind::UndefinedLabel, m + " needs one label");
        }
        out.instr.mnemonic = m == "brne" ? Mnemonic::Brne : Mnemonic::Rjmp;
        out.branch_label = ops[0];
    } else if (m == "clkdut" || m == "nop" || m == "halt") {
        if (!ops.empty()) {
            return fail(AsmErrKind::UnknownMnemonic, m + " takes no operands");
        }
        out.instr.mnemonic =
            m == "clkdut" ? Mnemonic::Clkdut : (m == "nop" ? Mnemonic::Nop : Mnemonic::Halt);
    } else {
        return fail(AsmErrKind::UnknownMnemonic, "unknown mnemonic '" + mnemonic + "'");
    }
    return out;
}

}  // namespace

AsmResult assemble(const std::string& source) {
    AsmResult result;
    std::vector<ParsedLine> lines;
    {
        std::istringstream in(source);
        std::string raw;
        int lineno = 0;
        while (std::getline(in, raw)) lines.push_back(parse_line(raw, ++lineno));
    }

    // Pass 1: bind labels to instruction indices.
    TestProgram& prog = result.program;
    int index = 0;
    int lineno = 0;
    for (const auto& line : lines) {
        ++lineno;
        if (line.label) {
            auto [it, fresh] = prog.labels.emplace(*line.label, index);
            (void)it;
            if (!fresh) {
                result.errors.push_back(AsmError{
                    lineno, AsmErrKind::DuplicateLabel, "label '" + *line.label + "' redefined"});
            }
        }
        if (line.error) {
            result.errors.push_back(*line.error);
        } else if (line.has_instruction) {
            ++index;
        }
    }

    // Pass 2: encode and resolve branch targets.
    lineno = 0;
    for (const auto& line : lines) {
        ++lineno;
        if (line.error || !line.has_instruction) continue;
        TesterInstruction instr = line.instr;
        if (!line.branch_label.empty()) {
            auto it = prog.labels.find(line.branch_label);
            if (it == prog.labels.end()) {
                result.errors.push_back(AsmError{lineno, AsmErrKind::UndefinedLabel,
                                                 "label '" + line.branch_label + "' undefined"});
                continue;
            }
            instr.target = it->second;
            bool trailing_error =
                line.branch_label == "error" && instr.target == index;
            if (instr.target >= index && !trailing_error) {
                result.errors.push_back(
                    AsmError{lineno, AsmErrKind::BranchOutOfRange,
                             "target '" + line.branch_label + "' resolves past the program"});
                continue;
            }
        }
        prog.instructions.push_back(instr);
        prog.source_map.push_back(lineno);
    }

    if (!result.errors.empty()) {
        result.program = TestProgram{};
        std::sort(result.errors.begin(), result.errors.end(),
                  [](const AsmError& a, const AsmError& b) { return a.line < b.line; });
    }
    return result;
}

namespace {

std::string hex_byte(Byte v) {
    static const char* digits = "0123456789ABCDEF";
    return std::string("0x") + digits[v >> 4] + digits[v & 0xF];
}

}  // namespace

std::string disassemble(const TestProgram& program) {
    const int len = int(program.instructions.size());
    const int err = program.error_index();
    std::set<int> targets;
    for (const auto& instr : program.instructions) {
        if (instr.target >= 0) targets.insert(instr.target);
    }
    auto label_for = [&](int t) {
        return t == err ? std::string("error") : "L" + std::to_string(t);
    };

    std::string out;
    for (int i = 0; i < len; ++i) {
        if (i == err) {
            out += "error:\n";
        } else if (targets.count(i)) {
            out += label_for(i) + ":\n";
        }
        const TesterInstruction& instr = program.instructions[i];
        out += "    ";
        switch (instr.mnemonic) {
            case Mnemonic::Ldi:
                out += "ldi r" + std::to_string(instr.reg) + ", " + hex_byte(instr.immediate);
                break;
            case Mnemonic::Cpi:
                out += "cpi r" + std::to_string(instr.reg) + ", " + hex_byte(instr.immediate);
                break;
            case Mnemonic::Out:
                out += "out portd, r" + std::to_string(instr.reg);
                break;
            case Mnemonic::In:
                out += "in r" + std::to_string(instr.reg) + ", pinb";
                break;
            case Mnemonic::Brne:
                out += "brne " + label_for(instr.target);
                break;
            case Mnemonic::Rjmp:
                out += "rjmp " + label_for(instr.target);
                break;
            default:
                out += to_string(instr.mnemonic);
                break;
        }
        out += "\n";
    }
    if (err == len && len >= 0) out += "error:\n";
    return out;
}

const std::vector<SeedOp>& canonical_seed_ops() {
    static const std::vector<SeedOp> ops = {
        {AluCommand::Add, 0x5B}, {AluCommand::Sub, 0x2D}, {AluCommand::And, 0xF3},
        {AluCommand::Or, 0x0E},  {AluCommand::Xor, 0xA7}, {AluCommand::Not, 0x00},
        {AluCommand::Shl, 0x00},
    };
    return ops;
}

std::vector<Byte> chain_signatures(Byte seed, const std::vector<SeedOp>& ops) {
    std::vector<Byte> expected;
    Byte acc = seed;
    for (const SeedOp& op : ops) {
        acc = alu_execute(op.cmd, acc, op.immediate).value;
        expected.push_back(acc);
    }
    return expected;
}

namespace {

std::string compare_lines(Byte signature) {
    return "in r17, pinb\ncpi r17, " + hex_byte(signature) + "\nbrne error\n";
}

std::string clkduts(int n) {
    std::string out;
    for (int i = 0; i < n; ++i) out += "clkdut\n";
    return out;
}

std::string drive_lines(Byte vector) {
    return "ldi r16, " + hex_byte(vector) + "\nout portd, r16\n";
}

std::string expand_test_vector(Byte v, Byte sig) {
    return drive_lines(v) + "clkdut\n" + compare_lines(sig);
}

std::string expand_alu_seed(Byte seed, int n_ops) {
    std::vector<SeedOp> ops(canonical_seed_ops().begin(),
                            canonical_seed_ops().begin() + n_ops);
    std::vector<Byte> expected = chain_signatures(seed, ops);
    std::string out = "; phase: chained commands from seed " + hex_byte(seed) + "\n";
    out += "clkdut\n";  // the seed load
    for (int k = 0; k < n_ops; ++k) out += "clkdut\n" + compare_lines(expected[k]);
    return out;
}

std::string expand_mem_march() {
    std::string out;
    for (int a = 0; a < int(kRamWords); ++a) {
        Byte p = march_pattern(a);
        out += "; phase: march address " + std::to_string(a) + "\n";
        out += drive_lines(p) + clkduts(4) + compare_lines(p);
        out += drive_lines(Byte(~p)) + clkduts(3) + compare_lines(Byte(~p));
        out += clkduts(1);  // let the halt retire
    }
    return out;
}

std::string expand_pc_check() {
    std::string out = "; phase: sequential fetch\n";
    for (int i = 0; i < 8; ++i) out += clkduts(1) + compare_lines(pc_marker(i));
    out += "; phase: jump targets\n";
    out += clkduts(2) + compare_lines(0xBB);
    out += clkduts(2) + compare_lines(0xCC);
    out += clkduts(1);
    return out;
}

std::string expand_ir_check() {
    std::string out = "; phase: opcode and operand fields\n";
    for (Byte sig : {Byte(0x0F), Byte(0xFF), Byte(0x00), Byte(0x55)}) {
        out += clkduts(1) + compare_lines(sig);
    }
    out += clkduts(1);
    return out;
}

std::string expand_cu_check() {
    std::string out = "; phase: branch flow\n";
    out += clkduts(2) + compare_lines(0x01);
    out += clkduts(2) + compare_lines(0x00);
    out += clkduts(2) + compare_lines(0x00);
    out += clkduts(1);
    out += "; phase: memory path\n";
    out += drive_lines(0x5A) + clkduts(3) + compare_lines(0x00);
    out += clkduts(1) + compare_lines(0x5A);
    out += clkduts(2);
    for (int k = 0; k < 3; ++k) {
        out += "; phase: address line " + std::to_string(k) + "\n";
        out += drive_lines(0x5A) + clkduts(4) + compare_lines(0x00);
        out += clkduts(1);
    }
    return out;
}

int macro_arg(const std::string& macro, const std::vector<std::string>& args,
              std::size_t index, int lo, int hi) {
    auto v = parse_number(args[index]);
    if (!v || *v < lo || *v > hi) {
        throw SimError(ErrKind::ArityMismatch,
                       macro + ": argument " + std::to_string(index + 1) + " ('" +
                           args[index] + "') not in " + std::to_string(lo) + ".." +
                           std::to_string(hi));
    }
    return *v;
}

void expect_args(const std::string& macro, const std::vector<std::string>& args,
                 std::size_t n) {
    if (args.size() != n) {
        throw SimError(ErrKind::ArityMismatch,
                       macro + " takes " + std::to_string(n) + " argument(s), got " +
                           std::to_string(args.size()));
    }
}

}  // namespace

std::string expand_macro(const std::string& name, const std::vector<std::string>& args) {
    if (name == "test_vector") {
        expect_args(name, args, 2);
        return expand_test_vector(Byte(macro_arg(name, args, 0, 0, 255)),
                                  Byte(macro_arg(name, args, 1, 0, 255)));
    }
    if (name == "alu_seed") {
        expect_args(name, args, 2);
        return expand_alu_seed(Byte(macro_arg(name, args, 0, 0, 255)),
                               macro_arg(name, args, 1, 1, 7));
    }
    if (name == "mem_march") {
        expect_args(name, args, 0);
        return expand_mem_march();
    }
    if (name == "pc_check") {
        expect_args(name, args, 0);
        return expand_pc_check();
    }
    if (name == "ir_check") {
        expect_args(name, args, 0);
        return expand_ir_check();
    }
    if (name == "cu_check") {
        expect_args(name, args, 0);
        return expand_cu_check();
    }
    throw SimError(ErrKind::UnknownMacro, "'" + name + "'");
}

}  // namespace coretest
