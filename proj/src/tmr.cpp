#include "coretest/tmr.hpp"

#include <algorithm>

namespace coretest {

std::uint32_t majority_vote(std::uint32_t a, std::uint32_t b, std::uint32_t c,
                            int width_bits) {
    if (width_bits < 32) {
        std::uint32_t limit = 1u << width_bits;
        if (a >= limit || b >= limit || c >= limit) {
            throw SimError(ErrKind::WidthMismatch,
                           "inputs exceed " + std::to_string(width_bits) + " bits");
        }
    }
    return (a & b) | (b & c) | (a & c);
}

bool is_replica_region_site(const std::string& path) {
    return path.rfind("acc.", 0) == 0 || path.rfind("alu.result.", 0) == 0 ||
           path.rfind("ctrl.", 0) == 0;
}

const std::vector<std::string>& replica_region_sites() {
    static const std::vector<std::string> region = [] {
        std::vector<std::string> v;
        for (const auto& path : enumerate_sites()) {
            if (is_replica_region_site(path)) v.push_back(path);
        }
        return v;
    }();
    return region;
}

ResourceComparison resource_comparison() {
    ResourceComparison rc;
    int acc_bits = 0, alu_bits = 0, ctrl_bits = 0;
    for (const auto& path : enumerate_sites()) {
        if (path.rfind("acc.", 0) == 0) ++acc_bits;
        else if (path.rfind("alu.result.", 0) == 0) ++alu_bits;
        else if (path.rfind("ctrl.", 0) == 0) ++ctrl_bits;
    }
    int total = int(enumerate_sites().size());
    rc.baseline.alu = acc_bits + alu_bits;
    rc.baseline.cu = ctrl_bits;
    rc.baseline.shared = total - rc.baseline.alu - rc.baseline.cu;
    rc.baseline.voter = 0;
    rc.baseline.total = total;
    rc.tmr.alu = 3 * rc.baseline.alu;
    rc.tmr.cu = 3 * rc.baseline.cu;
    rc.tmr.shared = rc.baseline.shared;
    rc.tmr.voter = alu_bits + 2 + kControlWordBits;  // result + flags + control word
    rc.tmr.total = rc.tmr.alu + rc.tmr.cu + rc.tmr.shared + rc.tmr.voter;
    rc.ratio = double(rc.tmr.total) / double(rc.baseline.total);
    return rc;
}

const char* to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::AllAgree: return "ALL_AGREE";
        case Verdict::ReplicaFaulty: return "REPLICA_FAULTY";
        case Verdict::VoterUntrusted: return "VOTER_UNTRUSTED";
    }
    return "?";
}

void TmrModel::inject(const Fault& fault) {
    if (is_replica_region_site(fault.site)) {
        inject_replica(0, fault);
    } else {
        shared_overlay_.add(fault);
        settle();
    }
}

void TmrModel::inject_replica(int replica, const Fault& fault) {
    if (!is_replica_region_site(fault.site)) {
        throw SimError(ErrKind::UnknownSite,
                       "'" + fault.site + "' is not in the replicated region");
    }
    replica_overlay_[replica].add(fault);
    settle();
}

void TmrModel::clear() {
    for (auto& o : replica_overlay_) o = FaultOverlay{};
    shared_overlay_ = FaultOverlay{};
}

void TmrModel::clear_diagnosis() {
    disagree_bits_.fill(0);
    first_disagree_.fill(-1);
}

void TmrModel::reset() {
    shared_.reset();
    acc_.fill(0);
    // Stuck bits hold through a reset; pending SEUs stay pending.
    for (int i = 0; i < 3; ++i) acc_[i] = Byte(replica_overlay_[i].acc.apply(acc_[i]));
    apply_state_masks(shared_, shared_overlay_);
}

void TmrModel::load_rom(std::span<const Word> image) {
    coretest::load_rom(shared_, image);
}

namespace {

std::uint16_t pack_flags(const Flags& f) {
    return std::uint16_t(f.zero) | std::uint16_t(f.carry) << 1;
}

void trap(ControllerState& s, TrapKind kind) {
    s.trap = kind;
    s.halted = true;
    ++s.cycle;
}

bool is_two_step(Byte op) { return op == opcode::LDA || op == opcode::STA; }

bool known_opcode(Byte op) {
    return op == opcode::LDI || op == opcode::LDA || op == opcode::STA ||
           op == opcode::JMP || op == opcode::JNZ || op == opcode::INP ||
           op == opcode::OUT || (op >= opcode::ADD && op <= opcode::SHL);
}

}  // namespace

void TmrModel::settle() {
    for (int i = 0; i < 3; ++i) {
        auto& o = replica_overlay_[i];
        for (auto& e : o.seus) {
            if (!e.fired && e.site.target == SiteTarget::Acc &&
                e.cycle == shared_.cycle) {
                acc_[i] ^= Byte(1 << e.site.bit);
                e.fired = true;
            }
        }
        acc_[i] = Byte(o.acc.apply(acc_[i]));
    }
    settle_state(shared_, shared_overlay_);
}

void TmrModel::step() {
    ControllerState& s = shared_;
    if (s.halted) {
        throw SimError(ErrKind::StateHalted, "step on a stopped machine");
    }
    std::uint64_t this_cycle = s.cycle;

    Instruction instr = decode(s.ir);
    ControlWord clean_cw = control_decode(s.phase, s.exec_step, instr, s.flags);

    // Three control units, each with its own fault overlay on the output word.
    std::array<std::uint16_t, 3> cw_bits{};
    for (int i = 0; i < 3; ++i) {
        std::uint16_t bits = replica_overlay_[i].ctrl.apply(pack_control(clean_cw));
        for (auto& e : replica_overlay_[i].seus) {
            if (!e.fired && e.site.target == SiteTarget::Ctrl && e.cycle == this_cycle) {
                bits ^= std::uint16_t(1 << e.site.bit);
                e.fired = true;
            }
        }
        cw_bits[i] = bits;
    }
    std::uint16_t voted_bits = std::uint16_t(
        majority_vote(cw_bits[0], cw_bits[1], cw_bits[2], kControlWordBits));
    ControlWord cw = unpack_control(voted_bits);
    s.ctrl = cw;

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
    Byte bus = drive.driven ? drive.value : s.bus;
    bus = Byte(shared_overlay_.bus.apply(bus));

    // Three ALUs fed by the voted command, their own accumulators, and the
    // shared bus. value[i] is what replica i's result stage presents this
    // cycle; the voters sit on those values and on the flag candidates.
    std::array<Byte, 3> value{};
    std::array<std::uint16_t, 3> flag_bits{};
    bool compute = cw.alu_valid && cw.alu_cmd < kAluCommandCount;
    bool pass_in = cw.alu_valid && cw.alu_cmd >= kAluCommandCount && drive.driven;
    bool pass_out = cw.alu_valid && cw.alu_cmd >= kAluCommandCount && !drive.driven;
    for (int i = 0; i < 3; ++i) {
        auto& o = replica_overlay_[i];
        Byte v;
        if (compute) {
            AluResult r = alu_execute(AluCommand(cw.alu_cmd), acc_[i], bus);
            v = r.value;
            flag_bits[i] = pack_flags(r.flags);
        } else {
            v = pass_in ? bus : acc_[i];
            flag_bits[i] = pack_flags(s.flags);
        }
        v = Byte(o.alu_result.apply(v));
        for (auto& e : o.seus) {
            if (!e.fired && e.site.target == SiteTarget::AluResult &&
                e.cycle == this_cycle) {
                v ^= Byte(1 << e.site.bit);
                e.fired = true;
            }
        }
        value[i] = v;
        if (compute || pass_in) acc_[i] = v;
    }
    Byte voted_value = Byte(majority_vote(value[0], value[1], value[2], 8));
    if (compute) {
        std::uint16_t voted_flags =
            std::uint16_t(majority_vote(flag_bits[0], flag_bits[1], flag_bits[2], 2));
        s.flags = Flags{(voted_flags & 1) != 0, (voted_flags & 2) != 0};
    }
    if (pass_out) {
        bus = voted_value;
        bus = Byte(shared_overlay_.bus.apply(bus));
    }
    s.acc = voted_value;  // the observable response register is the voted output

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
                if (!known_opcode(instr.opcode)) s.halted = true;
                s.phase = Phase::Fetch;
                s.exec_step = 0;
            }
            break;
    }
    ++s.cycle;

    // Per-cycle replica-vs-voter comparison for the diagnosis latches.
    std::uint16_t voted_flag_bits = std::uint16_t(
        majority_vote(flag_bits[0], flag_bits[1], flag_bits[2], 2));
    std::uint32_t voted_word = std::uint32_t(voted_bits) |
                               std::uint32_t(voted_value) << kControlWordBits |
                               std::uint32_t(voted_flag_bits) << (kControlWordBits + 8);
    for (int i = 0; i < 3; ++i) {
        std::uint32_t word = std::uint32_t(cw_bits[i]) |
                             std::uint32_t(value[i]) << kControlWordBits |
                             std::uint32_t(flag_bits[i]) << (kControlWordBits + 8);
        std::uint32_t diff = word ^ voted_word;
        if (diff != 0) {
            disagree_bits_[i] |= diff;
            if (first_disagree_[i] < 0) first_disagree_[i] = std::int64_t(this_cycle);
        }
    }

    settle();
}

RunResult TmrModel::run(std::uint64_t max_cycles) {
    RunResult result;
    while (!shared_.halted) {
        if (shared_.cycle >= max_cycles) {
            result.outcome = RunOutcome::CycleBudgetExceeded;
            return result;
        }
        Phase phase = shared_.phase;
        std::uint64_t cycle = shared_.cycle;
        step();
        result.trace.push_back(
            TraceRow{cycle, phase, shared_.pc, shared_.bus, shared_.acc});
    }
    result.outcome =
        shared_.trap == TrapKind::None ? RunOutcome::Halted : RunOutcome::Trapped;
    return result;
}

Diagnosis diagnose(const TmrModel& model) {
    Diagnosis d;
    d.disagreeing_bits = model.disagreement_masks();
    int faulty = -1;
    int count = 0;
    for (int i = 0; i < 3; ++i) {
        if (d.disagreeing_bits[i] != 0) {
            ++count;
            faulty = i;
        }
    }
    if (count == 0) {
        d.verdict = Verdict::AllAgree;
    } else if (count == 1) {
        d.verdict = Verdict::ReplicaFaulty;
        d.replica = faulty;
        d.first_disagreement_cycle = model.first_disagreement()[faulty];
    } else {
        d.verdict = Verdict::VoterUntrusted;
        d.first_disagreement_cycle =
            *std::min_element(model.first_disagreement().begin(),
                              model.first_disagreement().end(),
                              [](std::int64_t a, std::int64_t b) {
                                  if (a < 0) return false;
                                  if (b < 0) return true;
                                  return a < b;
                              });
    }
    return d;
}

}  // namespace coretest
