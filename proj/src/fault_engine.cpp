#include "coretest/fault_engine.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace coretest {

namespace {

constexpr const char* kCtrlBitNames[kControlWordBits] = {
    "pc_inc", "pc_load", "alu_valid", "alu_cmd.0", "alu_cmd.1", "alu_cmd.2",
    "ir_load", "ir_valid", "mdr_load_ram", "mar_load_ram", "m_en_ram", "m_rw",
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(),
                                     [](unsigned char c) { return std::isdigit(c); });
}

int parse_bit(const std::string& seg, int width, const std::string& path) {
    if (!all_digits(seg)) throw SimError(ErrKind::UnknownSite, path);
    int bit = std::stoi(seg);
    if (bit >= width) throw SimError(ErrKind::UnknownSite, path);
    return bit;
}

}  // namespace

SiteRef parse_site(const std::string& path) {
    auto parts = split(path, '.');
    SiteRef site;
    if (parts.size() == 2) {
        const std::string& reg = parts[0];
        if (reg == "acc") site.target = SiteTarget::Acc;
        else if (reg == "pc") site.target = SiteTarget::Pc;
        else if (reg == "ir") site.target = SiteTarget::Ir;
        else if (reg == "mar") site.target = SiteTarget::Mar;
        else if (reg == "mdr") site.target = SiteTarget::Mdr;
        else if (reg == "bus") site.target = SiteTarget::Bus;
        else if (reg == "flags") {
            site.target = SiteTarget::Flags;
            if (parts[1] == "zero") site.bit = 0;
            else if (parts[1] == "carry") site.bit = 1;
            else throw SimError(ErrKind::UnknownSite, path);
            return site;
        } else if (reg == "ctrl") {
            site.target = SiteTarget::Ctrl;
            for (int i = 0; i < kControlWordBits; ++i) {
                if (parts[1] == kCtrlBitNames[i]) {
                    site.bit = i;
                    return site;
                }
            }
            throw SimError(ErrKind::UnknownSite, path);
        } else {
            throw SimError(ErrKind::UnknownSite, path);
        }
        site.bit = parse_bit(parts[1], site.target == SiteTarget::Ir ? 16 : 8, path);
        return site;
    }
    if (parts.size() == 3) {
        if (parts[0] == "ram" && parts[1].rfind("cell", 0) == 0) {
            site.target = SiteTarget::Ram;
            std::string idx = parts[1].substr(4);
            if (!all_digits(idx)) throw SimError(ErrKind::UnknownSite, path);
            site.cell = std::stoi(idx);
            if (site.cell >= int(kRamWords)) throw SimError(ErrKind::UnknownSite, path);
            site.bit = parse_bit(parts[2], 8, path);
            return site;
        }
        if (parts[0] == "ctrl" && parts[1] == "alu_cmd") {
            site.target = SiteTarget::Ctrl;
            site.bit = 3 + parse_bit(parts[2], 3, path);
            return site;
        }
        if (parts[0] == "alu" && parts[1] == "result") {
            site.target = SiteTarget::AluResult;
            site.bit = parse_bit(parts[2], 8, path);
            return site;
        }
    }
    throw SimError(ErrKind::UnknownSite, path);
}

std::string site_path(const SiteRef& site) {
    switch (site.target) {
        case SiteTarget::Acc: return "acc." + std::to_string(site.bit);
        case SiteTarget::Pc: return "pc." + std::to_string(site.bit);
        case SiteTarget::Ir: return "ir." + std::to_string(site.bit);
        case SiteTarget::Mar: return "mar." + std::to_string(site.bit);
        case SiteTarget::Mdr: return "mdr." + std::to_string(site.bit);
        case SiteTarget::Bus: return "bus." + std::to_string(site.bit);
        case SiteTarget::Flags: return site.bit == 0 ? "flags.zero" : "flags.carry";
        case SiteTarget::Ram:
            return "ram.cell" + std::to_string(site.cell) + "." + std::to_string(site.bit);
        case SiteTarget::Ctrl: return std::string("ctrl.") + kCtrlBitNames[site.bit];
        case SiteTarget::AluResult: return "alu.result." + std::to_string(site.bit);
    }
    return "?";
}

bool natural_less(const std::string& a, const std::string& b) {
    // Compare character runs: digit runs as numbers, everything else bytewise,
    // so "cell2" sorts before "cell10".
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (std::isdigit(static_cast<unsigned char>(a[i])) &&
            std::isdigit(static_cast<unsigned char>(b[j]))) {
            std::size_t ie = i, je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
            long na = std::stol(a.substr(i, ie - i));
            long nb = std::stol(b.substr(j, je - j));
            if (na != nb) return na < nb;
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    return (a.size() - i) < (b.size() - j);
}

const std::vector<std::string>& enumerate_sites() {
    static const std::vector<std::string> catalog = [] {
        std::vector<std::string> v;
        auto bits = [&v](const std::string& prefix, int n) {
            for (int i = 0; i < n; ++i) v.push_back(prefix + "." + std::to_string(i));
        };
        bits("acc", 8);
        bits("pc", 8);
        bits("ir", 16);
        bits("mar", 8);
        bits("mdr", 8);
        bits("bus", 8);
        v.push_back("flags.zero");
        v.push_back("flags.carry");
        for (int c = 0; c < int(kRamWords); ++c) bits("ram.cell" + std::to_string(c), 8);
        for (const char* name : kCtrlBitNames) v.push_back(std::string("ctrl.") + name);
        bits("alu.result", 8);
        std::sort(v.begin(), v.end(), natural_less);
        return v;
    }();
    return catalog;
}

bool is_site(const std::string& path) {
    try {
        parse_site(path);
        return true;
    } catch (const SimError&) {
        return false;
    }
}

const char* to_string(FaultKind kind) {
    switch (kind) {
        case FaultKind::StuckAt0: return "sa0";
        case FaultKind::StuckAt1: return "sa1";
        case FaultKind::Seu: return "seu";
    }
    return "?";
}

std::vector<Fault> parse_fault_list(const std::string& text) {
    std::vector<Fault> faults;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string site, kind, extra;
        if (!(fields >> site)) continue;  // blank line
        std::string where = "fault list line " + std::to_string(lineno);
        if (!(fields >> kind) || (fields >> extra)) {
            throw std::runtime_error(where + ": expected '<site> <sa0|sa1|seu:<cycle>>'");
        }
        if (!is_site(site)) {
            throw SimError(ErrKind::UnknownSite, where + ": '" + site + "'");
        }
        Fault f;
        f.site = site;
        if (kind == "sa0") {
            f.kind = FaultKind::StuckAt0;
        } else if (kind == "sa1") {
            f.kind = FaultKind::StuckAt1;
        } else if (kind.rfind("seu:", 0) == 0 && all_digits(kind.substr(4))) {
            f.kind = FaultKind::Seu;
            f.seu_cycle = std::stoull(kind.substr(4));
        } else {
            throw std::runtime_error(where + ": bad fault kind '" + kind + "'");
        }
        faults.push_back(std::move(f));
    }
    return faults;
}

void FaultOverlay::add(const Fault& fault) {
    SiteRef site = parse_site(fault.site);
    if (fault.kind == FaultKind::Seu) {
        seus.push_back(SeuEvent{site, fault.seu_cycle, false});
        return;
    }
    MaskPair* masks = nullptr;
    switch (site.target) {
        case SiteTarget::Acc: masks = &acc; break;
        case SiteTarget::Pc: masks = &pc; break;
        case SiteTarget::Ir: masks = &ir; break;
        case SiteTarget::Mar: masks = &mar; break;
        case SiteTarget::Mdr: masks = &mdr; break;
        case SiteTarget::Bus: masks = &bus; break;
        case SiteTarget::Flags: masks = &flags; break;
        case SiteTarget::Ram: masks = &ram[site.cell]; break;
        case SiteTarget::Ctrl: masks = &ctrl; break;
        case SiteTarget::AluResult: masks = &alu_result; break;
    }
    std::uint16_t bit = std::uint16_t(1 << site.bit);
    if (fault.kind == FaultKind::StuckAt1) {
        masks->set |= bit;
    } else {
        masks->clear |= bit;
    }
}

bool FaultOverlay::empty() const {
    if (acc.any() || pc.any() || ir.any() || mar.any() || mdr.any() || bus.any() ||
        flags.any() || ctrl.any() || alu_result.any() || !seus.empty()) {
        return false;
    }
    return std::none_of(ram.begin(), ram.end(), [](const MaskPair& m) { return m.any(); });
}

namespace {

std::uint16_t pack_flags(const Flags& f) {
    return std::uint16_t(f.zero) | std::uint16_t(f.carry) << 1;
}

Flags unpack_flags(std::uint16_t bits) {
    return Flags{(bits & 1) != 0, (bits & 2) != 0};
}

void flip_state_bit(ControllerState& s, const SiteRef& site) {
    switch (site.target) {
        case SiteTarget::Acc: s.acc ^= Byte(1 << site.bit); break;
        case SiteTarget::Pc: s.pc ^= Byte(1 << site.bit); break;
        case SiteTarget::Ir: s.ir ^= Word(1 << site.bit); break;
        case SiteTarget::Mar: s.mar ^= Byte(1 << site.bit); break;
        case SiteTarget::Mdr: s.mdr ^= Byte(1 << site.bit); break;
        case SiteTarget::Bus: s.bus ^= Byte(1 << site.bit); break;
        case SiteTarget::Flags:
            s.flags = unpack_flags(pack_flags(s.flags) ^ std::uint16_t(1 << site.bit));
            break;
        case SiteTarget::Ram: s.ram[site.cell] ^= Byte(1 << site.bit); break;
        case SiteTarget::Ctrl:
        case SiteTarget::AluResult:
            break;  // wire sites flip inside the step taps, never in stored state
    }
}

bool is_wire(SiteTarget target) {
    return target == SiteTarget::Ctrl || target == SiteTarget::AluResult;
}

}  // namespace

void apply_state_masks(ControllerState& s, const FaultOverlay& o) {
    s.acc = Byte(o.acc.apply(s.acc));
    s.pc = Byte(o.pc.apply(s.pc));
    s.ir = Word(o.ir.apply(s.ir));
    s.mar = Byte(o.mar.apply(s.mar));
    s.mdr = Byte(o.mdr.apply(s.mdr));
    s.bus = Byte(o.bus.apply(s.bus));
    s.flags = unpack_flags(o.flags.apply(pack_flags(s.flags)));
    for (std::size_t c = 0; c < kRamWords; ++c) s.ram[c] = Byte(o.ram[c].apply(s.ram[c]));
}

void settle_state(ControllerState& s, FaultOverlay& overlay) {
    for (auto& e : overlay.seus) {
        if (!e.fired && !is_wire(e.site.target) && e.cycle == s.cycle) {
            flip_state_bit(s, e.site);
            e.fired = true;
        }
    }
    apply_state_masks(s, overlay);
}

void FaultedModel::inject(const Fault& fault) {
    overlay_.add(fault);
    active_.push_back(fault);
    settle();
}

void FaultedModel::set_overlay(FaultOverlay overlay) {
    overlay_ = std::move(overlay);
    active_.clear();
    settle();
}

void FaultedModel::clear() {
    overlay_ = FaultOverlay{};
    active_.clear();
}

void FaultedModel::settle() { settle_state(state_, overlay_); }

void FaultedModel::step() {
    std::uint64_t this_cycle = state_.cycle;

    StepTaps taps;
    taps.on_control = [this, this_cycle](ControlWord& cw) {
        std::uint16_t bits = pack_control(cw);
        bits = overlay_.ctrl.apply(bits);
        for (auto& e : overlay_.seus) {
            if (!e.fired && e.site.target == SiteTarget::Ctrl && e.cycle == this_cycle) {
                bits ^= std::uint16_t(1 << e.site.bit);
            }
        }
        cw = unpack_control(bits);
    };
    taps.on_alu_value = [this, this_cycle](Byte& v) {
        v = Byte(overlay_.alu_result.apply(v));
        for (auto& e : overlay_.seus) {
            if (!e.fired && e.site.target == SiteTarget::AluResult && e.cycle == this_cycle) {
                v ^= Byte(1 << e.site.bit);
            }
        }
    };
    taps.on_bus = [this](Byte& v) { v = Byte(overlay_.bus.apply(v)); };

    coretest::step(state_, &taps);

    // A wire flip is consumed by its cycle whether or not the wire was used.
    for (auto& e : overlay_.seus) {
        if (!e.fired && is_wire(e.site.target) && e.cycle == this_cycle) e.fired = true;
    }
    settle();
}

RunResult FaultedModel::run(std::uint64_t max_cycles) {
    RunResult result;
    while (!state_.halted) {
        if (state_.cycle >= max_cycles) {
            result.outcome = RunOutcome::CycleBudgetExceeded;
            return result;
        }
        Phase phase = state_.phase;
        std::uint64_t cycle = state_.cycle;
        step();
        result.trace.push_back(TraceRow{cycle, phase, state_.pc, state_.bus, state_.acc});
    }
    result.outcome =
        state_.trap == TrapKind::None ? RunOutcome::Halted : RunOutcome::Trapped;
    return result;
}

}  // namespace coretest
