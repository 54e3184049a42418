#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coretest/core_model.hpp"

namespace coretest {

// One injectable bit in the model. Paths are hierarchical, e.g. `acc.3`,
// `ctrl.pc_inc`, `ctrl.alu_cmd.1`, `ram.cell5.7`, `alu.result.0`.
enum class SiteTarget : std::uint8_t {
    Acc,        // accumulator register, 8 bits
    Pc,         // program counter, 8 bits
    Ir,         // instruction register, 16 bits
    Mar,        // memory address register, 8 bits
    Mdr,        // memory data register, 8 bits
    Bus,        // shared global bus, 8 bits
    Flags,      // bit 0 = zero, bit 1 = carry
    Ram,        // 8 cells x 8 bits
    Ctrl,       // decoded control word, 12 bits (pack_control order)
    AluResult,  // value leaving the ALU, 8 bits
};

struct SiteRef {
    SiteTarget target = SiteTarget::Acc;
    int cell = 0;  // RAM cell index when target == Ram
    int bit = 0;

    bool operator==(const SiteRef&) const = default;
};

// Resolves a path against the site catalog; throws UnknownSite otherwise.
SiteRef parse_site(const std::string& path);

std::string site_path(const SiteRef& site);

// Deterministic catalog of every injectable bit, sorted by path (numeric
// segments compare as numbers, so acc.2 precedes acc.10).
const std::vector<std::string>& enumerate_sites();

bool is_site(const std::string& path);

// Numeric-aware path comparison used for catalog and report ordering.
bool natural_less(const std::string& a, const std::string& b);

enum class FaultKind : std::uint8_t { StuckAt0, StuckAt1, Seu };

const char* to_string(FaultKind kind);

struct Fault {
    std::string site;
    FaultKind kind = FaultKind::StuckAt0;
    std::uint64_t seu_cycle = 0;  // meaningful only when kind == Seu
};

// Parses the fault-list text format: one `<site-path> <sa0|sa1|seu:<cycle>>`
// per line, `#` comments. Unknown paths or malformed kinds abort with the
// offending line number.
std::vector<Fault> parse_fault_list(const std::string& text);

// Stuck-at masks for one signal; set wins over nothing, clear wins over set
// only in the sense that the two never overlap for distinct faults.
struct MaskPair {
    std::uint16_t set = 0;
    std::uint16_t clear = 0;

    std::uint16_t apply(std::uint16_t v) const { return (v | set) & std::uint16_t(~clear); }
    bool any() const { return set != 0 || clear != 0; }
};

struct SeuEvent {
    SiteRef site;
    std::uint64_t cycle = 0;
    bool fired = false;
};

// The full set of active faults, kept separate from machine state so that
// clearing faults never un-corrupts state they already caused.
struct FaultOverlay {
    MaskPair acc, pc, ir, mar, mdr, bus, flags, ctrl, alu_result;
    std::array<MaskPair, kRamWords> ram{};
    std::vector<SeuEvent> seus;

    void add(const Fault& fault);  // throws UnknownSite
    bool empty() const;
};

// Applies the stuck-at masks for stored state (registers, memories). Control
// and ALU masks live on wires and are applied mid-step instead.
void apply_state_masks(ControllerState& s, const FaultOverlay& overlay);

// Cycle-boundary maintenance: fires state-register SEUs whose cycle has
// arrived, then reapplies the stuck-at masks. Wire SEUs (ctrl, alu.result)
// are consumed inside the step taps, not here.
void settle_state(ControllerState& s, FaultOverlay& overlay);

// A core model plus an overlay of active faults. With no faults injected the
// behavior is bit-identical to stepping the bare model.
class FaultedModel {
public:
    FaultedModel() = default;
    explicit FaultedModel(ControllerState initial) : state_(std::move(initial)) {}

    ControllerState& state() { return state_; }
    const ControllerState& state() const { return state_; }
    const FaultOverlay& overlay() const { return overlay_; }
    const std::vector<Fault>& active() const { return active_; }

    void inject(const Fault& fault);
    void set_overlay(FaultOverlay overlay);  // used when isolating a TMR replica

    // Removes every fault; architectural state keeps whatever damage happened.
    void clear();

    void step();
    RunResult run(std::uint64_t max_cycles);

private:
    void settle();  // post-cycle stuck-at reapplication + due SEU flips

    ControllerState state_;
    FaultOverlay overlay_;
    std::vector<Fault> active_;
};

}  // namespace coretest
