#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "coretest/core_model.hpp"
#include "coretest/fault_engine.hpp"

namespace coretest {

// Bitwise 2-of-3 majority. Inputs must fit in width_bits; a wider value is a
// wiring error and throws WidthMismatch.
std::uint32_t majority_vote(std::uint32_t a, std::uint32_t b, std::uint32_t c,
                            int width_bits = 32);

// Sites belonging to the triplicated blocks: the ALU slice (accumulator and
// result wire) and the control-unit output word. Everything else is shared.
bool is_replica_region_site(const std::string& path);
const std::vector<std::string>& replica_region_sites();

// Layout of the per-cycle replica output word used for diagnosis:
// bits 0..11 control word (pack_control order), 12..19 ALU output value,
// bit 20 zero flag, bit 21 carry flag.
inline constexpr int kReplicaWordBits = 22;

struct BlockCounts {
    int alu = 0;      // accumulator + result bits
    int cu = 0;       // control word bits
    int shared = 0;   // everything else in the site catalog
    int voter = 0;    // voted bits: ALU result + flags + control word
    int total = 0;
};

struct ResourceComparison {
    BlockCounts baseline;
    BlockCounts tmr;
    double ratio = 0.0;  // tmr.total / baseline.total
};

ResourceComparison resource_comparison();

// Core model with the ALU and control unit triplicated behind bitwise
// majority voters. Shared blocks (PC, IR, MAR, MDR, RAM, ROM, bus, flags
// register) are single-instance and consume voter outputs only. The voter
// itself is assumed fault-free; replica sequencing stays in lockstep because
// the phase machine is driven by the shared IR.
class TmrModel {
public:
    TmrModel() = default;
    explicit TmrModel(ControllerState initial) : shared_(std::move(initial)) {
        for (auto& a : acc_) a = shared_.acc;
    }

    ControllerState& shared() { return shared_; }
    const ControllerState& shared() const { return shared_; }
    Byte replica_acc(int replica) const { return acc_[replica]; }
    const FaultOverlay& replica_overlay(int replica) const {
        return replica_overlay_[replica];
    }

    // Routes faults the way the simulator wires them: replicated-region sites
    // land in replica 0, shared sites in the shared overlay.
    void inject(const Fault& fault);
    // Places a fault in one specific replica; the site must be in the
    // replicated region.
    void inject_replica(int replica, const Fault& fault);
    void clear();
    // Wipes the accumulated disagreement log. Cold resets don't: the log
    // belongs to the test rig's online checker, not to the core, so it spans
    // multi-phase suites that reset the core between phases.
    void clear_diagnosis();

    void reset();  // cold reset: keeps ROM and the held input port
    void load_rom(std::span<const Word> image);

    void step();
    RunResult run(std::uint64_t max_cycles);

    // Cumulative replica-vs-voter disagreement bits and the cycle each
    // replica first diverged (-1 = never).
    const std::array<std::uint32_t, 3>& disagreement_masks() const {
        return disagree_bits_;
    }
    const std::array<std::int64_t, 3>& first_disagreement() const {
        return first_disagree_;
    }

private:
    void settle();

    ControllerState shared_;
    std::array<Byte, 3> acc_{};
    std::array<FaultOverlay, 3> replica_overlay_{};
    FaultOverlay shared_overlay_;
    std::array<std::uint32_t, 3> disagree_bits_{};
    std::array<std::int64_t, 3> first_disagree_{-1, -1, -1};
};

inline TmrModel tmr_wrap(ControllerState state) { return TmrModel(std::move(state)); }

enum class Verdict { AllAgree, ReplicaFaulty, VoterUntrusted };

const char* to_string(Verdict verdict);

struct Diagnosis {
    Verdict verdict = Verdict::AllAgree;
    int replica = -1;  // set when verdict == ReplicaFaulty
    std::array<std::uint32_t, 3> disagreeing_bits{};
    std::int64_t first_disagreement_cycle = -1;
};

// Replica-vs-voter comparison over everything stepped so far: zero replicas
// ever diverged = AllAgree, exactly one = ReplicaFaulty, more = the majority
// assumption is gone and the verdict is VoterUntrusted.
Diagnosis diagnose(const TmrModel& model);

}  // namespace coretest
