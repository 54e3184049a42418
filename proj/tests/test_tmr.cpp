#include <doctest.h>

#include <random>

#include "coretest/tmr.hpp"

using namespace coretest;

namespace {

constexpr Word ins(Byte op, Byte operand = 0) { return Word(Word(op) << 8 | operand); }

const std::vector<Word> kMixedProgram = {
    ins(opcode::LDI, 0x2A), ins(opcode::ADD, 0x13), ins(opcode::STA, 2),
    ins(opcode::LDI, 0x00), ins(opcode::LDA, 2),  ins(opcode::XOR, 0xFF),
    ins(opcode::OUT),       ins(opcode::HALT)};

}  // namespace

TEST_CASE("majority vote is the per-bit two-of-three formula, exhaustively") {
    for (int bit = 0; bit < 8; ++bit) {
        for (int combo = 0; combo < 8; ++combo) {
            std::uint32_t a = std::uint32_t((combo >> 0) & 1) << bit;
            std::uint32_t b = std::uint32_t((combo >> 1) & 1) << bit;
            std::uint32_t c = std::uint32_t((combo >> 2) & 1) << bit;
            CHECK(majority_vote(a, b, c, 8) == ((a & b) | (b & c) | (a & c)));
        }
    }
    CHECK(majority_vote(0b1010, 0b1100, 0b0110, 4) == 0b1110);
}

TEST_CASE("majority vote properties on random words") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<std::uint32_t> word(0, (1u << 22) - 1);
    for (int i = 0; i < 1000; ++i) {
        std::uint32_t x = word(rng), y = word(rng);
        CHECK(majority_vote(x, x, y, 22) == x);
        CHECK(majority_vote(x, y, x, 22) == x);
        CHECK(majority_vote(y, x, x, 22) == x);
        CHECK(majority_vote(x, x, x, 22) == x);
    }
    CHECK_THROWS_AS(majority_vote(1u << 8, 0, 0, 8), SimError);
}

TEST_CASE("replica region covers the alu slice and control wires only") {
    const auto& region = replica_region_sites();
    CHECK(region.size() == 28);  // 8 acc + 8 alu.result + 12 ctrl
    for (const std::string& path : region) CHECK(is_replica_region_site(path));
    CHECK_FALSE(is_replica_region_site("pc.0"));
    CHECK_FALSE(is_replica_region_site("ram.cell0.0"));
    CHECK_FALSE(is_replica_region_site("bus.3"));
    CHECK(is_replica_region_site("ctrl.m_rw"));
    CHECK(is_replica_region_site("alu.result.0"));
}

TEST_CASE("fault-free redundancy is cycle-identical to the bare core") {
    ControllerState bare;
    load_rom(bare, kMixedProgram);
    bare.port_in = 0x11;
    ControllerState seed = bare;

    RunResult want = run_program(bare, 200);
    TmrModel tmr(seed);
    RunResult got = tmr.run(200);
    CHECK(want.outcome == got.outcome);
    REQUIRE(want.trace.size() == got.trace.size());
    CHECK(want.trace == got.trace);
    CHECK(diagnose(tmr).verdict == Verdict::AllAgree);
}

TEST_CASE("a single replica fault is outvoted and pinned on that replica") {
    for (int replica = 0; replica < 3; ++replica) {
        ControllerState bare;
        load_rom(bare, kMixedProgram);
        RunResult want = run_program(bare, 200);

        TmrModel tmr;
        tmr.load_rom(kMixedProgram);
        tmr.inject_replica(replica, {"acc.3", FaultKind::StuckAt1, 0});
        RunResult got = tmr.run(200);

        CHECK(want.trace == got.trace);  // fully masked at the shared fabric
        Diagnosis d = diagnose(tmr);
        CHECK(d.verdict == Verdict::ReplicaFaulty);
        CHECK(d.replica == replica);
        CHECK(d.first_disagreement_cycle >= 0);
    }
}

TEST_CASE("two replicas with different faults leave the voter untrusted") {
    TmrModel tmr;
    tmr.load_rom(kMixedProgram);
    tmr.inject_replica(0, {"acc.3", FaultKind::StuckAt1, 0});
    tmr.inject_replica(1, {"acc.5", FaultKind::StuckAt1, 0});
    tmr.run(200);
    CHECK(diagnose(tmr).verdict == Verdict::VoterUntrusted);
}

TEST_CASE("identical double faults outvote the clean replica") {
    // The nastier failure mode: two replicas wrong in the same way form the
    // majority, the vote tracks them, and diagnosis pins the one honest
    // replica as the dissenter. Redundancy gives no warning here.
    TmrModel tmr;
    tmr.load_rom(kMixedProgram);
    tmr.inject_replica(0, {"acc.3", FaultKind::StuckAt1, 0});
    tmr.inject_replica(1, {"acc.3", FaultKind::StuckAt1, 0});
    tmr.run(200);

    ControllerState clean;
    load_rom(clean, kMixedProgram);
    run_program(clean, 200);

    FaultedModel faulted;
    load_rom(faulted.state(), kMixedProgram);
    faulted.inject({"acc.3", FaultKind::StuckAt1, 0});
    faulted.run(200);

    // The voted result is the single-fault result, not the clean one.
    CHECK(tmr.shared().acc == faulted.state().acc);
    CHECK(tmr.shared().acc != clean.acc);

    Diagnosis d = diagnose(tmr);
    CHECK(d.verdict == Verdict::ReplicaFaulty);
    CHECK(d.replica == 2);  // the clean replica gets the blame
}

TEST_CASE("shared-fabric faults are not masked by redundancy") {
    // The program stores 0x3D in cell 2; bit 1 of that value is clear, so a
    // stuck-at-1 there corrupts the reload. Redundancy cannot help and both
    // models agree on the corrupted result.
    TmrModel tmr;
    tmr.load_rom(kMixedProgram);
    tmr.inject({"ram.cell2.1", FaultKind::StuckAt1, 0});
    tmr.run(200);

    ControllerState bare;
    load_rom(bare, kMixedProgram);
    run_program(bare, 200);

    FaultedModel faulted;
    load_rom(faulted.state(), kMixedProgram);
    faulted.inject({"ram.cell2.1", FaultKind::StuckAt1, 0});
    faulted.run(200);
    CHECK(tmr.shared().acc == faulted.state().acc);
    CHECK(tmr.shared().acc != bare.acc);
}

TEST_CASE("region faults on the tmr model default into a replica overlay") {
    TmrModel tmr;
    tmr.load_rom(kMixedProgram);
    tmr.inject({"ctrl.alu_valid", FaultKind::StuckAt0, 0});
    CHECK(tmr.replica_overlay(0).ctrl.any());
    CHECK_FALSE(tmr.replica_overlay(1).ctrl.any());

    CHECK_THROWS_AS(tmr.inject_replica(1, {"pc.0", FaultKind::StuckAt1, 0}), SimError);
}

TEST_CASE("element counts satisfy the structural identity") {
    ResourceComparison rc = resource_comparison();
    CHECK(rc.baseline.total == 142);
    CHECK(rc.baseline.alu == 16);
    CHECK(rc.baseline.cu == 12);
    CHECK(rc.baseline.voter == 0);
    CHECK(rc.tmr.voter == kReplicaWordBits);
    CHECK(rc.tmr.total ==
          rc.baseline.total + 2 * (rc.baseline.alu + rc.baseline.cu) + rc.tmr.voter);
    CHECK(rc.ratio == doctest::Approx(double(rc.tmr.total) / rc.baseline.total));
    CHECK(rc.baseline.total == int(enumerate_sites().size()));
}

TEST_CASE("tmr reset keeps rom, held port, and the disagreement log") {
    TmrModel tmr;
    tmr.load_rom(kMixedProgram);
    tmr.shared().port_in = 0x21;
    tmr.inject_replica(2, {"acc.0", FaultKind::StuckAt1, 0});
    tmr.run(200);
    CHECK(diagnose(tmr).verdict == Verdict::ReplicaFaulty);

    tmr.reset();
    CHECK(tmr.shared().cycle == 0);
    CHECK(tmr.shared().port_in == 0x21);
    CHECK(tmr.shared().rom[0] == kMixedProgram[0]);
    // The online checker's log survives core resets so that diagnosis spans
    // multi-phase suites; only an explicit wipe clears it.
    CHECK(diagnose(tmr).verdict == Verdict::ReplicaFaulty);
    CHECK(tmr.replica_overlay(2).acc.any());  // the fault persists too

    tmr.clear_diagnosis();
    CHECK(diagnose(tmr).verdict == Verdict::AllAgree);

    tmr.run(200);
    CHECK(diagnose(tmr).verdict == Verdict::ReplicaFaulty);  // re-manifests
    CHECK(diagnose(tmr).replica == 2);
}
