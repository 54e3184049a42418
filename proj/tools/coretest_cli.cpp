#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "coretest/report.hpp"

using namespace coretest;

namespace {

// Exit contract: 0 = PASS/success, 1 = test FAIL or assembly error,
// 2 = usage or I/O error.
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream body;
    body << in.rdbuf();
    return body.str();
}

bool write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << body;
    return bool(out);
}

bool emit_report(const std::string& path, const OrderedJson& doc) {
    if (path.empty()) return true;
    if (!write_file(path, doc.dump(2) + "\n")) {
        std::cerr << "cannot write report '" << path << "'\n";
        return false;
    }
    return true;
}

// A program argument is either a built-in block macro name or a tester
// source path (which then needs its own --rom image).
int resolve_program(const std::string& prog, const std::string& rom_path,
                    CampaignInput& input) {
    if (auto block = parse_block_macro(prog)) {
        if (!rom_path.empty()) {
            std::cerr << "built-in macro '" << prog << "' carries its own images; drop --rom\n";
            return kExitUsage;
        }
        input = campaign_input_from_macro(*block);
        return 0;
    }
    auto source = read_file(prog);
    if (!source) {
        std::cerr << "cannot read program '" << prog << "'\n";
        return kExitUsage;
    }
    AsmResult assembled = assemble(*source);
    if (!assembled.ok()) {
        for (const AsmError& e : assembled.errors) {
            std::cerr << prog << ":" << e.line << ": " << to_string(e.kind) << ": "
                      << e.message << "\n";
        }
        return kExitFail;
    }
    if (rom_path.empty()) {
        std::cerr << "a source program needs --rom <image>\n";
        return kExitUsage;
    }
    auto image_text = read_file(rom_path);
    if (!image_text) {
        std::cerr << "cannot read image '" << rom_path << "'\n";
        return kExitUsage;
    }
    std::vector<Word> image;
    try {
        image = parse_rom_image(*image_text);
    } catch (const std::exception& e) {
        std::cerr << rom_path << ": " << e.what() << "\n";
        return kExitUsage;
    }
    input = campaign_input_from_program(prog, std::move(assembled.program), std::move(image));
    return 0;
}

int cmd_assemble(const std::string& src, const std::string& out_path) {
    auto source = read_file(src);
    if (!source) {
        std::cerr << "cannot read '" << src << "'\n";
        return kExitUsage;
    }
    AsmResult assembled = assemble(*source);
    if (!assembled.ok()) {
        for (const AsmError& e : assembled.errors) {
            std::cerr << src << ":" << e.line << ": " << to_string(e.kind) << ": " << e.message
                      << "\n";
        }
        return kExitFail;
    }
    if (!write_file(out_path, write_listing(assembled.program))) {
        std::cerr << "cannot write '" << out_path << "'\n";
        return kExitUsage;
    }
    return 0;
}

int cmd_run(const std::string& prog, const std::string& rom_path,
            const std::string& faults_path, bool tmr, double clock_hz,
            std::uint64_t max_cycles, const std::string& report_path) {
    CampaignInput input;
    if (int rc = resolve_program(prog, rom_path, input); rc != 0) return rc;

    std::vector<Fault> faults;
    if (!faults_path.empty()) {
        auto text = read_file(faults_path);
        if (!text) {
            std::cerr << "cannot read fault list '" << faults_path << "'\n";
            return kExitUsage;
        }
        try {
            faults = parse_fault_list(*text);
        } catch (const std::exception& e) {
            std::cerr << faults_path << ": " << e.what() << "\n";
            return kExitUsage;
        }
    }

    RunContext ctx;
    ctx.program = prog;
    ctx.tmr = tmr;
    ctx.clock_hz = clock_hz;
    for (const Fault& f : faults) ctx.faults.push_back(fault_spec(f));

    MacroRun run;
    if (tmr) {
        // Replica-region faults land in replica 0 (redundancy should mask
        // them); everything else hits the shared fabric.
        TmrDut dut;
        for (const Fault& f : faults) {
            if (is_replica_region_site(f.site)) {
                dut.model().inject_replica(0, f);
            } else {
                dut.model().inject(f);
            }
        }
        run = run_phases(input.phases, dut, clock_hz, max_cycles);
    } else {
        ModelDut dut;
        for (const Fault& f : faults) dut.model().inject(f);
        run = run_phases(input.phases, dut, clock_hz, max_cycles);
    }

    if (!emit_report(report_path, run_report_json(ctx, run))) return kExitUsage;
    std::cout << summarize(run.summary) << "\n";
    return run.summary.pass ? 0 : kExitFail;
}

int cmd_campaign(const std::string& prog, const std::string& rom_path,
                 const std::string& sites_glob, int jobs, double clock_hz,
                 std::uint64_t max_cycles, const std::string& report_path) {
    CampaignInput input;
    if (int rc = resolve_program(prog, rom_path, input); rc != 0) return rc;

    std::vector<std::string> sites = select_sites(sites_glob);
    CoverageReport coverage = run_campaign(input, sites, jobs, clock_hz, max_cycles);
    if (!emit_report(report_path, campaign_report_json(coverage, sites_glob))) {
        return kExitUsage;
    }
    std::cout << "coverage " << coverage.detected << "/" << coverage.total_faults << " = "
              << coverage.coverage << (coverage.vacuous ? " (vacuous: no faults selected)" : "")
              << "\n";
    return 0;
}

int cmd_tmr_report(const std::string& report_path) {
    ResourceComparison comparison = resource_comparison();
    TmrSuiteResult suite = run_tmr_suite();
    if (!emit_report(report_path, tmr_report_json(comparison, suite))) return kExitUsage;

    std::cout << "elements: baseline " << comparison.baseline.total << ", redundant "
              << comparison.tmr.total << " (ratio " << comparison.ratio << ")\n";
    std::cout << "reference synthesis context: 112 -> 201 slices (ratio " << 201.0 / 112.0
              << "), quoted, not asserted\n";
    std::cout << "masking sweep: " << suite.masked << "/" << suite.injected << " masked\n";
    std::cout << "diagnosis: " << suite.diagnosis_correct << "/" << suite.injected
              << " correct, " << suite.false_accusations << " false accusations\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"test bench for the 8-bit embedded controller model"};
    app.require_subcommand(1);

    std::string asm_src, asm_out;
    CLI::App* cmd_asm = app.add_subcommand("assemble", "assemble a tester program");
    cmd_asm->add_option("src", asm_src, "tester source file")->required();
    cmd_asm->add_option("-o,--output", asm_out, "listing output path")->required();

    std::string run_prog, run_rom, run_faults, run_report;
    bool run_tmr = false;
    double run_clock = 16e6;
    std::uint64_t run_max = kDefaultDutCycleBudget;
    CLI::App* cmd_r = app.add_subcommand("run", "run one program against the model");
    cmd_r->add_option("prog", run_prog, "block macro name or tester source path")->required();
    cmd_r->add_option("--rom", run_rom, "image for a source program");
    cmd_r->add_option("--faults", run_faults, "fault list file");
    cmd_r->add_flag("--tmr", run_tmr, "wrap the model in triple redundancy");
    cmd_r->add_option("--clock-hz", run_clock, "tester clock")->check(CLI::PositiveNumber);
    cmd_r->add_option("--max-cycles", run_max, "cumulative model cycle budget");
    cmd_r->add_option("--report", run_report, "structured report path");

    std::string camp_prog, camp_rom, camp_sites = "*", camp_report;
    int camp_jobs = 1;
    double camp_clock = 16e6;
    std::uint64_t camp_max = kDefaultDutCycleBudget;
    CLI::App* cmd_c = app.add_subcommand("campaign", "sweep stuck-at faults for coverage");
    cmd_c->add_option("prog", camp_prog, "block macro name or tester source path")->required();
    cmd_c->add_option("--rom", camp_rom, "image for a source program");
    cmd_c->add_option("--sites", camp_sites, "site glob, e.g. 'ram.*'");
    cmd_c->add_option("--jobs", camp_jobs, "parallel fault simulations")
        ->check(CLI::PositiveNumber);
    cmd_c->add_option("--clock-hz", camp_clock, "tester clock")->check(CLI::PositiveNumber);
    cmd_c->add_option("--max-cycles", camp_max, "cumulative model cycle budget per fault");
    cmd_c->add_option("--report", camp_report, "coverage report path")->required();

    std::string tmr_report_path;
    CLI::App* cmd_t = app.add_subcommand("tmr-report", "resource comparison and masking suite");
    cmd_t->add_option("--report", tmr_report_path, "structured report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (cmd_asm->parsed()) return cmd_assemble(asm_src, asm_out);
        if (cmd_r->parsed()) {
            return cmd_run(run_prog, run_rom, run_faults, run_tmr, run_clock, run_max,
                           run_report);
        }
        if (cmd_c->parsed()) {
            return cmd_campaign(camp_prog, camp_rom, camp_sites, camp_jobs, camp_clock,
                                camp_max, camp_report);
        }
        if (cmd_t->parsed()) return cmd_tmr_report(tmr_report_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
