// Command-line surface for the steering-hierarchy toolkit: membership checks,
// steering-functional bounds, instrumental checks, fixture generators and
// offline certificate validation.
//
// Exit codes (the machine contract): 0 verdict feasible / bound computed,
// 2 verdict infeasible (post-quantum certified), 3 verdict unknown,
// 1 input or usage error. A verdict record is written on exits 0/2/3.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "steerhier/io.hpp"
#include "steerhier/oracle.hpp"

using namespace steerhier;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string input, output;
    int level = 2;
    double tol = 1e-8;
    double solver_gap = 1e-9;
    int threads = 0;
    uint64_t seed = 0;
    std::string scenario_json;
};

SdpOptions make_options(const CommonArgs& args) {
    SdpOptions opts;
    opts.input_tol = args.tol;
    opts.solver.gap_tol = args.solver_gap;
    opts.solver.feas_tol = args.solver_gap;
    opts.solver.threads = args.threads;
    if (const char* path = std::getenv("STEERHIER_SOLVER_SETTINGS")) {
        json j = io::read_json_file(path);
        opts.solver.max_iterations = j.value("max_iterations", opts.solver.max_iterations);
        opts.solver.gap_tol = j.value("gap_tol", opts.solver.gap_tol);
        opts.solver.feas_tol = j.value("feas_tol", opts.solver.feas_tol);
        opts.solver.threads = j.value("threads", opts.solver.threads);
    }
    return opts;
}

std::string sibling_path(const std::string& base, const std::string& suffix) {
    std::string stem = base;
    if (stem.size() > 5 && stem.substr(stem.size() - 5) == ".json") stem = stem.substr(0, stem.size() - 5);
    return stem + suffix;
}

std::string default_output(const std::string& input) { return sibling_path(input, ".verdict.json"); }

int finish_verdict(const SolveOutcome& out, const ScenarioSpec& scenario, const CommonArgs& args,
                   const std::string& command, const std::string& digest) {
    std::string verdict_path = args.output.empty() ? default_output(args.input) : args.output;
    io::write_json_file(verdict_path, io::verdict_record(out, scenario, args.level, command, digest));
    for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
    if (out.feasible()) {
        std::string cert_path = sibling_path(verdict_path, ".cert.json");
        io::write_json_file(cert_path, io::to_json(*out.certificate));
        std::cout << command << ": feasible at level " << args.level << " (certificate revalidated, worst residual "
                  << out.certificate_report.max_residual() << ")\n"
                  << "verdict record: " << verdict_path << "\ncertificate: " << cert_path << "\n";
        return 0;
    }
    if (out.infeasible()) {
        std::string dual_path = sibling_path(verdict_path, ".dual.json");
        io::write_json_file(dual_path, io::dual_certificate_to_json(out, scenario, args.level));
        std::cout << command << ": infeasible at level " << args.level
                  << " -- no quantum realization (dual margin " << out.dual_margin << ")\n"
                  << "verdict record: " << verdict_path << "\ndual certificate: " << dual_path << "\n";
        return 2;
    }
    std::cout << command << ": unknown (solver status " << out.solver_status << ")\n"
              << "verdict record: " << verdict_path << "\n";
    return 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semidefinite hierarchy tests for Bob-with-Input EPR assemblages"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string against, alice_dims_str = "";
    int aux_dim = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--input", args.input, "input JSON file")->required();
        cmd->add_option("--output", args.output, "verdict record path (default: <input>.verdict.json)");
        cmd->add_option("--level,-n", args.level, "hierarchy level (>= 1)")->check(CLI::PositiveNumber);
        cmd->add_option("--tol", args.tol, "input validation tolerance");
        cmd->add_option("--solver-gap", args.solver_gap, "solver gap/feasibility tolerance");
        cmd->add_option("--threads", args.threads, "solver threads (0 = default)");
    };

    auto* check = app.add_subcommand("check", "test membership of an assemblage at one hierarchy level");
    add_common(check);

    auto* bound = app.add_subcommand("bound", "upper-bound a steering functional over one hierarchy level");
    add_common(bound);

    auto* icheck = app.add_subcommand("instrumental-check", "test an instrumental assemblage at one level");
    add_common(icheck);

    auto* gen_q = app.add_subcommand("gen-quantum", "generate a random quantum assemblage");
    gen_q->add_option("--scenario", args.scenario_json, "inline scenario JSON")->required();
    gen_q->add_option("--seed", args.seed, "RNG seed")->required();
    gen_q->add_option("--output", args.output, "output path")->required();
    gen_q->add_option("--aux-dim", aux_dim, "Bob auxiliary dimension");
    gen_q->add_option("--alice-dims", alice_dims_str, "comma-separated Alice dimensions (default: |A| each)");

    auto* gen_ns = app.add_subcommand("gen-ns", "generate a random non-signalling assemblage (N=1, |Y|=1)");
    gen_ns->add_option("--scenario", args.scenario_json, "inline scenario JSON")->required();
    gen_ns->add_option("--seed", args.seed, "RNG seed")->required();
    gen_ns->add_option("--output", args.output, "output path")->required();

    auto* gen_tw = app.add_subcommand("gen-twist", "generate the transpose-twist candidate (N=1, |A|=|X|=|Y|=2, d=2)");
    gen_tw->add_option("--seed", args.seed, "RNG seed")->required();
    gen_tw->add_option("--output", args.output, "output path")->required();

    auto* vcert = app.add_subcommand("validate-cert", "re-validate a certificate file against an assemblage");
    vcert->add_option("cert", args.input, "certificate JSON file")->required();
    vcert->add_option("--against", against, "assemblage JSON file")->required();
    vcert->add_option("--tol", args.tol, "validation tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // usage errors are exit 1; --help exits 0
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (check->parsed()) {
            auto asm_ = io::assemblage_from_json(io::read_json_file(args.input));
            auto out = membership(asm_, args.level, make_options(args));
            return finish_verdict(out, asm_.scenario, args, "check", io::fnv1a_digest(io::read_file_bytes(args.input)));
        }
        if (icheck->parsed()) {
            auto ia = io::instrumental_from_json(io::read_json_file(args.input));
            auto out = instrumental_membership(ia, args.level, make_options(args));
            return finish_verdict(out, ia.scenario, args, "instrumental-check",
                                  io::fnv1a_digest(io::read_file_bytes(args.input)));
        }
        if (bound->parsed()) {
            auto f = io::functional_from_json(io::read_json_file(args.input));
            auto b = steering_bound(f, args.level, make_options(args));
            std::string verdict_path = args.output.empty() ? default_output(args.input) : args.output;
            io::write_json_file(verdict_path,
                                io::bound_record(b, f.scenario, args.level,
                                                 io::fnv1a_digest(io::read_file_bytes(args.input))));
            for (const auto& w : b.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << "bound: " << b.upper_bound << " at level " << args.level << " (gap " << b.gap
                      << ", solver " << b.solver_status << ")\nverdict record: " << verdict_path << "\n";
            return b.reliable ? 0 : 3;
        }
        if (gen_q->parsed()) {
            auto scenario = io::scenario_from_json(json::parse(args.scenario_json));
            std::vector<int> dims(scenario.n_alices, scenario.n_outcomes);
            if (!alice_dims_str.empty()) {
                dims.clear();
                std::stringstream ss(alice_dims_str);
                std::string tok;
                while (std::getline(ss, tok, ',')) dims.push_back(std::stoi(tok));
            }
            auto asm_ = assemblage_from_quantum(gen_random_quantum(args.seed, scenario, dims, aux_dim));
            io::write_json_file(args.output, io::to_json(asm_));
            std::cout << "wrote quantum assemblage (" << scenario.describe() << ") to " << args.output << "\n";
            return 0;
        }
        if (gen_ns->parsed()) {
            auto scenario = io::scenario_from_json(json::parse(args.scenario_json));
            io::write_json_file(args.output, io::to_json(gen_nonsignalling(args.seed, scenario)));
            std::cout << "wrote non-signalling assemblage (" << scenario.describe() << ") to " << args.output << "\n";
            return 0;
        }
        if (gen_tw->parsed()) {
            ScenarioSpec scenario{1, 2, 2, 2, 2};
            io::write_json_file(args.output, io::to_json(gen_transpose_twist(args.seed, scenario)));
            std::cout << "wrote transpose-twist assemblage to " << args.output << "\n";
            return 0;
        }
        if (vcert->parsed()) {
            json cj = io::read_json_file(args.input);
            auto asm_ = io::assemblage_from_json(io::read_json_file(against));
            ValidationReport rep;
            if (cj.value("flavor", "moment") == "jmrw") {
                JmrwMatrix delta{io::moment_matrix_from_json(cj)};
                rep = validate_jmrw(delta, asm_);
            } else {
                auto m = io::moment_matrix_from_json(cj);
                rep = validate_moment_matrix(m, certificate_constraints(m.index, asm_), args.tol);
            }
            bool pass = rep.pass(args.tol);
            std::cout << (pass ? "PASS" : "FAIL") << " at tolerance " << args.tol << "\n" << rep.describe();
            return pass ? 0 : 1;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
