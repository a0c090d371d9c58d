// Command-line front end. One JSON object per line on stdout; diagnostics on stderr.

#include "logcost/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace logcost;
using nlohmann::json;

namespace {

constexpr const char* kTimeoutEnv = "LOGCOST_SOLVER_TIMEOUT";  // seconds

std::optional<std::chrono::milliseconds> env_time_limit() {
    const char* v = std::getenv(kTimeoutEnv);
    if (!v || !*v) return std::nullopt;
    return std::chrono::milliseconds(static_cast<long long>(std::stod(v) * 1000));
}

CoefFile load_coefs(const std::string& path) { return path.empty() ? CoefFile{} : parse_coef(read_file(path)); }
Tactics load_tactics(const std::string& path) { return path.empty() ? Tactics{} : parse_tactics(read_file(path)); }

json to_json(const FunctionReport& f) {
    json j{{"fn", f.fn},
           {"verdict", f.verdict},
           {"constraints", f.constraints},
           {"unknowns", f.unknowns},
           {"pivots", f.pivots},
           {"ms", f.millis},
           {"farkas", {{"checked", f.farkas_checked}, {"failed", f.farkas_failed}}}};
    json branches = json::array();
    for (const auto& b : f.branches) {
        json jb{{"branch", b.label}, {"status", b.status}, {"selected", b.selected}};
        if (!b.detail.empty()) jb["detail"] = b.detail;
        if (!b.notes.empty()) jb["notes"] = b.notes;
        branches.push_back(std::move(jb));
    }
    j["branches"] = std::move(branches);
    if (!f.coef_text.empty()) j["coef"] = f.coef_text;
    if (!f.message.empty()) j["message"] = f.message;
    if (!f.explain.empty()) j["explain"] = f.explain;
    return j;
}

json to_json(const ValidationReport& r) {
    return json{{"fn", r.fn},         {"pair", r.pair},     {"attempted", r.attempted}, {"skipped", r.skipped},
                {"passed", r.passed}, {"failed", r.failed}, {"worst_slack", r.worst_slack}, {"witnesses", r.witnesses}};
}

void fail(const std::string& kind, const std::string& msg) {
    std::cerr << "logcost: " << kind << ": " << msg << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Logarithmic amortised cost checking for a small tree language"};
    app.require_subcommand(1);

    std::string program, coef, tactics, backend = "internal", fn, out;
    std::vector<std::string> values;
    int samples = 10000, max_size = 64;
    std::uint64_t seed = 42;
    bool explain = false, no_branches = false;
    std::string model_out;

    auto* check = app.add_subcommand("check", "Type-check annotations and solve the constraints");
    check->add_option("program", program, "Program file")->required();
    check->add_option("annotations", coef, "Annotation file");
    check->add_option("tactic-file", tactics, "Tactic file");
    check->add_option("--coef", coef, "Annotation file");
    check->add_option("--tactics", tactics, "Tactic file");
    check->add_option("--backend", backend, "internal | smtlib-out[:dir] | smtlib-exec:<solver>");
    check->add_option("--seed", seed, "Seed for certificate sampling");
    check->add_option("--model-out", model_out, "Write the solved annotations here");
    check->add_flag("--explain", explain, "List the constraints behind an infeasible verdict");
    check->add_flag("--no-branches", no_branches, "Skip the per-branch solves");

    auto* run = app.add_subcommand("run", "Evaluate a function on value literals");
    run->add_option("program", program, "Program file")->required();
    run->add_option("fn", fn, "Function")->required();
    run->add_option("values", values, "Arguments: leaf, (t, k, t), integers, true, false");

    auto* validate = app.add_subcommand("validate", "Sample random search trees against an annotation");
    validate->add_option("program", program, "Program file")->required();
    validate->add_option("fn", fn, "Function")->required();
    validate->add_option("--coef", coef, "Annotation file")->required();
    validate->add_option("--samples", samples, "Number of samples")->check(CLI::PositiveNumber);
    validate->add_option("--max-size", max_size, "Largest tree size (leaves)")->check(CLI::PositiveNumber);
    validate->add_option("--seed", seed, "Random seed");

    auto* exp = app.add_subcommand("export", "Write the constraint system as SMT-LIB 2");
    exp->add_option("program", program, "Program file")->required();
    exp->add_option("annotations", coef, "Annotation file");
    exp->add_option("tactic-file", tactics, "Tactic file");
    exp->add_option("--coef", coef, "Annotation file");
    exp->add_option("--tactics", tactics, "Tactic file");
    exp->add_option("--out,-o", out, "Output file (default: stdout)");

    auto* paths = app.add_subcommand("paths", "Print the normalised program with node paths");
    paths->add_option("program", program, "Program file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        const Program p = load_program(read_file(program));

        if (*check) {
            CheckOptions opts;
            opts.backend = Backend::parse(backend);
            opts.time_limit = env_time_limit();
            opts.explain = explain;
            opts.per_branch = !no_branches;
            opts.seed = seed;
            CheckReport rep = cmd_check(p, load_coefs(coef), load_tactics(tactics), opts);
            std::string solved;
            for (const auto& f : rep.functions) {
                std::cout << to_json(f).dump() << "\n";
                solved += f.coef_text;
            }
            if (!model_out.empty()) std::ofstream(model_out) << solved;
            return rep.exit_code;
        }
        if (*run) {
            EvalResult r = cmd_run(p, fn, values);
            std::cout << json{{"fn", fn}, {"value", to_string(r.value)}, {"cost", r.cost}}.dump() << "\n";
            return kExitOk;
        }
        if (*validate) {
            ValidationOptions opts;
            opts.samples = samples;
            opts.max_size = max_size;
            opts.seed = seed;
            int rc = kExitOk;
            for (const auto& r : cmd_validate(p, load_coefs(coef), fn, opts)) {
                std::cout << to_json(r).dump() << "\n";
                if (r.failed > 0) rc = kExitValidation;
            }
            return rc;
        }
        if (*exp) {
            std::string text = cmd_export(p, load_coefs(coef), load_tactics(tactics));
            if (out.empty()) {
                std::cout << text;
            } else {
                std::ofstream(out) << text;
            }
            return kExitOk;
        }
        if (*paths) {
            std::cout << cmd_paths(p);
            return kExitOk;
        }
    } catch (const SyntaxError& e) {
        fail("syntax error", e.what());
        return kExitParse;
    } catch (const TypeError& e) {
        fail("type error", e.what());
        return kExitParse;
    } catch (const CoefParseError& e) {
        fail("annotation error", e.what());
        return kExitParse;
    } catch (const ArityError& e) {
        fail("annotation error", e.what());
        return kExitParse;
    } catch (const TacticError& e) {
        fail("tactic error", e.what());
        return kExitTactic;
    } catch (const SolverLimit& e) {
        fail("solver", e.what());
        return kExitSolverLimit;
    } catch (const BackendError& e) {
        fail("backend", e.what());
        return kExitBackend;
    } catch (const Timeout& e) {
        fail("run", e.what());
        return kExitRuntime;
    } catch (const EvalError& e) {
        fail("run", e.what());
        return kExitRuntime;
    } catch (const std::invalid_argument& e) {
        fail("usage", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        fail("error", e.what());
        return kExitParse;
    }
    return kExitUsage;
}
