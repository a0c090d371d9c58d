#pragma once

#include "logcost/potential.hpp"
#include "logcost/semantics.hpp"
#include "logcost/solver.hpp"
#include "logcost/syntax.hpp"
#include "logcost/typesystem.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace logcost {

/** Process exit codes. Stable; documented in the README. */
enum ExitCode : int {
    kExitOk = 0,
    kExitInfeasible = 1,
    kExitUsage = 2,
    kExitParse = 3,
    kExitTactic = 4,
    kExitSolverLimit = 5,
    kExitDerivation = 6,
    kExitBackend = 7,
    kExitValidation = 8,
    kExitRuntime = 9,
    kExitUnknown = 10,
};

/** Parses, normalises and simply types a program. */
Program load_program(const std::string& text);

std::string read_file(const std::string& path);

struct Backend {
    enum class Kind { Internal, SmtlibOut, SmtlibExec };
    Kind kind = Kind::Internal;
    std::string path;  // output directory for SmtlibOut, solver binary for SmtlibExec

    /** "internal", "smtlib-out" or "smtlib-exec:<path>". */
    static Backend parse(const std::string& spec);
};

struct CheckOptions {
    Backend backend;
    std::optional<std::chrono::milliseconds> time_limit;
    bool per_branch = true;  // also solve every branch on its own
    bool explain = false;
    int farkas_samples = 500;
    std::uint64_t seed = 1;
    DeriveOptions derive;
};

struct BranchReport {
    std::string label;
    std::string status;  // feasible | infeasible | error | skipped | limit
    bool selected = false;
    std::string detail;
    std::vector<std::string> notes;
};

struct FunctionReport {
    std::string fn;
    std::string verdict;  // feasible | infeasible | error | unknown | limit
    std::size_t constraints = 0;
    std::size_t unknowns = 0;
    long pivots = 0;
    double millis = 0;
    std::string coef_text;  // solved signature, when feasible
    int farkas_checked = 0;
    int farkas_failed = 0;
    std::vector<BranchReport> branches;
    std::vector<std::string> explain;  // conflict origins, when infeasible
    std::string message;
    Assignment model;
};

struct CheckReport {
    std::vector<FunctionReport> functions;
    int exit_code = kExitOk;
};

/** Raised for external solver failures (missing binary, unreadable output). */
class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * derive, then per function: solve the selected branches together with the callees they rely on,
 * round 0/1 selectors and re-solve, validate the model exactly and sample every weakening certificate.
 */
CheckReport cmd_check(const Program& p, const CoefFile& coefs, const Tactics& tactics, const CheckOptions& opts = {});

/** Solves cs with the given backend; returns nullopt for "unknown" (smtlib-out). */
std::optional<SolveResult> solve_with(const ConstraintSet& cs, const Backend& backend, const std::string& stem,
                                      const SolveOptions& opts);

/** Runs f on value literals after checking them against its simple type. */
EvalResult cmd_run(const Program& p, const std::string& fn, const std::vector<std::string>& literals,
                   std::uint64_t fuel = kDefaultFuel);

struct ValidationOptions {
    int samples = 10000;
    int max_size = 64;
    std::uint64_t seed = 42;
    std::uint64_t fuel = kDefaultFuel;
    double tolerance = 1e-9;
};

struct ValidationReport {
    std::string fn;
    std::string pair;  // "costed" or "cost-free#k"
    int attempted = 0, skipped = 0, passed = 0, failed = 0;
    double worst_slack = 0;
    std::vector<std::string> witnesses;  // serialised failing inputs (first few)
};

/** Samples random search trees and checks Phi(in|Q) - Phi(out|Q') >= cost for every pair in coefs[fn]. */
std::vector<ValidationReport> cmd_validate(const Program& p, const CoefFile& coefs, const std::string& fn,
                                           const ValidationOptions& opts = {});

/** SMT-LIB text of the selected systems of every function. */
std::string cmd_export(const Program& p, const CoefFile& coefs, const Tactics& tactics,
                       const DeriveOptions& opts = {});

/** The normalised program, one line per AST node with its path. For writing tactic files. */
std::string cmd_paths(const Program& p);

}  // namespace logcost
