// Acceptance suite: one test and one PASS/FAIL line per criterion.

#include "listing.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

using namespace logcost;
using logcost::testing::coef_fixture;
using logcost::testing::load_fixture;
using logcost::testing::tactic_fixture;

namespace {

// Tolerances and budgets.
constexpr double kLogTol = 1e-9;
constexpr double kZigZigSeconds = 60.0;
constexpr double kValidateSeconds = 30.0;
constexpr int kMicroSamples = 1000;
constexpr int kLemmaSamples = 10000;
constexpr int kShareSamples = 1000;
constexpr int kValidateSamples = 10000;
constexpr int kValidateMaxSize = 64;
constexpr int kSolverSystems = 200;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

class Acceptance : public ::testing::Test {
protected:
    void verdict(int n, bool ok, const std::string& detail) {
        std::printf("criterion %d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
        std::fflush(stdout);
        EXPECT_TRUE(ok) << "criterion " << n << ": " << detail;
    }
};

TEST_F(Acceptance, C1_ZigZigCheck) {
    Program p = load_fixture("splay.core");
    auto t0 = std::chrono::steady_clock::now();
    CheckOptions opts;
    opts.per_branch = false;
    CheckReport r = cmd_check(p, coef_fixture("splay.coef"), tactic_fixture("splay.tac"), opts);
    const double secs = seconds_since(t0);
    const FunctionReport& f = r.functions.at(0);
    const bool ok = f.verdict == "feasible" && f.farkas_failed == 0 && secs < kZigZigSeconds;
    verdict(1, ok,
            "verdict=" + f.verdict + ", " + std::to_string(f.farkas_checked) + " certificates sampled, " +
                std::to_string(f.farkas_failed) + " failed, " + num(secs) + " s");
}

TEST_F(Acceptance, C2_NestedListing) {
    Program p = load_fixture("nested.core");
    ConstraintSet good = derive(p, coef_fixture("nested.coef"), {}).joint_system("nested");
    ConstraintSet bad = derive(p, logcost::testing::nested_mutated(), {}).joint_system("nested");
    const int good_at = first_violation(good, logcost::testing::nested_listing(good));
    const int bad_at = first_violation(bad, logcost::testing::nested_listing(bad));
    const bool bad_solvable = solve(bad).feasible;
    verdict(2, good_at == -1 && bad_at >= 0 && !bad_solvable,
            "listing violation=" + std::to_string(good_at) + ", mutated violation=" +
                (bad_at >= 0 ? bad.constraints()[static_cast<size_t>(bad_at)].origin : std::string("none")) +
                ", mutated solvable=" + (bad_solvable ? "yes" : "no"));
}

TEST_F(Acceptance, C3_CostFreeSplay) {
    Program p = load_fixture("splay.core");
    CheckOptions opts;
    opts.per_branch = false;
    CheckReport r = cmd_check(p, coef_fixture("splay_cf.coef"), tactic_fixture("splay.tac"), opts);
    const FunctionReport& f = r.functions.at(0);
    verdict(3, f.verdict == "feasible" && f.farkas_failed == 0, "verdict=" + f.verdict);
}

TEST_F(Acceptance, C4_FarkasMicroOracle) {
    std::mt19937_64 rng(20240);
    std::uniform_int_distribution<int> d(0, 4);
    int unsound = 0, incomplete = 0, feasible = 0;
    for (int i = 0; i < kMicroSamples; ++i) {
        const int a1 = d(rng), a2 = d(rng), b1 = d(rng), b2 = d(rng);
        const bool reduced = logcost::testing::farkas_micro_feasible(a1, a2, b1, b2);
        const bool valid = logcost::testing::micro_grid_valid(a1, a2, b1, b2);
        feasible += reduced ? 1 : 0;
        unsound += reduced && !valid ? 1 : 0;
        incomplete += !reduced && valid ? 1 : 0;
    }
    verdict(4, unsound == 0,
            std::to_string(feasible) + " reduce-feasible, " + std::to_string(unsound) + " not grid-valid, " +
                std::to_string(incomplete) + " grid-valid but reduce-infeasible");
}

TEST_F(Acceptance, C5_LogInequalities) {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> big(1.0, 1e6), unit(0.0, 1.0);
    double worst1 = INFINITY;
    for (int i = 0; i < kLemmaSamples; ++i) {
        const double x = big(rng), y = big(rng);
        worst1 = std::min(worst1, 2 * std::log2(x + y) - (2 + std::log2(x) + std::log2(y)));
    }
    // Premise: sum q_i log a_i >= q log b, with q_i >= q; conclusion with every argument shifted by c >= 1.
    double worst2 = INFINITY;
    int samples = 0;
    while (samples < kLemmaSamples) {
        const int k = 1 + static_cast<int>(rng() % 3);
        const double q = 0.1 + 3 * unit(rng);
        std::vector<double> qi, ai;
        double lhs = 0;
        for (int j = 0; j < k; ++j) {
            qi.push_back(q + 2 * unit(rng));
            ai.push_back(1 + 1e3 * unit(rng));
            lhs += qi.back() * std::log2(ai.back());
        }
        const double bmax = std::min(std::exp2(lhs / q), 1e6);
        const double b = (rng() % 4 == 0) ? bmax : 1 + (bmax - 1) * unit(rng);
        if (lhs < q * std::log2(b)) continue;  // rounding at the tight end
        const double c = 1 + 1e3 * unit(rng);
        double shifted = 0;
        for (int j = 0; j < k; ++j) shifted += qi[static_cast<size_t>(j)] * std::log2(ai[static_cast<size_t>(j)] + c);
        worst2 = std::min(worst2, shifted - q * std::log2(b + c));
        ++samples;
    }
    verdict(5, worst1 >= -kLogTol && worst2 >= -kLogTol,
            "worst slack log-sum " + num(worst1) + ", composition " + num(worst2));
}

TEST_F(Acceptance, C6_SharingIdentity) {
    std::mt19937_64 rng(606);
    std::uniform_int_distribution<int> top(0, 12), den(1, 4);
    double worst = 0;
    for (int i = 0; i < kShareSamples; ++i) {
        const int m = 2 + static_cast<int>(rng() % 3);
        Annotation q;
        q.m = m;
        for (const auto& idx : index_universe(m))
            if (rng() % 3 != 0) q.coef[idx] = Rational(top(rng)) / den(rng);
        std::vector<Value> trees;
        for (int j = 0; j < m - 1; ++j) trees.push_back(gen_random_search_tree(1 + rng() % 40, rng()));
        std::vector<Value> doubled = trees;
        doubled.push_back(trees.back());
        worst = std::max(worst, std::abs(potential_of(q, doubled) - potential_of(share(q), trees)));
    }
    verdict(6, worst <= kLogTol, "max deviation " + num(worst));
}

TEST_F(Acceptance, C7_EmpiricalSoundness) {
    Program p = load_fixture("splay.core");
    CheckOptions copts;
    copts.per_branch = false;
    CheckReport r = cmd_check(p, coef_fixture("splay.coef"), tactic_fixture("splay.tac"), copts);
    const FunctionReport& f = r.functions.at(0);
    ASSERT_EQ(f.verdict, "feasible");
    CoefFile solved = parse_coef(f.coef_text);

    ValidationOptions vopts;
    vopts.samples = kValidateSamples;
    vopts.max_size = kValidateMaxSize;
    vopts.tolerance = kLogTol;
    auto t0 = std::chrono::steady_clock::now();
    auto reports = cmd_validate(p, solved, "splay", vopts);
    const double secs = seconds_since(t0);
    int failed = 0;
    std::string detail;
    for (const auto& rep : reports) {
        failed += rep.failed;
        detail += rep.pair + " " + std::to_string(rep.passed) + "/" + std::to_string(rep.attempted) + " ok, ";
    }
    verdict(7, reports.size() == 2 && failed == 0 && secs < kValidateSeconds,
            detail + std::to_string(failed) + " violations, " + num(secs) + " s");
}

TEST_F(Acceptance, C8_InterpreterTraces) {
    Program splay = load_fixture("splay.core"), insert = load_fixture("insert.core");
    EvalResult unit = run_function(splay, "splay", {Value::base(1), parse_value("(leaf, 1, leaf)")});
    EvalResult zz = run_function(splay, "splay", {Value::base(1), parse_value("(((leaf, 1, leaf), 2, leaf), 3, leaf)")});
    EvalResult ins = run_function(insert, "insert", {Value::base(5), Value::leaf()});
    const bool ok = to_string(unit.value) == "(leaf, 1, leaf)" && unit.cost == 1 &&
                    to_string(zz.value) == "(leaf, 1, (leaf, 2, (leaf, 3, leaf)))" && zz.cost == 2 &&
                    to_string(ins.value) == "(leaf, 5, leaf)" && ins.cost == 1;
    verdict(8, ok,
            "costs " + std::to_string(unit.cost) + " " + std::to_string(zz.cost) + " " + std::to_string(ins.cost));
}

TEST_F(Acceptance, C9_SolverOracle) {
    std::mt19937_64 rng(9009);
    int mismatches = 0, feasible = 0;
    for (int i = 0; i < kSolverSystems; ++i) {
        ConstraintSet cs = logcost::testing::random_system(rng, 6, 10);
        const bool v = solve(cs).feasible;
        feasible += v ? 1 : 0;
        mismatches += v != logcost::testing::vertex_feasible(cs) ? 1 : 0;
    }
    std::string smt = "z3 SKIP (not on PATH)";
    bool smt_ok = true;
    if (std::system("command -v z3 > /dev/null 2>&1") == 0) {
        Program p = load_fixture("splay.core");
        ConstraintSet cs = derive(p, coef_fixture("splay.coef"), tactic_fixture("splay.tac")).joint_system("splay");
        auto ext = solve_with(cs, Backend::parse("smtlib-exec:z3"), "acceptance_zigzig", {});
        const bool internal = solve(cs).feasible;
        smt_ok = ext && ext->feasible == internal && (!internal || check_assignment(cs, ext->model));
        smt = std::string("z3 ") + (smt_ok ? "agrees" : "disagrees");
    }
    verdict(9, mismatches == 0 && smt_ok,
            std::to_string(mismatches) + " mismatches over " + std::to_string(kSolverSystems) + " systems (" +
                std::to_string(feasible) + " feasible), " + smt);
}
