#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace logcost;
using logcost::testing::coef_fixture;
using logcost::testing::fixture;
using logcost::testing::load_fixture;
using logcost::testing::tactic_fixture;

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("logcost_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) {
        std::string path = (dir_ / name).string();
        std::ofstream(path) << text;
        return path;
    }

    /** Exit status of the installed tool; stdout and stderr go to a scratch file. */
    int tool(const std::string& args) {
        std::string cmd = std::string(LOGCOST_BIN) + " " + args + " > " + (dir_ / "out.txt").string() + " 2>&1";
        int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string tool_output() { return read_file((dir_ / "out.txt").string()); }

    std::filesystem::path dir_;
};

TEST_F(CliTest, RunSplayTrace) {
    Program p = load_fixture("splay.core");
    EvalResult r = cmd_run(p, "splay", {"1", "(((leaf, 1, leaf), 2, leaf), 3, leaf)"});
    EXPECT_EQ(to_string(r.value), "(leaf, 1, (leaf, 2, (leaf, 3, leaf)))");
    EXPECT_EQ(r.cost, 2u);
    EXPECT_THROW(cmd_run(p, "splay", {"leaf", "leaf"}), EvalError);
    EXPECT_THROW(cmd_run(p, "splay", {"1"}), EvalError);
    EXPECT_THROW(cmd_run(p, "missing", {}), EvalError);
}

TEST_F(CliTest, BackendSpecs) {
    EXPECT_EQ(Backend::parse("internal").kind, Backend::Kind::Internal);
    Backend out = Backend::parse("smtlib-out:/tmp/x");
    EXPECT_EQ(out.kind, Backend::Kind::SmtlibOut);
    EXPECT_EQ(out.path, "/tmp/x");
    Backend ex = Backend::parse("smtlib-exec:z3");
    EXPECT_EQ(ex.kind, Backend::Kind::SmtlibExec);
    EXPECT_EQ(ex.path, "z3");
    EXPECT_THROW(Backend::parse("cplex"), std::invalid_argument);
}

TEST_F(CliTest, ValidateSignature) {
    Program p = load_fixture("splay.core");
    ValidationOptions opts;
    opts.samples = 400;
    auto reports = cmd_validate(p, coef_fixture("splay.coef"), "splay", opts);
    ASSERT_EQ(reports.size(), 2u);
    for (const auto& r : reports) {
        EXPECT_EQ(r.failed, 0) << r.pair;
        EXPECT_EQ(r.passed + r.skipped, r.attempted);
        EXPECT_GE(r.worst_slack, -1e-9);
    }
}

TEST_F(CliTest, ValidateFindsOverclaim) {
    Program p = load_fixture("splay.core");
    CoefFile c = coef_fixture("splay.coef");
    c.at("splay").costed->second.coef[Index::rank(0)] = 2;
    ValidationOptions opts;
    opts.samples = 200;
    auto reports = cmd_validate(p, c, "splay", opts);
    EXPECT_GT(reports.at(0).failed, 0);
    EXPECT_FALSE(reports.at(0).witnesses.empty());
}

TEST_F(CliTest, CheckReportsPerFunction) {
    Program p = load_fixture("nested.core");
    CheckReport r = cmd_check(p, coef_fixture("nested.coef"), {});
    ASSERT_EQ(r.functions.size(), 1u);
    EXPECT_EQ(r.functions[0].verdict, "feasible");
    EXPECT_EQ(r.exit_code, kExitOk);
    EXPECT_FALSE(r.functions[0].coef_text.empty());
}

TEST_F(CliTest, ExportIsStable) {
    Program p = load_fixture("splay.core");
    std::string a = cmd_export(p, coef_fixture("splay.coef"), tactic_fixture("splay.tac"));
    std::string b = cmd_export(p, coef_fixture("splay.coef"), tactic_fixture("splay.tac"));
    EXPECT_EQ(a, b);
    EXPECT_NE(a.find("(check-sat)"), std::string::npos);
    std::string empty = cmd_export(load_program(""), {}, {});
    EXPECT_EQ(empty.find("declare-fun"), std::string::npos);
    EXPECT_EQ(empty.find("(assert"), std::string::npos);
}

TEST_F(CliTest, PathsListing) {
    std::string s = cmd_paths(load_fixture("splay.core"));
    EXPECT_EQ(s.rfind("splay a t\n", 0), 0u);
    EXPECT_NE(s.find("\n  e  match t with"), std::string::npos);
    EXPECT_NE(s.find("e.2.1.2.1.1.2.1.2.1.1"), std::string::npos);
}

TEST_F(CliTest, ToolExitCodes) {
    EXPECT_EQ(tool("check " + fixture("nested.core") + " " + fixture("nested.coef")), kExitOk);
    EXPECT_NE(tool_output().find("\"verdict\":\"feasible\""), std::string::npos);

    std::string bad = write("bad.coef", "fn nested\nwith-cost:\n  q1 = 1\n  q2 = 1\n  q3 = 1\n  q4 = 1\nresult:\n  q* = 5\n");
    EXPECT_EQ(tool("check " + fixture("nested.core") + " " + bad), kExitInfeasible);
    EXPECT_EQ(tool("check"), kExitUsage);
    EXPECT_EQ(tool("check " + write("p.core", "f t = (t, , t)\n") + " " + bad), kExitParse);
    std::string tac = write("t.tac", "splay @ e.0 : weaken\n");
    EXPECT_EQ(tool("check " + fixture("splay.core") + " " + fixture("splay.coef") + " " + tac), kExitTactic);
    EXPECT_EQ(tool("check " + fixture("nested.core") + " " + fixture("nested.coef") + " --backend smtlib-exec:" +
                   (dir_ / "no-such-solver").string()),
              kExitBackend);
    EXPECT_EQ(tool("run " + fixture("splay.core") + " splay 1 leaf"), kExitOk);
    EXPECT_EQ(tool("run " + fixture("splay.core") + " splay leaf leaf"), kExitRuntime);
}

TEST_F(CliTest, ToolValidateFailure) {
    std::string over = write("over.coef", "fn splay\nwith-cost:\n  q* = 1\nresult:\n  q* = 2\n");
    EXPECT_EQ(tool("validate " + fixture("splay.core") + " splay --coef " + over + " --samples 100"), kExitValidation);
    EXPECT_EQ(tool("validate " + fixture("splay.core") + " splay --coef " + fixture("splay.coef") + " --samples 100"),
              kExitOk);
}

TEST_F(CliTest, SmtlibOutLeavesFiles) {
    std::string out = (dir_ / "smt").string();
    EXPECT_EQ(tool("check " + fixture("nested.core") + " " + fixture("nested.coef") + " --backend smtlib-out:" + out),
              kExitUnknown);
    EXPECT_FALSE(std::filesystem::is_empty(out));
}
