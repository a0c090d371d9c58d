#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace logcost;

class LinearizeTest : public ::testing::Test {
protected:
    static SymAnnotation sym(int m, std::initializer_list<std::pair<Index, int>> entries) {
        SymAnnotation q;
        q.m = m;
        for (const auto& [idx, c] : entries) q.coef[idx] = LinExpr(c);
        return q;
    }

    static Monomial mono(std::map<std::string, int> coef, int b) { return Monomial{std::move(coef), b}; }
};

TEST_F(LinearizeTest, MonomialsNameTheirTrees) {
    Monomial m = monomial_of(Index::log({1, 0, 1}, 2), {"x", "y", "z"});
    EXPECT_EQ(m.coef, (std::map<std::string, int>{{"x", 1}, {"z", 1}}));
    EXPECT_EQ(m.b, 2);
    EXPECT_FALSE(to_string(m).empty());
}

TEST_F(LinearizeTest, ExactLogOfPowersOfTwo) {
    EXPECT_EQ(exact_log2p(0), Rational(0));
    EXPECT_EQ(exact_log2p(1), Rational(0));
    EXPECT_EQ(exact_log2p(2), Rational(1));
    EXPECT_EQ(exact_log2p(8), Rational(3));
    EXPECT_FALSE(exact_log2p(3));
    EXPECT_FALSE(exact_log2p(6));
}

TEST_F(LinearizeTest, SizeFactsExpandAndCompare) {
    SizeFacts sf;
    sf.parts["t"] = {"cl", "cr"};
    sf.parts["cl"] = {"bl", "br"};
    EXPECT_EQ(sf.expand("t"), (std::map<std::string, int>{{"bl", 1}, {"br", 1}, {"cr", 1}}));
    EXPECT_TRUE(sf.entails_ge(mono({{"t", 1}}, 0), mono({{"bl", 1}}, 0)));
    EXPECT_TRUE(sf.entails_ge(mono({{"t", 1}}, 0), mono({{"bl", 1}, {"cr", 1}}, 0)));
    EXPECT_TRUE(sf.entails_ge(mono({{"t", 1}}, 0), mono({{"bl", 1}}, 1)));  // |br| >= 1
    EXPECT_FALSE(sf.entails_ge(mono({{"bl", 1}}, 0), mono({{"t", 1}}, 0)));
    EXPECT_FALSE(sf.entails_ge(mono({{"t", 1}}, 0), mono({{"t", 1}}, 1)));
    EXPECT_EQ(sf.lower_bound(mono({{"t", 1}}, 0)), 3);
    EXPECT_EQ(sf.lower_bound(mono({{"x", 1}}, 1)), 2);
}

TEST_F(LinearizeTest, SizeFactsOfZigZigWeakening) {
    Program p = logcost::testing::load_fixture("splay.core");
    SizeFacts sf = size_facts(p.defs[0], path_from_string("e.2.1.2.1.1.2.1.2.1.1"));
    // Matching on cl consumes it, so only the latest split survives.
    EXPECT_EQ(sf.expand("cl"), (std::map<std::string, int>{{"bl", 1}, {"br", 1}}));
    EXPECT_EQ(sf.expand("t"), (std::map<std::string, int>{{"t", 1}}));
}

TEST_F(LinearizeTest, KnowledgeHoldsOnSampledSizes) {
    SizeFacts sf;
    sf.parts["t"] = {"x", "y"};
    std::vector<Monomial> cols{mono({{"t", 1}}, 0), mono({{"x", 1}}, 0), mono({{"y", 1}}, 0), mono({{"x", 1}, {"y", 1}}, 0),
                               mono({{"x", 1}}, 1)};
    KnowledgeSystem ks = build_knowledge(cols, sf);
    ASSERT_GT(ks.num_rows(), 0u);
    bool sum_row = false;
    for (const auto& w : ks.why) sum_row |= w.find("log of sum") != std::string::npos;
    EXPECT_TRUE(sum_row) << to_string(ks);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 2000; ++i) {
        std::map<std::string, double> size{{"x", 1.0 + static_cast<double>(rng() % 1000)},
                                           {"y", 1.0 + static_cast<double>(rng() % 1000)}};
        size["t"] = size["x"] + size["y"];
        std::vector<double> val;
        for (const auto& c : ks.columns) {
            double arg = c.b;
            for (const auto& [v, k] : c.coef) arg += k * size.at(v);
            val.push_back(log2p(arg));
        }
        for (size_t r = 0; r < ks.num_rows(); ++r) {
            double lhs = 0;
            for (const auto& [j, a] : ks.rows[r]) lhs += to_double(a) * val[static_cast<size_t>(j)];
            EXPECT_LE(lhs, to_double(ks.rhs[r]) + 1e-9) << ks.why[r];
        }
    }
}

TEST_F(LinearizeTest, IdenticalSidesNeedNoKnowledge) {
    SymAnnotation q = sym(1, {{Index::rank(0), 1}, {Index::log({1}, 0), 3}, {Index::constant(1, 2), 1}});
    ConstraintSet cs;
    FarkasRecord rec = farkas_reduce(q, q, {"t"}, {}, cs, "same");
    SolveResult r = solve(cs);
    ASSERT_TRUE(r.feasible);
    for (const auto& f : instantiate_f(rec, cs, r.model)) EXPECT_EQ(f, 0);
}

TEST_F(LinearizeTest, LogOfSumIsDerivable) {
    // 2 + log|x| + log|y| <= 2 log|t| with |t| = |x| + |y|.
    SizeFacts sf;
    sf.parts["t"] = {"x", "y"};
    SymAnnotation lhs = sym(3, {{Index::log({1, 0, 0}, 0), 1}, {Index::log({0, 1, 0}, 0), 1}, {Index::constant(3, 4), 1}});
    SymAnnotation rhs = sym(3, {{Index::log({0, 0, 1}, 0), 2}});
    ConstraintSet cs;
    FarkasRecord rec = farkas_reduce(lhs, rhs, {"x", "y", "t"}, sf, cs, "sum");
    SolveResult r = solve(cs);
    ASSERT_TRUE(r.feasible);
    EXPECT_TRUE(verify_farkas_sufficiency(instantiate(rec, cs, r.model), rec.ks, instantiate_f(rec, cs, r.model), 2000, 1, sf));
}

TEST_F(LinearizeTest, FalseDirectionIsNotDerivable) {
    SizeFacts sf;
    sf.parts["t"] = {"x", "y"};
    SymAnnotation small = sym(3, {{Index::log({1, 0, 0}, 0), 1}, {Index::log({0, 1, 0}, 0), 1}, {Index::constant(3, 4), 1}});
    SymAnnotation big = sym(3, {{Index::log({0, 0, 1}, 0), 2}});
    ConstraintSet cs;
    farkas_reduce(big, small, {"x", "y", "t"}, sf, cs, "wrong");
    EXPECT_FALSE(solve(cs).feasible);
}

TEST_F(LinearizeTest, RanksMustBeCoveredPointwise) {
    ConstraintSet cs;
    farkas_reduce(sym(1, {{Index::rank(0), 2}}), sym(1, {{Index::rank(0), 1}, {Index::log({1}, 0), 5}}), {"t"}, {}, cs, "rk");
    EXPECT_FALSE(solve(cs).feasible);
}

TEST_F(LinearizeTest, BadCertificateIsRejected) {
    SizeFacts sf;
    sf.parts["t"] = {"x", "y"};
    SymAnnotation lhs = sym(3, {{Index::log({1, 0, 0}, 0), 1}});
    SymAnnotation rhs = sym(3, {{Index::log({0, 0, 1}, 0), 1}});
    ConstraintSet cs;
    FarkasRecord rec = farkas_reduce(lhs, rhs, {"x", "y", "t"}, sf, cs, "bad");
    SolveResult r = solve(cs);
    ASSERT_TRUE(r.feasible);
    LinearObligation ob = instantiate(rec, cs, r.model);
    std::vector<Rational> zero(rec.f.size(), 0);
    EXPECT_THROW(verify_farkas_sufficiency(ob, rec.ks, zero, 100, 1, sf), InvalidCertificate);
}

TEST_F(LinearizeTest, MicroOracleSufficiency) {
    std::mt19937_64 rng(4);
    int agree = 0;
    for (int i = 0; i < 300; ++i) {
        int a1 = static_cast<int>(rng() % 5), a2 = static_cast<int>(rng() % 5), b1 = static_cast<int>(rng() % 5),
            b2 = static_cast<int>(rng() % 5);
        bool reduced = logcost::testing::farkas_micro_feasible(a1, a2, b1, b2);
        bool grid = logcost::testing::micro_grid_valid(a1, a2, b1, b2);
        if (reduced) EXPECT_TRUE(grid) << a1 << " " << a2 << " " << b1 << " " << b2;
        agree += reduced == grid ? 1 : 0;
    }
    // Frozen from the first run: the single row log|x| >= log|y| makes the reduction exact here.
    EXPECT_EQ(agree, 300);
}
