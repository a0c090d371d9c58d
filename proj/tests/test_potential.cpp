#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace logcost;

class PotentialTest : public ::testing::Test {
protected:
    static Value t(const std::string& s) { return parse_value(s); }

    static Annotation random_annotation(int m, std::mt19937_64& rng) {
        Annotation q;
        q.m = m;
        std::uniform_int_distribution<int> num(0, 12), den(1, 4);
        for (const auto& idx : index_universe(m))
            if (rng() % 3 != 0) q.coef[idx] = Rational(num(rng)) / den(rng);
        return q;
    }
};

TEST_F(PotentialTest, RankByHand) {
    EXPECT_DOUBLE_EQ(rank(Value::leaf()), 1.0);
    EXPECT_DOUBLE_EQ(rank(t("(leaf, 1, leaf)")), 2.0);
    // rk(l) + log|l| + log|r| + rk(r) = 2 + 1 + 0 + 1
    EXPECT_DOUBLE_EQ(rank(t("((leaf, 1, leaf), 2, leaf)")), 4.0);
    // 4 + log 3 + 0 + 1
    EXPECT_NEAR(rank(t("(((leaf, 1, leaf), 2, leaf), 3, leaf)")), 5.0 + std::log2(3.0), 1e-12);
}

TEST_F(PotentialTest, LogPrimeIsZeroBelowOne) {
    EXPECT_EQ(log2p(0), 0.0);
    EXPECT_EQ(log2p(1), 0.0);
    EXPECT_EQ(log2p(2), 1.0);
    EXPECT_EQ(log2p(8), 3.0);
}

TEST_F(PotentialTest, UniverseSizes) {
    // m ranks plus 2^m * 3 logs minus the all-zero entry.
    EXPECT_EQ(index_universe(0).size(), 2u);
    EXPECT_EQ(index_universe(1).size(), 6u);
    EXPECT_EQ(index_universe(2).size(), 13u);
    EXPECT_EQ(index_universe(3).size(), 26u);
}

TEST_F(PotentialTest, SplaySignaturePotential) {
    CoefFile f = parse_coef("fn splay\nwith-cost:\n  q* = 1\n  q(1 | 0) = 3\n  q(0 | 2) = 1\nresult:\n  q* = 1\n");
    const Annotation& q = f.at("splay").costed->first;
    Value tr = gen_random_search_tree(10, 3);
    EXPECT_NEAR(potential_of(q, {tr}), rank(tr) + 3 * std::log2(10.0) + 1, 1e-12);
    EXPECT_THROW(potential_of(q, {}), ArityError);
}

TEST_F(PotentialTest, SharingPreservesPotential) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        int m = 2 + static_cast<int>(rng() % 2);
        Annotation q = random_annotation(m, rng);
        std::vector<Value> trees;
        for (int j = 0; j < m - 1; ++j) trees.push_back(gen_random_search_tree(1 + rng() % 20, rng()));
        std::vector<Value> doubled = trees;
        doubled.push_back(trees.back());
        EXPECT_NEAR(potential_of(q, doubled), potential_of(share(q), trees), 1e-9);
    }
}

TEST_F(PotentialTest, AlgebraMatchesPotentials) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        Annotation p = random_annotation(1, rng), q = random_annotation(1, rng);
        Value tr = gen_random_search_tree(1 + rng() % 30, rng());
        EXPECT_NEAR(potential_of(add(p, q), {tr}), potential_of(p, {tr}) + potential_of(q, {tr}), 1e-9);
        EXPECT_NEAR(potential_of(scale(Rational(3, 2), p), {tr}), 1.5 * potential_of(p, {tr}), 1e-9);
        EXPECT_NEAR(potential_of(add_constant(p, 2), {tr}), potential_of(p, {tr}) + 2, 1e-9);
    }
}

TEST_F(PotentialTest, PermutationReordersPositions) {
    Index i = Index::log({1, 0, 1}, 2);
    EXPECT_EQ(permute_index(i, {2, 0, 1}), Index::log({1, 1, 0}, 2));
    EXPECT_EQ(permute_index(Index::rank(0), {2, 0, 1}), Index::rank(1));
}

TEST_F(PotentialTest, CoefTextRoundTrip) {
    const std::string text = read_file(logcost::testing::fixture("splay.coef"));
    CoefFile f = parse_coef(text);
    ASSERT_TRUE(f.at("splay").costed);
    EXPECT_EQ(f.at("splay").cost_free.size(), 1u);
    CoefFile g = parse_coef(to_coef_text(f));
    EXPECT_EQ(to_coef_text(g), to_coef_text(f));
    EXPECT_EQ(g.at("splay").costed->first.coef.at(Index::log({1}, 0)), 3);
}

TEST_F(PotentialTest, CoefErrorsCarryLines) {
    try {
        parse_coef("fn f\nwith-cost:\n  q(1 | 0) = 1\n  bogus\n");
        FAIL() << "expected a parse error";
    } catch (const CoefParseError& e) {
        EXPECT_EQ(e.line, 4);
    }
    EXPECT_THROW(parse_coef("q* = 1\n"), CoefParseError);
}
