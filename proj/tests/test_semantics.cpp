#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace logcost;
using logcost::testing::load_fixture;

class SemanticsTest : public ::testing::Test {
protected:
    void SetUp() override {
        splay_ = load_fixture("splay.core");
        insert_ = load_fixture("insert.core");
        delete_ = load_fixture("delete.core");
    }

    Program splay_, insert_, delete_;
};

TEST_F(SemanticsTest, UnitSplayCostsOne) {
    EvalResult r = run_function(splay_, "splay", {Value::base(1), parse_value("(leaf, 1, leaf)")});
    EXPECT_EQ(to_string(r.value), "(leaf, 1, leaf)");
    EXPECT_EQ(r.cost, 1u);
}

TEST_F(SemanticsTest, ZigZigInstanceCostsTwo) {
    // 1 sits at the left-left grandchild: one rotation pair, one recursive call.
    EvalResult r = run_function(splay_, "splay", {Value::base(1), parse_value("(((leaf, 1, leaf), 2, leaf), 3, leaf)")});
    EXPECT_EQ(to_string(r.value), "(leaf, 1, (leaf, 2, (leaf, 3, leaf)))");
    EXPECT_EQ(r.cost, 2u);
}

TEST_F(SemanticsTest, InsertIntoLeaf) {
    EvalResult r = run_function(insert_, "insert", {Value::base(5), Value::leaf()});
    EXPECT_EQ(to_string(r.value), "(leaf, 5, leaf)");
    EXPECT_EQ(r.cost, 1u);
}

TEST_F(SemanticsTest, SplayOnLeafIsFree) {
    EvalResult r = run_function(splay_, "splay", {Value::base(3), Value::leaf()});
    EXPECT_EQ(r.value, Value::leaf());
    EXPECT_EQ(r.cost, 1u);
}

TEST_F(SemanticsTest, RandomTreesAreSearchTrees) {
    for (std::uint64_t n = 1; n <= 40; ++n) {
        Value t = gen_random_search_tree(n, n * 7919);
        EXPECT_EQ(t.size(), n);
        auto keys = inorder_keys(t);
        EXPECT_EQ(keys.size(), n - 1);
        EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
        EXPECT_EQ(std::adjacent_find(keys.begin(), keys.end()), keys.end());
        EXPECT_EQ(gen_random_search_tree(n, n * 7919), t);
    }
}

TEST_F(SemanticsTest, SplayPreservesKeysAndBringsHitToRoot) {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        Value t = gen_random_search_tree(1 + seed % 50, seed);
        auto keys = inorder_keys(t);
        if (keys.empty()) continue;
        std::int64_t a = keys[seed % keys.size()];
        EvalResult r = run_function(splay_, "splay", {Value::base(a), t});
        EXPECT_EQ(inorder_keys(r.value), keys);
        ASSERT_EQ(r.value.kind(), Value::Kind::Node);
        EXPECT_EQ(r.value.key(), a);
        EXPECT_GE(r.cost, 1u);
    }
}

TEST_F(SemanticsTest, InsertAndDeleteMaintainKeySets) {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Value t = gen_random_search_tree(1 + seed % 30, seed);
        auto keys = inorder_keys(t);
        std::int64_t fresh = keys.empty() ? 7 : keys.back() + 3;
        auto ins = run_function(insert_, "insert", {Value::base(fresh), t});
        auto with = keys;
        with.push_back(fresh);
        EXPECT_EQ(inorder_keys(ins.value), with);
        if (keys.empty()) continue;
        std::int64_t gone = keys[seed % keys.size()];
        auto del = run_function(delete_, "delete", {Value::base(gone), t});
        auto without = keys;
        without.erase(std::find(without.begin(), without.end(), gone));
        EXPECT_EQ(inorder_keys(del.value), without);
    }
}

TEST_F(SemanticsTest, DivergenceRunsOutOfFuel) {
    Program p = load_program("loop t = loop t\n");
    EXPECT_THROW(run_function(p, "loop", {Value::base(0)}, 1000), Timeout);
}

TEST_F(SemanticsTest, ValueLiteralsRoundTrip) {
    for (const char* s : {"leaf", "(leaf, 4, leaf)", "((leaf, 1, leaf), 2, (leaf, 3, leaf))", "-5", "true"})
        EXPECT_EQ(to_string(parse_value(s)), s);
}
