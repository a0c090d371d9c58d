#include "support.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace logcost;
using logcost::testing::fixture;

class SyntaxTest : public ::testing::Test {
protected:
    static bool all_let_normal(const ExprPtr& e) {
        if (!e) return true;
        if (e->kind == Expr::Kind::Node || e->kind == Expr::Kind::Cmp || e->kind == Expr::Kind::App)
            for (const auto& k : e->kids)
                if (!k->is_var()) return false;
        if ((e->kind == Expr::Kind::If || e->kind == Expr::Kind::Match) && !e->kids[0]->is_var()) return false;
        for (const auto& k : e->kids)
            if (!all_let_normal(k)) return false;
        return true;
    }

    static int count_kind(const ExprPtr& e, Expr::Kind kind) {
        if (!e) return 0;
        int n = e->kind == kind ? 1 : 0;
        for (const auto& k : e->kids) n += count_kind(k, kind);
        return n;
    }
};

TEST_F(SyntaxTest, ParsesDefinitionHeadAndBody) {
    Program p = parse_program("id t = t\nmk a = (leaf, a, leaf)\n");
    ASSERT_EQ(p.defs.size(), 2u);
    EXPECT_EQ(p.defs[0].name, "id");
    EXPECT_EQ(p.defs[0].params, std::vector<std::string>{"t"});
    EXPECT_EQ(p.defs[1].body->kind, Expr::Kind::Node);
    EXPECT_NE(p.find("mk"), nullptr);
    EXPECT_EQ(p.find("nope"), nullptr);
}

TEST_F(SyntaxTest, FixturesNormaliseToLetNormalForm) {
    for (const char* f : {"splay.core", "insert.core", "delete.core", "nested.core"}) {
        Program p = load_program(read_file(fixture(f)));
        for (const auto& d : p.defs) EXPECT_TRUE(all_let_normal(d.body)) << f << " " << d.name;
    }
}

TEST_F(SyntaxTest, NormalisationKeepsSourceShape) {
    Program raw = parse_program(read_file(fixture("splay.core")));
    Program norm = normalize(raw);
    EXPECT_EQ(count_kind(raw.defs[0].body, Expr::Kind::App), count_kind(norm.defs[0].body, Expr::Kind::App));
    EXPECT_EQ(count_kind(raw.defs[0].body, Expr::Kind::If), count_kind(norm.defs[0].body, Expr::Kind::If));
    // Four single-branch matches gain a leaf branch; none are removed.
    EXPECT_EQ(count_kind(raw.defs[0].body, Expr::Kind::Match), count_kind(norm.defs[0].body, Expr::Kind::Match));
}

TEST_F(SyntaxTest, ScrutineeInLeafBranchIsRebound) {
    Program p = load_program("f t = match t with | leaf -> t | (l, x, r) -> r\n");
    const ExprPtr& leaf_arm = p.defs[0].body->kids[1];
    ASSERT_EQ(leaf_arm->kind, Expr::Kind::Let);
    EXPECT_EQ(leaf_arm->name, "t");
    EXPECT_EQ(leaf_arm->kids[0]->kind, Expr::Kind::Leaf);
}

TEST_F(SyntaxTest, SplayIsTypedBaseTreeToTree) {
    Program p = load_program(read_file(fixture("splay.core")));
    ASSERT_EQ(p.signatures.size(), 1u);
    EXPECT_EQ(p.signatures[0].params, (std::vector<SimpleType>{SimpleType::base(), SimpleType::tree()}));
    EXPECT_EQ(p.signatures[0].result, SimpleType::tree());
}

TEST_F(SyntaxTest, TypeErrorOnTreeAsKey) {
    EXPECT_THROW(load_program("f t = (t, t, leaf)\n"), TypeError);
}

TEST_F(SyntaxTest, SyntaxErrorCarriesLine) {
    try {
        parse_program("f t = t\ng t = (t, , t)\nh t = t\n");
        FAIL() << "expected a syntax error";
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.loc.line, 2);
    }
}

TEST_F(SyntaxTest, PathRoundTripAndLookup) {
    for (const Path& p : {Path{}, Path{2}, Path{2, 1, 0, 2}}) EXPECT_EQ(path_from_string(path_to_string(p)), p);
    EXPECT_EQ(path_to_string({}), "e");
    EXPECT_EQ(path_to_string({2, 1}), "e.2.1");
    Program p = load_program("f t = match t with | leaf -> leaf | (l, x, r) -> r\n");
    ExprPtr r = node_at(p.defs[0].body, {2});
    ASSERT_TRUE(r);
    EXPECT_TRUE(r->is_var());
    EXPECT_EQ(r->name, "r");
    EXPECT_FALSE(node_at(p.defs[0].body, {5}));
}

TEST_F(SyntaxTest, FreeVarsRespectBinders) {
    Program p = parse_program("f a t = match t with | leaf -> leaf | (l, x, r) -> let y = (l, a, r) in (y, x, u)\n");
    EXPECT_EQ(free_vars(p.defs[0].body), (std::set<std::string>{"a", "t", "u"}));
}

TEST_F(SyntaxTest, PrintedSourceReparses) {
    for (const char* f : {"splay.core", "insert.core", "delete.core"}) {
        Program p = parse_program(read_file(fixture(f)));
        Program q = parse_program(to_source(p));
        EXPECT_TRUE(structurally_equal(p, q)) << f;
    }
}
