#pragma once

#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace logcost {

struct SimpleType {
    enum class Kind { Bool, Base, Tree, Product };
    Kind kind = Kind::Base;
    std::vector<SimpleType> elems;  // only for Product

    static SimpleType boolean() { return {Kind::Bool, {}}; }
    static SimpleType base() { return {Kind::Base, {}}; }
    static SimpleType tree() { return {Kind::Tree, {}}; }
    static SimpleType product(std::vector<SimpleType> elems);

    bool is_tree() const { return kind == Kind::Tree; }
    bool operator==(const SimpleType&) const = default;
};

std::string to_string(const SimpleType& t);

struct SourceLoc {
    int line = 0;
    int column = 0;
};

enum class CmpOp { Lt, Gt, Eq };

const char* to_string(CmpOp op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/**
 * One AST node. Children are kept in a uniform vector so that a path
 * (sequence of child indices from the definition root) addresses any node:
 *   Node  [left, label, right]      Cmp   [lhs, rhs]
 *   If    [cond, then, else]        Match [scrutinee, leaf-branch, node-branch]
 *   Let   [bound, body]             App   [args...]
 * A missing match branch (surface sugar) is a null child.
 */
struct Expr {
    enum class Kind { Var, True, False, Leaf, Node, Cmp, If, Match, Let, App };

    Kind kind = Kind::Leaf;
    std::string name;                  // Var name, Let binder, App callee
    CmpOp op = CmpOp::Eq;              // Cmp only
    std::vector<std::string> binders;  // Match node-branch (x1, x2, x3)
    std::vector<ExprPtr> kids;
    SourceLoc loc;
    std::optional<SimpleType> type;  // filled by simple_typecheck

    static ExprPtr var(std::string name, SourceLoc loc = {});
    static ExprPtr boolean(bool value, SourceLoc loc = {});
    static ExprPtr leaf(SourceLoc loc = {});
    static ExprPtr node(ExprPtr l, ExprPtr d, ExprPtr r, SourceLoc loc = {});
    static ExprPtr cmp(CmpOp op, ExprPtr lhs, ExprPtr rhs, SourceLoc loc = {});
    static ExprPtr ite(ExprPtr cond, ExprPtr then_e, ExprPtr else_e, SourceLoc loc = {});
    static ExprPtr match(ExprPtr scrut, ExprPtr leaf_branch, std::vector<std::string> binders,
                         ExprPtr node_branch, SourceLoc loc = {});
    static ExprPtr let(std::string x, ExprPtr bound, ExprPtr body, SourceLoc loc = {});
    static ExprPtr app(std::string f, std::vector<ExprPtr> args, SourceLoc loc = {});

    bool is_var() const { return kind == Kind::Var; }
};

using Path = std::vector<int>;

/** "e" for the root, "e.1.2" for kids[1]->kids[2]. */
std::string path_to_string(const Path& p);
Path path_from_string(const std::string& s);

struct FunDef {
    std::string name;
    std::vector<std::string> params;
    ExprPtr body;
    SourceLoc loc;
    std::optional<std::vector<SimpleType>> declared_params;
    std::optional<SimpleType> declared_result;
};

struct FunSignature {
    std::vector<SimpleType> params;
    SimpleType result;
};

struct Program {
    std::vector<FunDef> defs;

    const FunDef* find(const std::string& name) const;
    /** Filled by simple_typecheck, parallel to defs. */
    std::vector<FunSignature> signatures;
};

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(const std::string& msg, SourceLoc loc);
    SourceLoc loc;
};

class TypeError : public std::runtime_error {
public:
    TypeError(const std::string& msg, SourceLoc loc);
    SourceLoc loc;
};

Program parse_program(const std::string& text);

/** Let normal form: every argument position holds a variable. Idempotent. */
Program normalize(const Program& p);
ExprPtr normalize_expr(const ExprPtr& e, int& counter);

/** Infers (or checks declared) monomorphic signatures and annotates every node with its type. */
Program simple_typecheck(const Program& p);

std::set<std::string> free_vars(const ExprPtr& e);

bool structurally_equal(const ExprPtr& a, const ExprPtr& b);
bool structurally_equal(const Program& a, const Program& b);

/** Pretty printer; the output re-parses when it contains no fresh `$t` names. */
std::string to_source(const ExprPtr& e);
std::string to_source(const Program& p);

/** Node at path, or null if the path leaves the tree. */
ExprPtr node_at(const ExprPtr& root, const Path& path);

}  // namespace logcost
