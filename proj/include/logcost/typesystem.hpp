#pragma once

#include "logcost/linearize.hpp"
#include "logcost/potential.hpp"
#include "logcost/solver.hpp"
#include "logcost/syntax.hpp"

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace logcost {

// ---------------------------------------------------------------------------
// Tactics

struct Directive {
    enum class Kind { Weaken, Share, WVar, Shift };
    std::string fn;
    Path path;
    Kind kind = Kind::Weaken;
    std::string var;  // Share, WVar
    int line = 0;
};

struct Tactics {
    std::vector<Directive> directives;
};

class TacticError : public std::runtime_error {
public:
    TacticError(const std::string& msg, int line = 0);
    int line;
};

/** Lines `fn @ e.1.2 : weaken | share v | wvar v | shift`; `#` and `--` start comments. */
Tactics parse_tactics(const std::string& text);

/** Throws TacticError if a directive names an unknown function or a path outside its body. */
void resolve_tactics(const Tactics& t, const Program& p);

// ---------------------------------------------------------------------------
// Symbolic annotations

/** Unknown-name fragment for an index: "r2", "l1-0-1b2". */
std::string index_key(const Index& idx);

LinExpr coef_at(const SymAnnotation& q, const Index& idx);

/** Fresh unknowns prefix.<index_key> for every index of the restricted template. */
SymAnnotation fresh_annotation(ConstraintSet& cs, const std::string& prefix, int m);

SymAnnotation literal_annotation(const Annotation& q);

/** perm[j] = old position of new position j. */
SymAnnotation permute(const SymAnnotation& q, const std::vector<int>& perm);

/** w:var on the last position: r_i = q_i, r(a,b) = q(a,0,b). */
SymAnnotation drop_last(const SymAnnotation& q);

/** Shares the last two positions (symbolic sharing merge). */
SymAnnotation share_last(const SymAnnotation& q);

Annotation instantiate(const SymAnnotation& q, const ConstraintSet& cs, const Assignment& a);

// ---------------------------------------------------------------------------
// Derivation

class DerivationError : public std::runtime_error {
public:
    DerivationError(const std::string& msg, const Path& path);
    Path path;
};

struct DeriveOptions {
    Rational big_m = 1000;
};

/** A control path through if/match on the continuation spine: branching node -> chosen kid. */
using BranchChoice = std::map<Path, int>;

std::vector<BranchChoice> enumerate_branches(const ExprPtr& body);
std::string branch_label(const BranchChoice& b);

struct SignatureUse {
    std::string role;  // "costed", "cost-free", "cost-free#k"
    SymAnnotation pre, post;
};

struct BranchSystem {
    std::string fn;
    BranchChoice choice;
    std::string label;
    ConstraintSet cs;
    std::vector<FarkasRecord> weakenings;
    std::vector<std::pair<std::string, VarId>> selectors;  // (name, unknown) of 0/1 selectors
    std::vector<SignatureUse> signatures;                   // the pairs judged in this branch
    std::set<std::string> visited;                          // normalised path strings
    std::set<int> directives_used;
    std::vector<std::string> notes;
    std::optional<std::string> error;  // derivation failed structurally
    bool selected = false;
};

struct FunctionSystem {
    std::string fn;
    std::vector<BranchSystem> branches;
    std::set<std::string> callees;  // functions with indeterminate signatures used here
};

struct Derivation {
    std::vector<FunctionSystem> functions;

    const FunctionSystem* find(const std::string& fn) const;
    /** Union of the selected branches of fn and of the callees it depends on. */
    ConstraintSet joint_system(const std::string& fn) const;
    /** Union of the selected branches of every function. */
    ConstraintSet selected_system() const;
};

/**
 * Builds the constraint systems of every definition. p must be normalised and simply typed.
 * coefs fixes signature pairs; functions missing from it get indeterminate pairs. A block with
 * only cost-free sections is judged in cost-free mode only.
 */
Derivation derive(const Program& p, const CoefFile& coefs, const Tactics& tactics, const DeriveOptions& opts = {});

/** Everything in one set (all branches of all functions). */
ConstraintSet derive_constraints(const Program& p, const CoefFile& coefs, const Tactics& tactics,
                                 const DeriveOptions& opts = {});

}  // namespace logcost
