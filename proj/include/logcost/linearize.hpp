#pragma once

#include "logcost/potential.hpp"
#include "logcost/solver.hpp"
#include "logcost/syntax.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace logcost {

/** Annotation whose coefficients are linear expressions over ConstraintSet unknowns. */
using SymAnnotation = AnnotationT<LinExpr>;

/** log'(sum coef_x |x| + b) over named tree variables. */
struct Monomial {
    std::map<std::string, int> coef;
    int b = 0;

    auto operator<=>(const Monomial&) const = default;
};

Monomial monomial_of(const Index& idx, const std::vector<std::string>& names);
std::string to_string(const Monomial& mono);

/** |x| = sum |parts| for every node-branch match passed on the way; all sizes are >= 1. */
struct SizeFacts {
    std::map<std::string, std::vector<std::string>> parts;

    /** Expansion of |x| into sizes of variables without known parts. */
    std::map<std::string, int> expand(const std::string& x) const;
    /** True iff e >= e2 for all sizes >= 1 consistent with the facts. */
    bool entails_ge(const Monomial& e, const Monomial& e2) const;
    /** Largest k with e >= k guaranteed. */
    int lower_bound(const Monomial& e) const;
};

/** Facts at the node reached by path in def's body (a normalised body). */
SizeFacts size_facts(const FunDef& def, const Path& path);

/** Rows A x <= b over the monomial columns. */
struct KnowledgeSystem {
    std::vector<Monomial> columns;
    std::vector<std::map<int, Rational>> rows;
    std::vector<Rational> rhs;
    std::vector<std::string> why;  // generator that produced each row

    size_t num_rows() const { return rows.size(); }
};

KnowledgeSystem build_knowledge(const std::vector<Monomial>& monomials, const SizeFacts& sf);

std::string to_string(const KnowledgeSystem& ks);

/** Exact value of log2(b) when b is 0 or a power of two. */
std::optional<Rational> exact_log2p(int b);

/** Unknowns and columns behind one Phi(lhs) <= Phi(rhs) obligation. */
struct FarkasRecord {
    std::string label;
    KnowledgeSystem ks;
    std::vector<VarId> f;
    std::vector<LinExpr> p, q;            // per knowledge column
    LinExpr c_p, c_q;                     // folded constants
    std::vector<LinExpr> rank_p, rank_q;  // per tree position
};

/**
 * Emits into cs: p <= A^T f + q per column, f^T b + c_p <= c_q, rank_p <= rank_q, f >= 0.
 * names lists the trees both annotations range over; sf relates them.
 */
FarkasRecord farkas_reduce(const SymAnnotation& lhs, const SymAnnotation& rhs, const std::vector<std::string>& names,
                           const SizeFacts& sf, ConstraintSet& cs, const std::string& label);

/** A concrete obligation over the columns of a knowledge system. */
struct LinearObligation {
    std::vector<Rational> p, q;
    Rational c_p, c_q;
};

LinearObligation instantiate(const FarkasRecord& rec, const ConstraintSet& cs, const Assignment& a);
std::vector<Rational> instantiate_f(const FarkasRecord& rec, const ConstraintSet& cs, const Assignment& a);

class InvalidCertificate : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/**
 * Throws InvalidCertificate if f is not a Farkas certificate. Otherwise samples points x >= 0 with
 * A x <= b (half from random tree sizes, half by rejection from a box) and returns false on the first
 * x with p.x + c_p > q.x + c_q + 1e-9.
 */
bool verify_farkas_sufficiency(const LinearObligation& ob, const KnowledgeSystem& ks, const std::vector<Rational>& f,
                               int samples, std::uint64_t seed, const SizeFacts& sf = {});

}  // namespace logcost
