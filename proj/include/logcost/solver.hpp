#pragma once

#include "logcost/rational.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace logcost {

using VarId = int;

/** Sum of c_k * u_k plus a constant, over unknown ids of one ConstraintSet. */
struct LinExpr {
    std::map<VarId, Rational> terms;
    Rational constant;

    LinExpr() = default;
    LinExpr(const Rational& c) : constant(c) {}  // NOLINT(google-explicit-constructor)
    static LinExpr var(VarId v, const Rational& c = 1);

    bool is_constant() const { return terms.empty(); }
    bool is_zero() const { return terms.empty() && constant == 0; }

    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator-=(const LinExpr& o);
    LinExpr& operator*=(const Rational& k);
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(const Rational& k, LinExpr a);

enum class Rel { Eq, Le, Ge };

/** lhs rel 0 */
struct Constraint {
    LinExpr lhs;
    Rel rel = Rel::Eq;
    std::string origin;
};

/** Linear constraints over named unknowns, all implicitly >= 0. */
class ConstraintSet {
public:
    /** Returns the id of name, declaring it on first use. */
    VarId unknown(const std::string& name);
    std::optional<VarId> find(const std::string& name) const;
    const std::string& name(VarId v) const { return names_.at(static_cast<size_t>(v)); }
    size_t num_unknowns() const { return names_.size(); }

    void add(LinExpr lhs, Rel rel, std::string origin = {});
    void add_eq(const LinExpr& a, const LinExpr& b, const std::string& origin = {});
    void add_le(const LinExpr& a, const LinExpr& b, const std::string& origin = {});
    void add_ge(const LinExpr& a, const LinExpr& b, const std::string& origin = {});

    const std::vector<Constraint>& constraints() const { return cons_; }
    /** Appends all constraints of other, remapping its unknowns by name. */
    void merge(const ConstraintSet& other);

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, VarId> ids_;
    std::vector<Constraint> cons_;
};

using Assignment = std::map<std::string, Rational>;

class SolverLimit : public std::runtime_error {
public:
    SolverLimit() : std::runtime_error("solver time limit exceeded") {}
};

struct SolveOptions {
    std::optional<std::chrono::milliseconds> time_limit;
};

struct SolveResult {
    bool feasible = false;
    Assignment model;           // total on the set's unknowns when feasible
    std::vector<int> conflict;  // constraint indices explaining infeasibility
    long pivots = 0;
};

/** Exact-rational feasibility (bounded-variable simplex, Bland's rule). Throws SolverLimit. */
SolveResult solve(const ConstraintSet& cs, const SolveOptions& opts = {});

class MissingUnknown : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/** True iff every constraint and every nonnegativity holds exactly. Throws MissingUnknown. */
bool check_assignment(const ConstraintSet& cs, const Assignment& a);

/** Value of e under a. Throws MissingUnknown. */
Rational evaluate(const LinExpr& e, const ConstraintSet& cs, const Assignment& a);

/** Index of the first violated constraint, or -1 (nonnegativity violations give -2). */
int first_violation(const ConstraintSet& cs, const Assignment& a);

std::string export_smtlib(const ConstraintSet& cs);

class ModelParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** Reads a get-model response (optionally preceded by "sat"). */
Assignment import_model(const std::string& text);

std::string to_string(const ConstraintSet& cs, const Constraint& c);

}  // namespace logcost
