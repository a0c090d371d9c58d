#pragma once

// Independent reference procedures for the test suites.

#include "logcost/linearize.hpp"
#include "logcost/solver.hpp"

#include <optional>
#include <random>
#include <vector>

namespace logcost::testing {

/** Solves the square system M x = r exactly; nullopt if M is singular. */
inline std::optional<std::vector<Rational>> gauss(std::vector<std::vector<Rational>> m, std::vector<Rational> r) {
    const size_t n = r.size();
    for (size_t c = 0; c < n; ++c) {
        size_t piv = c;
        while (piv < n && m[piv][c] == 0) ++piv;
        if (piv == n) return std::nullopt;
        std::swap(m[piv], m[c]);
        std::swap(r[piv], r[c]);
        for (size_t i = 0; i < n; ++i) {
            if (i == c || m[i][c] == 0) continue;
            Rational k = m[i][c] / m[c][c];
            for (size_t j = c; j < n; ++j) m[i][j] -= k * m[c][j];
            r[i] -= k * r[c];
        }
    }
    std::vector<Rational> x(n);
    for (size_t i = 0; i < n; ++i) x[i] = r[i] / m[i][i];
    return x;
}

/**
 * Feasibility over x >= 0 by vertex enumeration. A nonempty polyhedron inside the nonnegative
 * orthant has a vertex, and every vertex is the unique solution of n tight constraints.
 */
inline bool vertex_feasible(const ConstraintSet& cs) {
    const size_t n = cs.num_unknowns();
    auto holds = [&](const std::vector<Rational>& x) {
        for (size_t i = 0; i < n; ++i)
            if (x[i] < 0) return false;
        for (const auto& c : cs.constraints()) {
            Rational v = c.lhs.constant;
            for (const auto& [u, k] : c.lhs.terms) v += k * x[static_cast<size_t>(u)];
            if ((c.rel == Rel::Eq && v != 0) || (c.rel == Rel::Le && v > 0) || (c.rel == Rel::Ge && v < 0)) return false;
        }
        return true;
    };
    if (n == 0) return holds({});

    // Hyperplanes a.x = r: one per constraint, one per coordinate.
    std::vector<std::vector<Rational>> rows;
    std::vector<Rational> rhs;
    for (const auto& c : cs.constraints()) {
        std::vector<Rational> a(n);
        for (const auto& [u, k] : c.lhs.terms) a[static_cast<size_t>(u)] = k;
        rows.push_back(std::move(a));
        rhs.push_back(-c.lhs.constant);
    }
    for (size_t i = 0; i < n; ++i) {
        std::vector<Rational> a(n);
        a[i] = 1;
        rows.push_back(std::move(a));
        rhs.push_back(0);
    }
    const size_t total = rows.size();
    std::vector<size_t> pick(n);
    for (size_t i = 0; i < n; ++i) pick[i] = i;
    while (true) {
        std::vector<std::vector<Rational>> m;
        std::vector<Rational> r;
        for (size_t i : pick) {
            m.push_back(rows[i]);
            r.push_back(rhs[i]);
        }
        if (auto x = gauss(m, r); x && holds(*x)) return true;
        // next combination
        size_t i = n;
        while (i > 0 && pick[i - 1] == total - n + i - 1) --i;
        if (i == 0) return false;
        ++pick[i - 1];
        for (size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
    }
}

/** A random system with coefficients in {-2..2} and constants in {-3..3}. */
inline ConstraintSet random_system(std::mt19937_64& rng, int max_unknowns, int max_constraints) {
    ConstraintSet cs;
    const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_unknowns));
    const int m = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_constraints));
    std::vector<VarId> vs;
    for (int i = 0; i < n; ++i) vs.push_back(cs.unknown("u" + std::to_string(i)));
    std::uniform_int_distribution<int> coef(-2, 2), cst(-3, 3), rel(0, 4);
    for (int j = 0; j < m; ++j) {
        LinExpr e(cst(rng));
        for (VarId v : vs)
            if (int k = coef(rng); k != 0) e += LinExpr::var(v, k);
        int r = rel(rng);
        cs.add(std::move(e), r == 0 ? Rel::Eq : r <= 2 ? Rel::Le : Rel::Ge, "c" + std::to_string(j));
    }
    return cs;
}

/**
 * Reduces b1 log|x| + b2 log|y| <= a1 log|x| + a2 log|y| under the fact |x| = |y| + |z|
 * (so log|x| >= log|y|) and solves the result.
 */
inline bool farkas_micro_feasible(int a1, int a2, int b1, int b2) {
    auto ann = [](int cx, int cy) {
        SymAnnotation q;
        q.m = 2;
        if (cx) q.coef[Index::log({1, 0}, 0)] = LinExpr(cx);
        if (cy) q.coef[Index::log({0, 1}, 0)] = LinExpr(cy);
        return q;
    };
    SizeFacts sf;
    sf.parts["x"] = {"y", "z"};
    ConstraintSet cs;
    farkas_reduce(ann(b1, b2), ann(a1, a2), {"x", "y"}, sf, cs, "micro");
    return solve(cs).feasible;
}

/** a1 x + a2 y >= b1 x + b2 y on the grid 0 <= y <= x <= 50. */
inline bool micro_grid_valid(int a1, int a2, int b1, int b2) {
    for (int x = 0; x <= 50; ++x)
        for (int y = 0; y <= x; ++y)
            if (a1 * x + a2 * y < b1 * x + b2 * y) return false;
    return true;
}

}  // namespace logcost::testing
