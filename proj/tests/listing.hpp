#pragma once

// The hand-written typing of the nested tuple example, mapped onto derivation unknowns.

#include "support.hpp"

namespace logcost::testing {

/**
 * Both intermediate annotations are rk + log|t| + log(2) on the single tree of the let body;
 * the outer let carries the (1 1 | 0) term through the family of the pair (1 0 | 0).
 * Every other unknown is zero.
 */
inline Assignment nested_listing(const ConstraintSet& cs) {
    Assignment a;
    for (size_t v = 0; v < cs.num_unknowns(); ++v) a[cs.name(static_cast<VarId>(v))] = 0;
    for (const char* where : {"nested.c.e.P'.", "nested.c.e.1.P'."}) {
        a[std::string(where) + "r1"] = 1;
        a[std::string(where) + "l1b0"] = 1;
        a[std::string(where) + "l0b2"] = 1;
    }
    a["nested.c.e.F10-10.p.l1-1b0"] = 1;
    a["nested.c.e.F10-10.p'.l1b0"] = 1;
    a["nested.c.e.F10-10.sel.l1-1b0"] = 1;
    return a;
}

/** The listing's signature with the (1 1 1 0 | 0) coefficient dropped. */
inline CoefFile nested_mutated() {
    CoefFile f = coef_fixture("nested.coef");
    f.at("nested").costed->first.coef[Index::log({1, 1, 1, 0}, 0)] = 0;
    return f;
}

}  // namespace logcost::testing
