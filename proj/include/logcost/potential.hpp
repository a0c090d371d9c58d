#pragma once

#include "logcost/rational.hpp"
#include "logcost/semantics.hpp"

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace logcost {

/**
 * Either the rank of the i-th tree (0-based; for one tree this is q*) or the
 * basic function log'(sum a_i |t_i| + b).
 */
struct Index {
    bool is_rank = false;
    int pos = 0;
    std::vector<int> a;
    int b = 0;

    static Index rank(int pos) { return {true, pos, {}, 0}; }
    static Index log(std::vector<int> a, int b) { return {false, 0, std::move(a), b}; }
    /** Constant log'(b) over m trees. */
    static Index constant(int m, int b) { return log(std::vector<int>(static_cast<size_t>(m), 0), b); }

    bool is_constant() const;
    auto operator<=>(const Index&) const = default;
};

/** "q*", "q2", "q(1 0 | 2)". */
std::string to_string(const Index& idx, int arity);

/** Restricted template: all ranks, and log indices with a_i in {0,1}, b in {0,1,2}, minus (0..0 | 0). */
std::vector<Index> index_universe(int m);

template <class C>
struct AnnotationT {
    int m = 0;
    std::map<Index, C> coef;

    const C* get(const Index& i) const {
        auto it = coef.find(i);
        return it == coef.end() ? nullptr : &it->second;
    }
};

using Annotation = AnnotationT<Rational>;

class ArityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

double log2p(double n);
double rank(const Value& t);
double potential_of(const Annotation& q, const std::vector<Value>& trees);

/** Index after merging the last two tree positions (ranks add, a_{m-1}+a_m). */
Index share_index(const Index& idx, int m);
Annotation share(const Annotation& q);
/** True if share(q) holds an index outside the restricted template (a merged entry of 2). */
bool share_leaves_template(const Annotation& q);

Annotation add_constant(const Annotation& q, const Rational& k);
Annotation scale(const Rational& k, const Annotation& q);
Annotation add(const Annotation& p, const Annotation& q);

/** perm[j] = old position of new position j. */
Index permute_index(const Index& idx, const std::vector<int>& perm);

/** Parsed .coef contents for one function. */
struct FunctionCoefs {
    std::optional<std::pair<Annotation, Annotation>> costed;
    std::vector<std::pair<Annotation, Annotation>> cost_free;
};

using CoefFile = std::map<std::string, FunctionCoefs>;

class CoefParseError : public std::runtime_error {
public:
    CoefParseError(const std::string& msg, int line);
    int line;
};

/** Arity of each annotation is taken from its log entries (1 if only q* is given, 0 if empty). */
CoefFile parse_coef(const std::string& text);
std::string to_coef_text(const CoefFile& f);

}  // namespace logcost
