#include "logcost/solver.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace logcost {

// ---------------------------------------------------------------------------
// LinExpr

LinExpr LinExpr::var(VarId v, const Rational& c) {
    LinExpr e;
    if (c != 0) e.terms[v] = c;
    return e;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    for (const auto& [v, c] : o.terms) {
        auto& slot = terms[v];
        slot += c;
        if (slot == 0) terms.erase(v);
    }
    constant += o.constant;
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
    for (const auto& [v, c] : o.terms) {
        auto& slot = terms[v];
        slot -= c;
        if (slot == 0) terms.erase(v);
    }
    constant -= o.constant;
    return *this;
}

LinExpr& LinExpr::operator*=(const Rational& k) {
    if (k == 0) {
        terms.clear();
        constant = 0;
        return *this;
    }
    for (auto& [v, c] : terms) c *= k;
    constant *= k;
    return *this;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(const Rational& k, LinExpr a) { return a *= k; }

// ---------------------------------------------------------------------------
// ConstraintSet

VarId ConstraintSet::unknown(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    VarId id = static_cast<VarId>(names_.size());
    names_.push_back(name);
    ids_.emplace(name, id);
    return id;
}

std::optional<VarId> ConstraintSet::find(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

void ConstraintSet::add(LinExpr lhs, Rel rel, std::string origin) {
    for (const auto& [v, c] : lhs.terms)
        if (v < 0 || static_cast<size_t>(v) >= names_.size()) throw std::out_of_range("constraint on undeclared unknown");
    cons_.push_back({std::move(lhs), rel, std::move(origin)});
}

void ConstraintSet::add_eq(const LinExpr& a, const LinExpr& b, const std::string& origin) { add(a - b, Rel::Eq, origin); }
void ConstraintSet::add_le(const LinExpr& a, const LinExpr& b, const std::string& origin) { add(a - b, Rel::Le, origin); }
void ConstraintSet::add_ge(const LinExpr& a, const LinExpr& b, const std::string& origin) { add(a - b, Rel::Ge, origin); }

void ConstraintSet::merge(const ConstraintSet& other) {
    std::vector<VarId> map(other.num_unknowns());
    for (size_t i = 0; i < other.num_unknowns(); ++i) map[i] = unknown(other.names_[i]);
    for (const auto& c : other.cons_) {
        LinExpr e(c.lhs.constant);
        for (const auto& [v, k] : c.lhs.terms) e.terms[map[static_cast<size_t>(v)]] += k;
        cons_.push_back({std::move(e), c.rel, c.origin});
    }
}

// ---------------------------------------------------------------------------
// Simplex

namespace {

using Row = std::vector<std::pair<int, Rational>>;  // sorted by variable

const Rational* row_get(const Row& r, int v) {
    auto it = std::lower_bound(r.begin(), r.end(), v, [](const auto& p, int x) { return p.first < x; });
    return it != r.end() && it->first == v ? &it->second : nullptr;
}

/** Returns a + k*b; reports variables that appear or disappear. */
Row row_axpy(const Row& a, const Rational& k, const Row& b, std::vector<int>& added, std::vector<int>& removed) {
    Row out;
    out.reserve(a.size() + b.size());
    size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].first < a[i].first) {
            out.emplace_back(b[j].first, k * b[j].second);
            added.push_back(b[j].first);
            ++j;
        } else {
            Rational c = a[i].second + k * b[j].second;
            if (c != 0)
                out.emplace_back(a[i].first, std::move(c));
            else
                removed.push_back(a[i].first);
            ++i;
            ++j;
        }
    }
    return out;
}

struct Bound {
    std::optional<Rational> value;
    int origin = -1;  // constraint index, -1 for nonnegativity
};

class Simplex {
public:
    Simplex(const ConstraintSet& cs, const SolveOptions& opts) : cs_(cs), n_(static_cast<int>(cs.num_unknowns())) {
        if (opts.time_limit) deadline_ = std::chrono::steady_clock::now() + *opts.time_limit;
        lb_.resize(static_cast<size_t>(n_));
        ub_.resize(static_cast<size_t>(n_));
        for (auto& b : lb_) b.value = Rational(0);
    }

    SolveResult run() {
        SolveResult res;
        if (!presolve(res)) return res;
        build();
        while (true) {
            if (deadline_ && std::chrono::steady_clock::now() > *deadline_) throw SolverLimit();
            int r = pick_violated();
            if (r < 0) break;
            int xi = basic_[static_cast<size_t>(r)];
            bool below = lb_[xi].value && val_[xi] < *lb_[xi].value;
            int xj = pick_entering(r, below);
            if (xj < 0) {
                res.feasible = false;
                explain(r, below, res.conflict);
                res.pivots = pivots_;
                return res;
            }
            pivot_and_update(r, xj, below ? *lb_[xi].value : *ub_[xi].value);
            ++pivots_;
        }
        res.feasible = true;
        res.pivots = pivots_;
        for (int v = 0; v < n_; ++v) res.model[cs_.name(v)] = val_[static_cast<size_t>(v)];
        return res;
    }

private:
    const ConstraintSet& cs_;
    int n_;
    std::optional<std::chrono::steady_clock::time_point> deadline_;
    std::vector<Bound> lb_, ub_;
    std::vector<Rational> val_;
    std::vector<int> row_of_;    // -1 if nonbasic
    std::vector<int> basic_;     // per row
    std::vector<Row> rows_;
    std::vector<std::set<int>> col_rows_;
    std::vector<int> slack_cons_;  // constraint index of each slack variable (offset n_)
    long pivots_ = 0;

    static bool holds(const Rational& x, Rel rel) {
        return rel == Rel::Eq ? x == 0 : rel == Rel::Le ? x <= 0 : x >= 0;
    }

    void tighten(std::vector<Bound>& lb, std::vector<Bound>& ub, size_t v, Rel rel, const Rational& rhs, int origin) {
        if (rel != Rel::Le && (!lb[v].value || rhs > *lb[v].value)) lb[v] = {rhs, origin};
        if (rel != Rel::Ge && (!ub[v].value || rhs < *ub[v].value)) ub[v] = {rhs, origin};
    }

    static void push_origin(std::vector<int>& out, int o) {
        if (o >= 0 && std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
    }

    bool presolve(SolveResult& res) {
        const auto& cons = cs_.constraints();
        for (size_t i = 0; i < cons.size(); ++i) {
            const auto& c = cons[i];
            if (c.lhs.terms.empty()) {
                if (!holds(c.lhs.constant, c.rel)) {
                    res.conflict = {static_cast<int>(i)};
                    return false;
                }
                continue;
            }
            if (c.lhs.terms.size() == 1) {
                const auto& [v, a] = *c.lhs.terms.begin();
                Rel rel = c.rel;
                if (a < 0 && rel != Rel::Eq) rel = rel == Rel::Le ? Rel::Ge : Rel::Le;
                tighten(lb_, ub_, static_cast<size_t>(v), rel, -c.lhs.constant / a, static_cast<int>(i));
                auto& lo = lb_[static_cast<size_t>(v)];
                auto& hi = ub_[static_cast<size_t>(v)];
                if (lo.value && hi.value && *lo.value > *hi.value) {
                    push_origin(res.conflict, lo.origin);
                    push_origin(res.conflict, hi.origin);
                    return false;
                }
                continue;
            }
            slack_cons_.push_back(static_cast<int>(i));
        }
        return true;
    }

    void build() {
        size_t total = static_cast<size_t>(n_) + slack_cons_.size();
        lb_.resize(total);
        ub_.resize(total);
        val_.assign(total, Rational(0));
        row_of_.assign(total, -1);
        col_rows_.resize(total);
        for (int v = 0; v < n_; ++v) val_[static_cast<size_t>(v)] = *lb_[static_cast<size_t>(v)].value;
        const auto& cons = cs_.constraints();
        for (size_t k = 0; k < slack_cons_.size(); ++k) {
            int ci = slack_cons_[k];
            const auto& c = cons[static_cast<size_t>(ci)];
            size_t s = static_cast<size_t>(n_) + k;
            tighten(lb_, ub_, s, c.rel, -c.lhs.constant, ci);
            Row row;
            Rational sv = 0;
            for (const auto& [v, a] : c.lhs.terms) {
                row.emplace_back(v, a);
                sv += a * val_[static_cast<size_t>(v)];
                col_rows_[static_cast<size_t>(v)].insert(static_cast<int>(k));
            }
            val_[s] = sv;
            row_of_[s] = static_cast<int>(k);
            basic_.push_back(static_cast<int>(s));
            rows_.push_back(std::move(row));
        }
    }

    bool violated(int x) const {
        const auto& v = val_[static_cast<size_t>(x)];
        return (lb_[x].value && v < *lb_[x].value) || (ub_[x].value && v > *ub_[x].value);
    }

    int pick_violated() const {
        int best = -1, best_var = -1;
        for (size_t r = 0; r < rows_.size(); ++r) {
            int x = basic_[r];
            if ((best_var < 0 || x < best_var) && violated(x)) {
                best = static_cast<int>(r);
                best_var = x;
            }
        }
        return best;
    }

    bool can_increase(int x) const { return !ub_[x].value || val_[x] < *ub_[x].value; }
    bool can_decrease(int x) const { return !lb_[x].value || val_[x] > *lb_[x].value; }

    int pick_entering(int r, bool increase) const {
        for (const auto& [x, a] : rows_[static_cast<size_t>(r)]) {
            bool up = (a > 0) == increase;
            if (up ? can_increase(x) : can_decrease(x)) return x;  // rows are sorted, so this is Bland's choice
        }
        return -1;
    }

    int origin_of(const Bound& b, int x) const {
        (void)x;
        return b.origin;
    }

    void explain(int r, bool below, std::vector<int>& out) const {
        int xi = basic_[static_cast<size_t>(r)];
        push_origin(out, origin_of(below ? lb_[xi] : ub_[xi], xi));
        for (const auto& [x, a] : rows_[static_cast<size_t>(r)]) {
            bool at_upper = (a > 0) == below;
            push_origin(out, origin_of(at_upper ? ub_[x] : lb_[x], x));
        }
        std::sort(out.begin(), out.end());
    }

    void pivot_and_update(int r, int xj, const Rational& target) {
        int xi = basic_[static_cast<size_t>(r)];
        const Rational a = *row_get(rows_[static_cast<size_t>(r)], xj);
        Rational theta = (target - val_[static_cast<size_t>(xi)]) / a;
        val_[static_cast<size_t>(xi)] = target;
        val_[static_cast<size_t>(xj)] += theta;
        for (int k : col_rows_[static_cast<size_t>(xj)]) {
            if (k == r) continue;
            val_[static_cast<size_t>(basic_[static_cast<size_t>(k)])] += *row_get(rows_[static_cast<size_t>(k)], xj) * theta;
        }
        pivot(r, xj);
    }

    void pivot(int r, int xj) {
        size_t ur = static_cast<size_t>(r);
        int xi = basic_[ur];
        Row& old = rows_[ur];
        Rational a = *row_get(old, xj);
        // xj = (xi - sum_{k != j} a_k x_k) / a
        Row fresh;
        fresh.reserve(old.size());
        Rational inv = Rational(1) / a;
        for (const auto& [x, c] : old) {
            if (x == xj) continue;
            fresh.emplace_back(x, -c * inv);
        }
        fresh.emplace_back(xi, inv);
        std::sort(fresh.begin(), fresh.end(), [](const auto& p, const auto& q) { return p.first < q.first; });
        for (const auto& [x, c] : old)
            if (x != xj) col_rows_[static_cast<size_t>(x)].erase(r);
        for (const auto& [x, c] : fresh) col_rows_[static_cast<size_t>(x)].insert(r);
        old = std::move(fresh);
        basic_[ur] = xj;
        row_of_[static_cast<size_t>(xj)] = r;
        row_of_[static_cast<size_t>(xi)] = -1;

        std::vector<int> users(col_rows_[static_cast<size_t>(xj)].begin(), col_rows_[static_cast<size_t>(xj)].end());
        col_rows_[static_cast<size_t>(xj)].clear();
        for (int k : users) {
            if (k == r) continue;
            size_t uk = static_cast<size_t>(k);
            Rational c = *row_get(rows_[uk], xj);
            // Drop xj from row k, then add c * (row r).
            Row without;
            without.reserve(rows_[uk].size());
            for (auto& p : rows_[uk])
                if (p.first != xj) without.push_back(std::move(p));
            std::vector<int> added, removed;
            rows_[uk] = row_axpy(without, c, rows_[ur], added, removed);
            for (int x : added) col_rows_[static_cast<size_t>(x)].insert(k);
            for (int x : removed) col_rows_[static_cast<size_t>(x)].erase(k);
        }
    }
};

}  // namespace

SolveResult solve(const ConstraintSet& cs, const SolveOptions& opts) { return Simplex(cs, opts).run(); }

// ---------------------------------------------------------------------------
// Checking

namespace {

Rational eval_lhs(const ConstraintSet& cs, const LinExpr& e, const std::vector<const Rational*>& vals) {
    Rational s = e.constant;
    for (const auto& [v, c] : e.terms) s += c * *vals[static_cast<size_t>(v)];
    (void)cs;
    return s;
}

std::vector<const Rational*> lookup_all(const ConstraintSet& cs, const Assignment& a) {
    std::vector<const Rational*> vals(cs.num_unknowns());
    for (size_t i = 0; i < vals.size(); ++i) {
        auto it = a.find(cs.name(static_cast<VarId>(i)));
        if (it == a.end()) throw MissingUnknown("assignment has no value for " + cs.name(static_cast<VarId>(i)));
        vals[i] = &it->second;
    }
    return vals;
}

}  // namespace

Rational evaluate(const LinExpr& e, const ConstraintSet& cs, const Assignment& a) {
    Rational s = e.constant;
    for (const auto& [v, c] : e.terms) {
        auto it = a.find(cs.name(v));
        if (it == a.end()) throw MissingUnknown("assignment has no value for " + cs.name(v));
        s += c * it->second;
    }
    return s;
}

int first_violation(const ConstraintSet& cs, const Assignment& a) {
    auto vals = lookup_all(cs, a);
    for (const auto* v : vals)
        if (*v < 0) return -2;
    const auto& cons = cs.constraints();
    for (size_t i = 0; i < cons.size(); ++i) {
        Rational x = eval_lhs(cs, cons[i].lhs, vals);
        bool ok = cons[i].rel == Rel::Eq ? x == 0 : cons[i].rel == Rel::Le ? x <= 0 : x >= 0;
        if (!ok) return static_cast<int>(i);
    }
    return -1;
}

bool check_assignment(const ConstraintSet& cs, const Assignment& a) { return first_violation(cs, a) == -1; }

// ---------------------------------------------------------------------------
// SMT-LIB

namespace {

std::string smt_symbol(const std::string& name) {
    bool simple = !name.empty() && !std::isdigit(static_cast<unsigned char>(name[0]));
    for (char c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && std::string("~!@$%^&*_-+=<>.?/").find(c) == std::string::npos)
            simple = false;
    return simple ? name : "|" + name + "|";
}

std::string smt_num(const Rational& r) {
    Rational a = abs(r);
    std::string num = numerator(a).str() + ".0";
    std::string s = denominator(a) == 1 ? num : "(/ " + num + " " + denominator(a).str() + ".0)";
    return r < 0 ? "(- " + s + ")" : s;
}

}  // namespace

std::string export_smtlib(const ConstraintSet& cs) {
    std::ostringstream os;
    os << "(set-logic QF_LRA)\n";
    std::vector<std::string> names;
    for (size_t i = 0; i < cs.num_unknowns(); ++i) names.push_back(cs.name(static_cast<VarId>(i)));
    std::sort(names.begin(), names.end());
    for (const auto& n : names) os << "(declare-fun " << smt_symbol(n) << " () Real)\n";
    for (const auto& n : names) os << "(assert (>= " << smt_symbol(n) << " 0.0))\n";
    for (const auto& c : cs.constraints()) {
        if (!c.origin.empty()) {
            std::string o = c.origin;
            std::replace(o.begin(), o.end(), '\n', ' ');
            os << "; " << o << "\n";
        }
        std::string lhs;
        std::vector<std::string> parts;
        for (const auto& [v, k] : c.lhs.terms)
            parts.push_back(k == 1 ? smt_symbol(cs.name(v)) : "(* " + smt_num(k) + " " + smt_symbol(cs.name(v)) + ")");
        if (parts.empty())
            lhs = "0.0";
        else if (parts.size() == 1)
            lhs = parts[0];
        else {
            lhs = "(+";
            for (const auto& p : parts) lhs += " " + p;
            lhs += ")";
        }
        const char* op = c.rel == Rel::Eq ? "=" : c.rel == Rel::Le ? "<=" : ">=";
        os << "(assert (" << op << " " << lhs << " " << smt_num(-c.lhs.constant) << "))\n";
    }
    os << "(check-sat)\n(get-model)\n";
    return os.str();
}

namespace {

struct SExpr {
    bool atom = true;
    std::string text;
    std::vector<SExpr> kids;
};

class SExprReader {
public:
    explicit SExprReader(const std::string& s) : s_(s) {}

    std::vector<SExpr> read_all() {
        std::vector<SExpr> out;
        while (true) {
            ws();
            if (i_ >= s_.size()) return out;
            out.push_back(read());
        }
    }

private:
    const std::string& s_;
    size_t i_ = 0;

    void ws() {
        while (i_ < s_.size()) {
            if (std::isspace(static_cast<unsigned char>(s_[i_]))) {
                ++i_;
            } else if (s_[i_] == ';') {
                while (i_ < s_.size() && s_[i_] != '\n') ++i_;
            } else {
                break;
            }
        }
    }

    SExpr read() {
        ws();
        if (i_ >= s_.size()) throw ModelParseError("unexpected end of model text");
        if (s_[i_] == ')') throw ModelParseError("unbalanced ')' in model text");
        if (s_[i_] == '(') {
            ++i_;
            SExpr e;
            e.atom = false;
            while (true) {
                ws();
                if (i_ >= s_.size()) throw ModelParseError("unterminated list in model text");
                if (s_[i_] == ')') {
                    ++i_;
                    return e;
                }
                e.kids.push_back(read());
            }
        }
        SExpr e;
        if (s_[i_] == '|') {
            size_t end = s_.find('|', i_ + 1);
            if (end == std::string::npos) throw ModelParseError("unterminated |symbol|");
            e.text = s_.substr(i_ + 1, end - i_ - 1);
            i_ = end + 1;
            return e;
        }
        size_t start = i_;
        while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != '(' && s_[i_] != ')')
            ++i_;
        e.text = s_.substr(start, i_ - start);
        return e;
    }
};

Rational eval_number(const SExpr& e) {
    if (e.atom) {
        try {
            return parse_rational(e.text);
        } catch (const std::invalid_argument&) {
            throw ModelParseError("not a number: " + e.text);
        }
    }
    if (e.kids.empty() || !e.kids[0].atom) throw ModelParseError("malformed numeric term");
    const std::string& op = e.kids[0].text;
    if (op == "-" && e.kids.size() == 2) return -eval_number(e.kids[1]);
    if (op == "/" && e.kids.size() == 3) {
        Rational d = eval_number(e.kids[2]);
        if (d == 0) throw ModelParseError("division by zero in model");
        return eval_number(e.kids[1]) / d;
    }
    if ((op == "+" || op == "*" || op == "-") && e.kids.size() >= 2) {
        Rational acc = eval_number(e.kids[1]);
        for (size_t i = 2; i < e.kids.size(); ++i) {
            Rational x = eval_number(e.kids[i]);
            acc = op == "+" ? acc + x : op == "*" ? acc * x : acc - x;
        }
        return acc;
    }
    throw ModelParseError("unsupported operator in model value: " + op);
}

void collect(const SExpr& e, Assignment& out) {
    if (e.atom) return;
    if (e.kids.size() == 5 && e.kids[0].atom && e.kids[0].text == "define-fun") {
        if (!e.kids[1].atom) throw ModelParseError("define-fun without a name");
        Rational v = eval_number(e.kids[4]);
        if (v < 0) throw ModelParseError("negative value for " + e.kids[1].text);
        out[e.kids[1].text] = v;
        return;
    }
    for (const auto& k : e.kids) collect(k, out);
}

}  // namespace

Assignment import_model(const std::string& text) {
    Assignment out;
    for (const auto& e : SExprReader(text).read_all()) {
        if (e.atom) {
            if (e.text == "sat") continue;
            if (e.text == "unsat" || e.text == "unknown") throw ModelParseError("solver answered " + e.text);
            throw ModelParseError("unexpected token " + e.text);
        }
        collect(e, out);
    }
    return out;
}

std::string to_string(const ConstraintSet& cs, const Constraint& c) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [v, k] : c.lhs.terms) {
        Rational a = abs(k);
        os << (first ? (k < 0 ? "-" : "") : (k < 0 ? " - " : " + "));
        if (a != 1) os << to_string(a) << "*";
        os << cs.name(v);
        first = false;
    }
    if (first) os << "0";
    os << (c.rel == Rel::Eq ? " = " : c.rel == Rel::Le ? " <= " : " >= ") << to_string(Rational(-c.lhs.constant));
    return os.str();
}

}  // namespace logcost
