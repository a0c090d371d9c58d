#include "logcost/linearize.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace logcost {

Monomial monomial_of(const Index& idx, const std::vector<std::string>& names) {
    if (idx.is_rank) throw std::invalid_argument("rank indices are not log monomials");
    if (idx.a.size() != names.size()) throw ArityError("index arity does not match the context");
    Monomial m;
    for (size_t i = 0; i < names.size(); ++i)
        if (idx.a[i] != 0) m.coef[names[i]] += idx.a[i];
    m.b = idx.b;
    return m;
}

std::string to_string(const Monomial& mono) {
    std::string s = "log(";
    bool first = true;
    for (const auto& [x, c] : mono.coef) {
        if (!first) s += " + ";
        if (c != 1) s += std::to_string(c) + "*";
        s += "|" + x + "|";
        first = false;
    }
    if (mono.b != 0 || first) s += (first ? "" : " + ") + std::to_string(mono.b);
    return s + ")";
}

// ---------------------------------------------------------------------------
// Size facts

std::map<std::string, int> SizeFacts::expand(const std::string& x) const {
    std::map<std::string, int> out;
    std::vector<std::string> work{x};
    size_t guard = 0;
    while (!work.empty()) {
        if (++guard > 100000) throw std::logic_error("cyclic size facts");
        std::string y = work.back();
        work.pop_back();
        auto it = parts.find(y);
        if (it == parts.end()) {
            out[y] += 1;
        } else {
            for (const auto& z : it->second) work.push_back(z);
        }
    }
    return out;
}

namespace {

std::map<std::string, int> expand_monomial(const SizeFacts& sf, const Monomial& e) {
    std::map<std::string, int> out;
    for (const auto& [x, c] : e.coef)
        for (const auto& [atom, k] : sf.expand(x)) out[atom] += c * k;
    return out;
}

}  // namespace

bool SizeFacts::entails_ge(const Monomial& e, const Monomial& e2) const {
    auto a = expand_monomial(*this, e);
    for (const auto& [atom, k] : expand_monomial(*this, e2)) a[atom] -= k;
    long slack = static_cast<long>(e.b) - e2.b;
    for (const auto& [atom, d] : a) {
        if (d < 0) return false;  // that atom can grow without bound
        slack += d;
    }
    return slack >= 0;
}

int SizeFacts::lower_bound(const Monomial& e) const {
    int lb = e.b;
    for (const auto& [atom, k] : expand_monomial(*this, e)) lb += k;
    return lb;
}

namespace {

void forget(SizeFacts& sf, const std::string& x) {
    sf.parts.erase(x);
    for (auto it = sf.parts.begin(); it != sf.parts.end();) {
        if (std::find(it->second.begin(), it->second.end(), x) != it->second.end())
            it = sf.parts.erase(it);
        else
            ++it;
    }
}

}  // namespace

SizeFacts size_facts(const FunDef& def, const Path& path) {
    SizeFacts sf;
    ExprPtr cur = def.body;
    for (int step : path) {
        if (!cur || step < 0 || static_cast<size_t>(step) >= cur->kids.size())
            throw std::out_of_range("path leaves the body of " + def.name);
        if (cur->kind == Expr::Kind::Match && step == 2) {
            for (const auto& b : cur->binders) forget(sf, b);
            const auto& s = cur->kids[0];
            if (s && s->is_var()) {
                forget(sf, s->name);
                sf.parts[s->name] = {cur->binders[0], cur->binders[2]};
            }
        } else if (cur->kind == Expr::Kind::Let && step == 1) {
            forget(sf, cur->name);
            const auto& bound = cur->kids[0];
            if (bound->kind == Expr::Kind::Node && bound->kids[0]->is_var() && bound->kids[2]->is_var())
                sf.parts[cur->name] = {bound->kids[0]->name, bound->kids[2]->name};
        }
        cur = cur->kids[static_cast<size_t>(step)];
    }
    return sf;
}

// ---------------------------------------------------------------------------
// Knowledge

namespace {

struct Dense {
    std::vector<int> d;
    int b = 0;
};

bool ge(const Dense& x, const Dense& y) {
    long slack = static_cast<long>(x.b) - y.b;
    for (size_t k = 0; k < x.d.size(); ++k) {
        int diff = x.d[k] - y.d[k];
        if (diff < 0) return false;
        slack += diff;
    }
    return slack >= 0;
}

int floor_log2(long v) {
    int k = 0;
    while (v >= 2) {
        v /= 2;
        ++k;
    }
    return k;
}

}  // namespace

KnowledgeSystem build_knowledge(const std::vector<Monomial>& monomials, const SizeFacts& sf) {
    KnowledgeSystem ks;
    ks.columns = monomials;
    const size_t n = monomials.size();

    std::map<std::string, size_t> atom_ix;
    std::vector<std::map<std::string, int>> expanded;
    for (const auto& mono : monomials) {
        expanded.push_back(expand_monomial(sf, mono));
        for (const auto& [atom, k] : expanded.back()) atom_ix.emplace(atom, atom_ix.size());
    }
    std::vector<Dense> dense(n);
    for (size_t i = 0; i < n; ++i) {
        dense[i].d.assign(atom_ix.size(), 0);
        for (const auto& [atom, k] : expanded[i]) dense[i].d[atom_ix[atom]] = k;
        dense[i].b = monomials[i].b;
    }
    std::vector<std::vector<char>> g(n, std::vector<char>(n, 0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) g[i][j] = i != j && ge(dense[i], dense[j]);
    auto strictly = [&](size_t i, size_t j) { return g[i][j] && !g[j][i]; };

    auto add_row = [&](std::map<int, Rational> row, Rational rhs, std::string why) {
        ks.rows.push_back(std::move(row));
        ks.rhs.push_back(std::move(rhs));
        ks.why.push_back(std::move(why));
    };

    // Monotonicity, restricted to covering pairs: log(e_j) <= log(e_i) when e_i >= e_j.
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            if (!g[i][j]) continue;
            if (strictly(i, j)) {
                bool covered = false;
                for (size_t k = 0; k < n && !covered; ++k)
                    covered = k != i && k != j && strictly(i, k) && strictly(k, j);
                if (covered) continue;
            }
            add_row({{static_cast<int>(j), 1}, {static_cast<int>(i), -1}}, 0, "monotone");
        }
    }

    // log(e) >= floor(log2(min e)).
    for (size_t i = 0; i < n; ++i) {
        long lb = dense[i].b;
        for (int k : dense[i].d) lb += k;
        int k = floor_log2(lb);
        if (k >= 1) add_row({{static_cast<int>(i), -1}}, Rational(-k), "lower bound");
    }

    // 2 + log(e1) + log(e2) <= 2 log(e) for minimal e >= e1 + e2.
    for (size_t i = 0; i < n; ++i) {
        if (std::all_of(dense[i].d.begin(), dense[i].d.end(), [](int x) { return x == 0; }) && dense[i].b < 1) continue;
        for (size_t j = i; j < n; ++j) {
            Dense sum{dense[i].d, dense[i].b + dense[j].b};
            for (size_t k = 0; k < sum.d.size(); ++k) sum.d[k] += dense[j].d[k];
            std::vector<size_t> cands;
            for (size_t w = 0; w < n; ++w)
                if (ge(dense[w], sum)) cands.push_back(w);
            for (size_t w : cands) {
                bool minimal = std::none_of(cands.begin(), cands.end(), [&](size_t v) { return strictly(w, v); });
                if (!minimal) continue;
                std::map<int, Rational> row;
                row[static_cast<int>(i)] += 1;
                row[static_cast<int>(j)] += 1;
                row[static_cast<int>(w)] -= 2;
                add_row(std::move(row), -2, "log of sum");
            }
        }
    }
    return ks;
}

std::string to_string(const KnowledgeSystem& ks) {
    std::ostringstream os;
    os << "columns:\n";
    for (size_t c = 0; c < ks.columns.size(); ++c) os << "  x" << c << " = " << to_string(ks.columns[c]) << "\n";
    os << "rows (A x <= b):\n";
    for (size_t r = 0; r < ks.rows.size(); ++r) {
        os << "  [" << ks.why[r] << "]";
        for (const auto& [c, a] : ks.rows[r]) os << " " << (a < 0 ? "- " : "+ ") << to_string(Rational(abs(a))) << "*x" << c;
        os << " <= " << to_string(ks.rhs[r]) << "\n";
    }
    return os.str();
}

std::optional<Rational> exact_log2p(int b) {
    if (b <= 1) return Rational(0);
    int k = 0;
    int v = b;
    while (v % 2 == 0) {
        v /= 2;
        ++k;
    }
    if (v != 1) return std::nullopt;
    return Rational(k);
}

// ---------------------------------------------------------------------------
// Farkas

FarkasRecord farkas_reduce(const SymAnnotation& lhs, const SymAnnotation& rhs, const std::vector<std::string>& names,
                           const SizeFacts& sf, ConstraintSet& cs, const std::string& label) {
    if (lhs.m != rhs.m) throw ArityError("weakening between annotations of different arity");
    if (static_cast<int>(names.size()) != lhs.m) throw ArityError("weakening context does not match annotation arity");
    const int m = lhs.m;
    FarkasRecord rec;
    rec.label = label;
    rec.rank_p.assign(static_cast<size_t>(m), LinExpr());
    rec.rank_q.assign(static_cast<size_t>(m), LinExpr());

    std::map<Monomial, size_t> col;
    std::vector<Monomial> columns;
    auto column = [&](const Index& idx) {
        Monomial mono = monomial_of(idx, names);
        auto [it, fresh] = col.emplace(mono, columns.size());
        if (fresh) columns.push_back(mono);
        return it->second;
    };
    auto is_folded = [](const Index& idx) { return idx.is_constant() && exact_log2p(idx.b).has_value(); };
    for (const auto& idx : index_universe(m))
        if (!idx.is_rank && !idx.is_constant()) column(idx);
    for (const auto* ann : {&lhs, &rhs})
        for (const auto& [idx, e] : ann->coef)
            if (!idx.is_rank && !is_folded(idx)) column(idx);

    rec.p.assign(columns.size(), LinExpr());
    rec.q.assign(columns.size(), LinExpr());
    auto scatter = [&](const SymAnnotation& ann, std::vector<LinExpr>& cols, LinExpr& c, std::vector<LinExpr>& ranks) {
        for (const auto& [idx, e] : ann.coef) {
            if (idx.is_rank)
                ranks[static_cast<size_t>(idx.pos)] += e;
            else if (is_folded(idx))
                c += *exact_log2p(idx.b) * e;
            else
                cols[col.at(monomial_of(idx, names))] += e;
        }
    };
    scatter(lhs, rec.p, rec.c_p, rec.rank_p);
    scatter(rhs, rec.q, rec.c_q, rec.rank_q);

    rec.ks = build_knowledge(columns, sf);
    for (size_t r = 0; r < rec.ks.num_rows(); ++r) rec.f.push_back(cs.unknown(label + ".f" + std::to_string(r)));

    std::vector<LinExpr> atf(columns.size());
    LinExpr fb;
    for (size_t r = 0; r < rec.ks.num_rows(); ++r) {
        for (const auto& [c, a] : rec.ks.rows[r]) atf[static_cast<size_t>(c)] += LinExpr::var(rec.f[r], a);
        if (rec.ks.rhs[r] != 0) fb += LinExpr::var(rec.f[r], rec.ks.rhs[r]);
    }
    auto emit_le = [&](const LinExpr& a, const LinExpr& b, const std::string& what) {
        LinExpr d = a - b;
        if (d.is_constant() && d.constant <= 0) return;
        cs.add(std::move(d), Rel::Le, label + ": " + what);
    };
    for (size_t c = 0; c < columns.size(); ++c) emit_le(rec.p[c], atf[c] + rec.q[c], "farkas " + to_string(columns[c]));
    emit_le(fb + rec.c_p, rec.c_q, "farkas constant");
    for (int i = 0; i < m; ++i)
        emit_le(rec.rank_p[static_cast<size_t>(i)], rec.rank_q[static_cast<size_t>(i)], "rank " + names[static_cast<size_t>(i)]);
    return rec;
}

LinearObligation instantiate(const FarkasRecord& rec, const ConstraintSet& cs, const Assignment& a) {
    LinearObligation ob;
    for (const auto& e : rec.p) ob.p.push_back(evaluate(e, cs, a));
    for (const auto& e : rec.q) ob.q.push_back(evaluate(e, cs, a));
    ob.c_p = evaluate(rec.c_p, cs, a);
    ob.c_q = evaluate(rec.c_q, cs, a);
    return ob;
}

std::vector<Rational> instantiate_f(const FarkasRecord& rec, const ConstraintSet& cs, const Assignment& a) {
    std::vector<Rational> out;
    for (VarId v : rec.f) out.push_back(evaluate(LinExpr::var(v), cs, a));
    return out;
}

bool verify_farkas_sufficiency(const LinearObligation& ob, const KnowledgeSystem& ks, const std::vector<Rational>& f,
                               int samples, std::uint64_t seed, const SizeFacts& sf) {
    const size_t n = ks.columns.size();
    if (ob.p.size() != n || ob.q.size() != n) throw std::invalid_argument("obligation does not match the knowledge columns");
    if (f.size() != ks.num_rows()) throw InvalidCertificate("certificate has the wrong number of multipliers");
    std::vector<Rational> atf(n);
    Rational fb = 0;
    for (size_t r = 0; r < f.size(); ++r) {
        if (f[r] < 0) throw InvalidCertificate("negative multiplier f" + std::to_string(r));
        for (const auto& [c, a] : ks.rows[r]) atf[static_cast<size_t>(c)] += f[r] * a;
        fb += f[r] * ks.rhs[r];
    }
    for (size_t c = 0; c < n; ++c)
        if (ob.p[c] > atf[c] + ob.q[c]) throw InvalidCertificate("column " + to_string(ks.columns[c]) + " not covered");
    if (fb + ob.c_p > ob.c_q) throw InvalidCertificate("constant part not covered");

    std::vector<double> p(n), q(n);
    for (size_t c = 0; c < n; ++c) {
        p[c] = to_double(ob.p[c]);
        q[c] = to_double(ob.q[c]);
    }
    const double cp = to_double(ob.c_p), cq = to_double(ob.c_q);
    auto satisfies_ks = [&](const std::vector<double>& x) {
        for (size_t r = 0; r < ks.num_rows(); ++r) {
            double lhs = 0;
            for (const auto& [c, a] : ks.rows[r]) lhs += to_double(a) * x[static_cast<size_t>(c)];
            if (lhs > to_double(ks.rhs[r]) + 1e-9) return false;
        }
        return true;
    };
    auto holds = [&](const std::vector<double>& x) {
        double l = cp, r = cq;
        for (size_t c = 0; c < n; ++c) {
            l += p[c] * x[c];
            r += q[c] * x[c];
        }
        return l <= r + 1e-9;
    };

    std::set<std::string> atoms;
    for (const auto& mono : ks.columns)
        for (const auto& [x, k] : mono.coef)
            for (const auto& [atom, j] : sf.expand(x)) atoms.insert(atom);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> exp_dist(0, 12);
    std::uniform_real_distribution<double> box(0.0, 16.0);
    std::vector<double> x(n);
    for (int s = 0; s < samples; ++s) {
        if (s % 2 == 0) {
            std::map<std::string, double> size;
            for (const auto& atom : atoms)
                size[atom] = static_cast<double>(std::uniform_int_distribution<long>(1, 1L << exp_dist(rng))(rng));
            for (size_t c = 0; c < n; ++c) {
                double arg = ks.columns[c].b;
                for (const auto& [v, k] : ks.columns[c].coef)
                    for (const auto& [atom, j] : sf.expand(v)) arg += k * j * size[atom];
                x[c] = log2p(arg);
            }
            if (!satisfies_ks(x)) return false;  // the knowledge itself would be wrong
            if (!holds(x)) return false;
        } else {
            bool found = false;
            for (int attempt = 0; attempt < 64 && !found; ++attempt) {
                for (auto& xi : x) xi = box(rng);
                found = satisfies_ks(x);
            }
            if (found && !holds(x)) return false;
        }
    }
    return true;
}

}  // namespace logcost
