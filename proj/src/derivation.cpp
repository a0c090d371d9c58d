// Rule-by-rule constraint generation and the per-function driver.

#include "logcost/typesystem.hpp"

#include <algorithm>
#include <functional>
#include <unordered_set>

namespace logcost {

namespace {

// ---------------------------------------------------------------------------
// Signatures

struct PairRef {
    SymAnnotation pre, post;
};

struct SigEntry {
    int arity = 0;      // tree parameters
    int res_arity = 1;  // 1 for a tree result, 0 otherwise
    std::optional<std::pair<Annotation, Annotation>> costed;  // literal, else indeterminate
    bool check_costed = true;
    std::vector<std::pair<Annotation, Annotation>> cf;  // literal; empty means indeterminate
};

using SigTable = std::map<std::string, SigEntry>;

Annotation fit_arity(Annotation q, int m, const std::string& what) {
    if (q.coef.empty()) {
        q.m = m;
        return q;
    }
    if (q.m != m) throw ArityError(what + " has arity " + std::to_string(q.m) + ", expected " + std::to_string(m));
    return q;
}

SigTable make_sig_table(const Program& p, const CoefFile& coefs) {
    SigTable t;
    for (size_t i = 0; i < p.defs.size(); ++i) {
        const auto& def = p.defs[i];
        const auto& sig = p.signatures.at(i);
        SigEntry e;
        for (const auto& ty : sig.params) e.arity += ty.is_tree() ? 1 : 0;
        e.res_arity = sig.result.is_tree() ? 1 : 0;
        auto it = coefs.find(def.name);
        if (it != coefs.end()) {
            const auto& fc = it->second;
            if (fc.costed) {
                e.costed = std::make_pair(fit_arity(fc.costed->first, e.arity, def.name + " costed annotation"),
                                          fit_arity(fc.costed->second, e.res_arity, def.name + " costed result"));
            } else if (!fc.cost_free.empty()) {
                e.check_costed = false;
            }
            for (const auto& [pre, post] : fc.cost_free)
                e.cf.emplace_back(fit_arity(pre, e.arity, def.name + " cost-free annotation"),
                                  fit_arity(post, e.res_arity, def.name + " cost-free result"));
        }
        t.emplace(def.name, std::move(e));
    }
    for (const auto& [name, fc] : coefs)
        if (!p.find(name)) throw ArityError("annotation given for unknown function " + name);
    return t;
}

PairRef costed_pair(ConstraintSet& cs, const std::string& f, const SigEntry& e) {
    if (e.costed) return {literal_annotation(e.costed->first), literal_annotation(e.costed->second)};
    return {fresh_annotation(cs, "sig." + f + ".c.pre", e.arity), fresh_annotation(cs, "sig." + f + ".c.post", e.res_arity)};
}

PairRef indeterminate_cf(ConstraintSet& cs, const std::string& f, const SigEntry& e) {
    return {fresh_annotation(cs, "sig." + f + ".cf.pre", e.arity),
            fresh_annotation(cs, "sig." + f + ".cf.post", e.res_arity)};
}

// ---------------------------------------------------------------------------
// Helpers

bool trivially_holds(const LinExpr& e, Rel rel) {
    if (!e.is_constant()) return false;
    return rel == Rel::Eq ? e.constant == 0 : rel == Rel::Le ? e.constant <= 0 : e.constant >= 0;
}

bool literally_zero(const LinExpr& e) { return e.is_zero(); }

ExprPtr rename_free(const ExprPtr& e, const std::string& from, const std::string& to) {
    if (!e) return e;
    auto copy = std::make_shared<Expr>(*e);
    switch (e->kind) {
    case Expr::Kind::Var:
        if (e->name == from) copy->name = to;
        return copy;
    case Expr::Kind::Let:
        copy->kids[0] = rename_free(e->kids[0], from, to);
        if (e->name != from) copy->kids[1] = rename_free(e->kids[1], from, to);
        return copy;
    case Expr::Kind::Match:
        copy->kids[0] = rename_free(e->kids[0], from, to);
        copy->kids[1] = rename_free(e->kids[1], from, to);
        if (std::find(e->binders.begin(), e->binders.end(), from) == e->binders.end())
            copy->kids[2] = rename_free(e->kids[2], from, to);
        return copy;
    default:
        for (auto& k : copy->kids) k = rename_free(k, from, to);
        return copy;
    }
}

using Env = std::map<std::string, bool>;  // variable -> is tree

enum class ModeKind { Costed, CostFree, Family };

struct Mode {
    ModeKind kind;
    std::string prefix;
};

bool nonzero(const std::vector<int>& v) {
    return std::any_of(v.begin(), v.end(), [](int z) { return z != 0; });
}

// ---------------------------------------------------------------------------
// Rules

class Deriver {
public:
    Deriver(const FunDef& def, const Tactics& tactics, const SigTable& sigs, const DeriveOptions& opts,
            BranchSystem& out, std::set<std::string>& callees)
        : def_(def), tactics_(tactics), sigs_(sigs), opts_(opts), out_(out), cs_(out.cs), callees_(callees) {}

    void judge(const ExprPtr& body, std::vector<std::string> ctx, const SymAnnotation& q, const SymAnnotation& qp,
               const Mode& mode, const Env& env) {
        derive(body, {}, std::move(ctx), q, qp, mode, true, env);
    }

private:
    const FunDef& def_;
    const Tactics& tactics_;
    const SigTable& sigs_;
    const DeriveOptions& opts_;
    BranchSystem& out_;
    ConstraintSet& cs_;
    std::set<std::string>& callees_;
    int fresh_names_ = 0;

    static std::string where(const Mode& mode, const Path& path) { return mode.prefix + "." + path_to_string(path); }

    VarId unknown(const Mode& mode, const Path& path, const std::string& role) {
        return cs_.unknown(where(mode, path) + "." + role);
    }

    void emit(LinExpr e, Rel rel, const Mode& mode, const Path& path, const std::string& what) {
        if (trivially_holds(e, rel)) return;
        cs_.add(std::move(e), rel, where(mode, path) + " " + what);
    }

    /** a(idx) >= b(idx) wherever b may be nonzero. */
    void ge_all(const SymAnnotation& a, const SymAnnotation& b, const Mode& mode, const Path& path,
                const std::string& what) {
        for (const auto& [idx, e] : b.coef) {
            if (literally_zero(e)) continue;
            emit(coef_at(a, idx) - e, Rel::Ge, mode, path, what + " " + index_key(idx));
        }
    }

    // -- contexts -------------------------------------------------------------

    static std::set<std::string> free_trees(const ExprPtr& e, const Env& env) {
        std::set<std::string> out;
        for (const auto& v : free_vars(e)) {
            auto it = env.find(v);
            if (it != env.end() && it->second) out.insert(v);
        }
        return out;
    }

    static int position(const std::vector<std::string>& ctx, const std::string& v) {
        auto it = std::find(ctx.begin(), ctx.end(), v);
        return it == ctx.end() ? -1 : static_cast<int>(it - ctx.begin());
    }

    /** Reorders ctx and q to exactly `order`, a permutation of ctx. */
    static void arrange(std::vector<std::string>& ctx, SymAnnotation& q, const std::vector<std::string>& order) {
        std::vector<int> perm;
        for (const auto& v : order) perm.push_back(position(ctx, v));
        q = permute(q, perm);
        ctx = order;
    }

    static void move_last(std::vector<std::string>& ctx, SymAnnotation& q, const std::string& v) {
        std::vector<std::string> order;
        for (const auto& x : ctx)
            if (x != v) order.push_back(x);
        order.push_back(v);
        arrange(ctx, q, order);
    }

    static void drop(std::vector<std::string>& ctx, SymAnnotation& q, const std::string& v) {
        move_last(ctx, q, v);
        q = drop_last(q);
        ctx.pop_back();
    }

    static void auto_drop(const ExprPtr& e, std::vector<std::string>& ctx, SymAnnotation& q, const Env& env) {
        auto live = free_trees(e, env);
        std::vector<std::string> dead;
        for (const auto& v : ctx)
            if (!live.count(v)) dead.push_back(v);
        for (const auto& v : dead) drop(ctx, q, v);
    }

    static void require_in_ctx(const std::vector<std::string>& ctx, const std::set<std::string>& needed,
                               const Path& path) {
        for (const auto& v : needed)
            if (position(ctx, v) < 0) throw DerivationError("tree variable " + v + " is not in the typing context", path);
    }

    // -- structural directives ---------------------------------------------

    void apply_directives(ExprPtr& e, const Path& path, std::vector<std::string>& ctx, SymAnnotation& q,
                          SymAnnotation& qp, const Mode& mode, Env& env) {
        const auto& ds = tactics_.directives;
        int nth = 0;
        for (size_t i = 0; i < ds.size(); ++i) {
            const auto& d = ds[i];
            if (d.fn != def_.name || d.path != path) continue;
            out_.directives_used.insert(static_cast<int>(i));
            std::string tag = "d" + std::to_string(nth++);
            switch (d.kind) {
            case Directive::Kind::Weaken: weaken(path, ctx, q, qp, mode, tag); break;
            case Directive::Kind::Shift: shift(path, q, qp, mode, tag); break;
            case Directive::Kind::WVar:
                if (position(ctx, d.var) < 0)
                    throw DerivationError("wvar " + d.var + ": not a tree variable of the context", path);
                drop(ctx, q, d.var);
                break;
            case Directive::Kind::Share: share(e, path, ctx, q, mode, env, d.var, tag); break;
            }
        }
    }

    void weaken(const Path& path, const std::vector<std::string>& ctx, SymAnnotation& q, SymAnnotation& qp,
                const Mode& mode, const std::string& tag) {
        const std::string base = where(mode, path) + "." + tag;
        SymAnnotation p = fresh_annotation(cs_, base + ".wP", q.m);
        SymAnnotation pp = fresh_annotation(cs_, base + ".wPr", qp.m);
        SizeFacts sf = size_facts(def_, path);
        out_.weakenings.push_back(farkas_reduce(p, q, ctx, sf, cs_, base + ".pre"));
        std::vector<std::string> res_names;
        if (qp.m == 1) res_names.push_back("$result");
        out_.weakenings.push_back(farkas_reduce(qp, pp, res_names, {}, cs_, base + ".post"));
        q = std::move(p);
        qp = std::move(pp);
    }

    void shift(const Path& path, SymAnnotation& q, SymAnnotation& qp, const Mode& mode, const std::string& tag) {
        LinExpr k = LinExpr::var(cs_.unknown(where(mode, path) + "." + tag + ".K"));
        Index cq = Index::constant(q.m, 2), cqp = Index::constant(qp.m, 2);
        q.coef[cq] -= k;
        qp.coef[cqp] -= k;
        emit(coef_at(q, cq), Rel::Ge, mode, path, "shift pre");
        emit(coef_at(qp, cqp), Rel::Ge, mode, path, "shift post");
    }

    void share(ExprPtr& e, const Path& path, std::vector<std::string>& ctx, SymAnnotation& q, const Mode& mode,
               Env& env, const std::string& v, const std::string& tag) {
        if (position(ctx, v) < 0) throw DerivationError("share " + v + ": not a tree variable of the context", path);
        std::string copy = v + "'" + std::to_string(++fresh_names_);
        ExprPtr renamed;
        switch (e->kind) {
        case Expr::Kind::Let: {
            bool in2 = free_vars(e->kids[1]).count(v) && e->name != v;
            if (!free_vars(e->kids[0]).count(v) || !in2) {
                out_.notes.push_back("share " + v + " at " + path_to_string(path) + " has nothing to split");
                return;
            }
            auto c = std::make_shared<Expr>(*e);
            c->kids[0] = rename_free(e->kids[0], v, copy);
            renamed = c;
            break;
        }
        case Expr::Kind::Node:
        case Expr::Kind::App:
        case Expr::Kind::Cmp: {
            int count = 0;
            for (const auto& k : e->kids) count += k->is_var() && k->name == v ? 1 : 0;
            if (count < 2) {
                out_.notes.push_back("share " + v + " at " + path_to_string(path) + " has nothing to split");
                return;
            }
            auto c = std::make_shared<Expr>(*e);
            for (auto& k : c->kids)
                if (k->is_var() && k->name == v) {
                    auto kv = std::make_shared<Expr>(*k);
                    kv->name = copy;
                    k = kv;
                    break;
                }
            renamed = c;
            break;
        }
        default: throw DerivationError("share needs a let, node, comparison or application", path);
        }
        move_last(ctx, q, v);
        ctx.back() = copy;
        ctx.push_back(v);
        SymAnnotation s = fresh_annotation(cs_, where(mode, path) + "." + tag + ".S", q.m + 1);
        ge_all(q, share_last(s), mode, path, "share");
        q = std::move(s);
        env[copy] = true;
        e = renamed;
    }

    // -- syntax-directed rules ----------------------------------------------

    void derive(ExprPtr e, const Path& path, std::vector<std::string> ctx, SymAnnotation q, SymAnnotation qp,
                const Mode& mode, bool spine, Env env) {
        out_.visited.insert(path_to_string(path));
        auto_drop(e, ctx, q, env);
        apply_directives(e, path, ctx, q, qp, mode, env);
        auto_drop(e, ctx, q, env);

        switch (e->kind) {
        case Expr::Kind::Var:
            require_in_ctx(ctx, free_trees(e, env), path);
            ge_all(q, qp, mode, path, "var");
            return;
        case Expr::Kind::True:
        case Expr::Kind::False:
        case Expr::Kind::Cmp:
            require_in_ctx(ctx, free_trees(e, env), path);
            for (const auto& [idx, c] : qp.coef) {
                if (literally_zero(c)) continue;
                if (idx.is_rank) throw DerivationError("a boolean result has no rank", path);
                emit(coef_at(q, Index::constant(q.m, idx.b)) - c, Rel::Ge, mode, path, "cmp " + index_key(idx));
            }
            return;
        case Expr::Kind::Leaf: {
            std::map<int, LinExpr> need;
            for (const auto& [idx, c] : qp.coef) {
                if (idx.is_rank) {
                    need[2] += c;
                } else if (int v = idx.a[0] + idx.b; v >= 2) {
                    need[v] += c;
                }
            }
            for (const auto& [v, c] : need)
                emit(coef_at(q, Index::log({}, v)) - c, Rel::Ge, mode, path, "leaf " + std::to_string(v));
            return;
        }
        case Expr::Kind::Node: derive_node(e, path, ctx, q, qp, mode); return;
        case Expr::Kind::If:
            for (int k : {1, 2}) {
                if (spine && out_.choice.at(path) != k) continue;
                Path p = path;
                p.push_back(k);
                derive(e->kids[static_cast<size_t>(k)], p, ctx, q, qp, mode, spine, env);
            }
            return;
        case Expr::Kind::Match: derive_match(e, path, ctx, q, qp, mode, spine, env); return;
        case Expr::Kind::Let: derive_let(e, path, ctx, q, qp, mode, spine, env); return;
        case Expr::Kind::App: derive_app(e, path, ctx, q, qp, mode, env); return;
        }
    }

    void derive_node(const ExprPtr& e, const Path& path, std::vector<std::string> ctx, SymAnnotation q,
                     const SymAnnotation& qp, const Mode& mode) {
        const std::string& l = e->kids[0]->name;
        const std::string& r = e->kids[2]->name;
        if (l == r) throw DerivationError("node uses " + l + " twice; add `share " + l + "` here", path);
        require_in_ctx(ctx, {l, r}, path);
        arrange(ctx, q, {l, r});
        LinExpr star = coef_at(qp, Index::rank(0));
        if (!literally_zero(star)) {
            emit(coef_at(q, Index::rank(0)) - star, Rel::Ge, mode, path, "node rank left");
            emit(coef_at(q, Index::rank(1)) - star, Rel::Ge, mode, path, "node rank right");
            emit(coef_at(q, Index::log({1, 0}, 0)) - star, Rel::Ge, mode, path, "node log left");
            emit(coef_at(q, Index::log({0, 1}, 0)) - star, Rel::Ge, mode, path, "node log right");
        }
        for (const auto& [idx, c] : qp.coef) {
            if (idx.is_rank || literally_zero(c)) continue;
            emit(coef_at(q, Index::log({idx.a[0], idx.a[0]}, idx.b)) - c, Rel::Ge, mode, path, "node " + index_key(idx));
        }
    }

    void derive_match(const ExprPtr& e, const Path& path, std::vector<std::string> ctx, SymAnnotation q,
                      const SymAnnotation& qp, const Mode& mode, bool spine, const Env& env) {
        const std::string x = e->kids[0]->name;
        require_in_ctx(ctx, {x}, path);
        move_last(ctx, q, x);
        const int m = q.m - 1;
        const std::vector<std::string> gamma(ctx.begin(), ctx.end() - 1);
        const LinExpr qx = coef_at(q, Index::rank(m));

        if (e->kids[1] && (!spine || out_.choice.at(path) == 1)) {
            SymAnnotation l;
            l.m = m;
            for (const auto& [idx, c] : q.coef) {
                if (idx.is_rank) {
                    if (idx.pos < m) l.coef[idx] += c;
                    continue;
                }
                Index t = Index::log(std::vector<int>(idx.a.begin(), idx.a.end() - 1), idx.a.back() + idx.b);
                if (t.is_constant() && t.b < 2) continue;  // log'(0) = log'(1) = 0
                l.coef[t] += c;
            }
            l.coef[Index::constant(m, 2)] += qx;  // rk(leaf) = 1
            Env env1 = env;
            env1.erase(x);
            Path p = path;
            p.push_back(1);
            derive(e->kids[1], p, gamma, l, qp, mode, spine, env1);
        }
        if (!spine || out_.choice.at(path) == 2) {
            const auto& bs = e->binders;
            if (bs[0] == bs[2]) throw DerivationError("match binds " + bs[0] + " twice", path);
            Env env2 = env;
            std::vector<std::string> g2 = gamma;
            for (auto& v : g2)
                if (v == bs[0] || v == bs[1] || v == bs[2]) {
                    v = "#shadow" + std::to_string(++fresh_names_);
                    env2[v] = true;
                }
            SymAnnotation r;
            r.m = m + 2;
            for (const auto& [idx, c] : q.coef) {
                if (idx.is_rank) {
                    if (idx.pos < m) {
                        r.coef[idx] += c;
                    } else {
                        r.coef[Index::rank(m)] += c;
                        r.coef[Index::rank(m + 1)] += c;
                    }
                    continue;
                }
                std::vector<int> a(idx.a.begin(), idx.a.end() - 1);
                a.push_back(idx.a.back());
                a.push_back(idx.a.back());
                r.coef[Index::log(std::move(a), idx.b)] += c;
            }
            std::vector<int> one_l(static_cast<size_t>(m + 2), 0), one_r(static_cast<size_t>(m + 2), 0);
            one_l[static_cast<size_t>(m)] = 1;
            one_r[static_cast<size_t>(m + 1)] = 1;
            r.coef[Index::log(one_l, 0)] += qx;
            r.coef[Index::log(one_r, 0)] += qx;
            g2.push_back(bs[0]);
            g2.push_back(bs[2]);
            env2.erase(x);
            env2[bs[0]] = true;
            env2[bs[1]] = false;
            env2[bs[2]] = true;
            Path p = path;
            p.push_back(2);
            derive(e->kids[2], p, g2, r, qp, mode, spine, env2);
        }
    }

    void derive_let(const ExprPtr& e, const Path& path, std::vector<std::string> ctx, SymAnnotation q,
                    const SymAnnotation& qp, const Mode& mode, bool spine, const Env& env) {
        const ExprPtr& e1 = e->kids[0];
        const ExprPtr& e2 = e->kids[1];
        const std::string& x = e->name;
        const bool tree = e1->type && e1->type->is_tree();
        auto f1 = free_trees(e1, env);
        Env env2 = env;
        env2[x] = tree;
        auto f2 = free_trees(e2, env2);
        f2.erase(x);
        for (const auto& v : f1)
            if (f2.count(v))
                throw DerivationError(v + " is used on both sides of the let; add `share " + v + "` here", path);
        std::set<std::string> all = f1;
        all.insert(f2.begin(), f2.end());
        require_in_ctx(ctx, all, path);
        std::vector<std::string> gamma, delta;
        for (const auto& v : ctx) (f1.count(v) ? gamma : delta).push_back(v);
        std::vector<std::string> order = gamma;
        order.insert(order.end(), delta.begin(), delta.end());
        arrange(ctx, q, order);
        const int m = static_cast<int>(gamma.size());
        const int k = static_cast<int>(delta.size());
        Path p1 = path, p2 = path;
        p1.push_back(0);
        p2.push_back(1);

        auto split = [&](const Index& idx) {
            return std::make_pair(std::vector<int>(idx.a.begin(), idx.a.begin() + m),
                                  std::vector<int>(idx.a.begin() + m, idx.a.end()));
        };

        SymAnnotation p, r;
        p.m = m;
        if (!tree) {
            // let:gen, with constants split between the two premises.
            r.m = k;
            for (const auto& [idx, c] : q.coef) {
                if (idx.is_rank) {
                    (idx.pos < m ? p.coef[idx] : r.coef[Index::rank(idx.pos - m)]) += c;
                    continue;
                }
                auto [a, b] = split(idx);
                if (!nonzero(b) && nonzero(a)) {
                    p.coef[Index::log(a, idx.b)] += c;
                } else if (!nonzero(b)) {
                    if (literally_zero(c)) continue;
                    LinExpr s = LinExpr::var(unknown(mode, path, "split" + std::to_string(idx.b)));
                    p.coef[Index::constant(m, idx.b)] += s;
                    r.coef[Index::constant(k, idx.b)] += c - s;
                    emit(c - s, Rel::Ge, mode, path, "let constant split");
                } else if (!nonzero(a)) {
                    r.coef[Index::log(b, idx.b)] += c;
                }
            }
            SymAnnotation none;
            none.m = 0;
            derive(e1, p1, gamma, p, none, mode, false, env);
            derive(e2, p2, delta, r, qp, mode, spine, env2);
            return;
        }

        // let:tree:cf
        r.m = k + 1;
        std::map<std::vector<int>, std::vector<std::pair<Index, LinExpr>>> groups;
        for (const auto& [idx, c] : q.coef) {
            if (idx.is_rank) {
                (idx.pos < m ? p.coef[idx] : r.coef[Index::rank(idx.pos - m)]) += c;
                continue;
            }
            auto [a, b] = split(idx);
            if (!nonzero(b)) {
                p.coef[Index::log(a, idx.b)] += c;
            } else if (!nonzero(a) && idx.b == 0) {
                b.push_back(0);
                r.coef[Index::log(b, 0)] += c;
            } else {
                groups[b].emplace_back(Index::log(a, idx.b), c);
            }
        }
        SymAnnotation pp = fresh_annotation(cs_, where(mode, path) + ".P'", 1);
        for (const auto& [idx, c] : pp.coef) {
            if (idx.is_rank) {
                r.coef[Index::rank(k)] += c;
            } else {
                std::vector<int> a(static_cast<size_t>(k), 0);
                a.push_back(idx.a[0]);
                r.coef[Index::log(a, idx.b)] += c;
            }
        }

        std::vector<std::pair<std::string, PairRef>> families;
        for (const auto& [b, entries] : groups) {
            if (std::all_of(entries.begin(), entries.end(), [](const auto& en) { return literally_zero(en.second); }))
                continue;
            std::string bkey;
            for (int z : b) bkey += std::to_string(z);
            SymAnnotation taken;
            taken.m = m;
            for (int d = 0; d <= 1; ++d) {
                for (int ee = 0; ee <= 2; ++ee) {
                    if (d == 0 && ee == 0) continue;
                    const std::string fkey = bkey + "-" + std::to_string(d) + std::to_string(ee);
                    const std::string base = where(mode, path) + ".F" + fkey;
                    PairRef fam;
                    fam.pre.m = m;
                    fam.post.m = 1;
                    LinExpr sum;
                    for (const auto& [idx, c] : entries) {
                        LinExpr u = LinExpr::var(cs_.unknown(base + ".p." + index_key(idx)));
                        fam.pre.coef[idx] = u;
                        taken.coef[idx] += u;
                        sum += u;
                    }
                    const Index res = Index::log({d}, ee);
                    LinExpr po = LinExpr::var(cs_.unknown(base + ".p'." + index_key(res)));
                    fam.post.coef[res] = po;
                    std::vector<int> ra = b;
                    ra.push_back(d);
                    r.coef[Index::log(ra, ee)] += po;
                    emit(sum - po, Rel::Ge, mode, path, "family " + fkey + " sum");
                    for (const auto& [idx, u] : fam.pre.coef) {
                        const std::string sname = base + ".sel." + index_key(idx);
                        VarId s = cs_.unknown(sname);
                        out_.selectors.emplace_back(sname, s);
                        LinExpr sv = LinExpr::var(s);
                        emit(sv - LinExpr(1), Rel::Le, mode, path, "selector bound");
                        emit(u - opts_.big_m * sv, Rel::Le, mode, path, "family " + fkey + " p <= M s");
                        emit(po - u - opts_.big_m * (LinExpr(1) - sv), Rel::Le, mode, path,
                             "family " + fkey + " p' <= p + M(1 - s)");
                    }
                    families.emplace_back(fkey, std::move(fam));
                }
            }
            for (const auto& [idx, c] : entries)
                emit(c - coef_at(taken, idx), Rel::Ge, mode, path, "family split " + bkey + " " + index_key(idx));
        }

        derive(e1, p1, gamma, p, pp, mode, false, env);
        for (auto& [fkey, fam] : families) {
            Mode fm{ModeKind::Family, where(mode, path) + ".F" + fkey};
            derive(e1, p1, gamma, fam.pre, fam.post, fm, false, env);
        }
        std::vector<std::string> rctx = delta;
        rctx.push_back(x);
        derive(e2, p2, rctx, r, qp, mode, spine, env2);
    }

    void derive_app(const ExprPtr& e, const Path& path, std::vector<std::string> ctx, SymAnnotation q,
                    const SymAnnotation& qp, const Mode& mode, const Env& env) {
        const std::string& f = e->name;
        auto sit = sigs_.find(f);
        if (sit == sigs_.end()) throw DerivationError("call to unknown function " + f, path);
        const SigEntry& sig = sit->second;
        std::vector<std::string> args;
        for (const auto& a : e->kids) {
            auto it = env.find(a->name);
            if (it == env.end() || !it->second) continue;
            if (std::find(args.begin(), args.end(), a->name) != args.end())
                throw DerivationError(f + " receives " + a->name + " twice; add `share " + a->name + "` here", path);
            args.push_back(a->name);
        }
        if (static_cast<int>(args.size()) != sig.arity) throw DerivationError("tree arity mismatch calling " + f, path);
        require_in_ctx(ctx, std::set<std::string>(args.begin(), args.end()), path);
        arrange(ctx, q, args);

        // The call is typed by sum_j K_j * (pre_j, post_j) over the admissible signature pairs.
        struct Term {
            PairRef pair;
            LinExpr k;
            bool activity = false;
        };
        std::vector<Term> terms;
        const bool costed = mode.kind == ModeKind::Costed;
        if (costed && (sig.costed || sig.check_costed)) {
            if (!sig.costed) callees_.insert(f);
            terms.push_back({costed_pair(cs_, f, sig), LinExpr(1)});
        }
        if (!sig.cf.empty()) {
            for (size_t j = 0; j < sig.cf.size(); ++j) {
                LinExpr kj = LinExpr::var(unknown(mode, path, "K" + std::to_string(j)));
                terms.push_back({{literal_annotation(sig.cf[j].first), literal_annotation(sig.cf[j].second)}, kj});
            }
        } else if (!costed) {
            callees_.insert(f);
            PairRef c = indeterminate_cf(cs_, f, sig);
            if (mode.kind == ModeKind::CostFree) {
                terms.push_back({c, LinExpr(1)});
            } else {
                // Inside a cost-free family: either the indeterminate pair or the empty one.
                const std::string aname = where(mode, path) + ".act";
                VarId a = cs_.unknown(aname);
                out_.selectors.emplace_back(aname, a);
                emit(LinExpr::var(a) - LinExpr(1), Rel::Le, mode, path, "activity bound");
                terms.push_back({c, LinExpr::var(a), true});
            }
        }

        const LinExpr s = LinExpr::var(unknown(mode, path, "shift"));
        const Index cpre = Index::constant(q.m, 2), cpost = Index::constant(qp.m, 2);
        auto scaled = [](const LinExpr& k, const LinExpr& c) {
            if (k.is_constant()) return k.constant * c;
            if (c.is_constant()) return c.constant * k;
            throw std::logic_error("bilinear signature scaling");
        };
        const bool has_activity = std::any_of(terms.begin(), terms.end(), [](const Term& t) { return t.activity; });

        std::set<Index> pre_idx{cpre};
        for (const auto& t : terms)
            if (!t.activity)
                for (const auto& [idx, c] : t.pair.pre.coef) pre_idx.insert(idx);
        for (const auto& idx : pre_idx) {
            LinExpr need;
            for (const auto& t : terms)
                if (!t.activity) need += scaled(t.k, coef_at(t.pair.pre, idx));
            if (idx == cpre) {
                need += s;
                if (costed) need += LinExpr(1);
            }
            emit(coef_at(q, idx) - need, Rel::Ge, mode, path, "app " + f + " " + index_key(idx));
        }
        for (const auto& [idx, c] : qp.coef) {
            if (literally_zero(c)) continue;
            LinExpr have;
            for (const auto& t : terms)
                if (!t.activity) have += scaled(t.k, coef_at(t.pair.post, idx));
            if (idx == cpost) have += s;
            if (!has_activity) {
                emit(c - have, Rel::Le, mode, path, "app " + f + " result " + index_key(idx));
                continue;
            }
            for (const auto& t : terms) {
                if (!t.activity) continue;
                emit(c - have - coef_at(t.pair.post, idx), Rel::Le, mode, path, "app " + f + " result " + index_key(idx));
                emit(c - have - opts_.big_m * t.k, Rel::Le, mode, path, "app " + f + " inactive " + index_key(idx));
            }
        }
        for (const auto& t : terms) {
            if (!t.activity) continue;
            for (const auto& [idx, c] : t.pair.pre.coef) {
                LinExpr need = c - opts_.big_m * (LinExpr(1) - t.k);
                if (idx == cpre) need += s;
                emit(coef_at(q, idx) - need, Rel::Ge, mode, path, "app " + f + " active " + index_key(idx));
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Driver

std::string constraint_key(const ConstraintSet& cs, const Constraint& c) { return to_string(cs, c); }

void merge_unique(ConstraintSet& into, std::unordered_set<std::string>& seen, const ConstraintSet& from) {
    for (size_t i = 0; i < from.num_unknowns(); ++i) into.unknown(from.name(static_cast<VarId>(i)));
    for (const auto& c : from.constraints()) {
        if (!seen.insert(constraint_key(from, c)).second) continue;
        LinExpr e(c.lhs.constant);
        for (const auto& [v, k] : c.lhs.terms) e.terms[into.unknown(from.name(v))] = k;
        into.add(std::move(e), c.rel, c.origin);
    }
}

}  // namespace

const FunctionSystem* Derivation::find(const std::string& fn) const {
    for (const auto& f : functions)
        if (f.fn == fn) return &f;
    return nullptr;
}

ConstraintSet Derivation::joint_system(const std::string& fn) const {
    ConstraintSet out;
    std::unordered_set<std::string> seen;
    std::set<std::string> done;
    std::vector<std::string> work{fn};
    while (!work.empty()) {
        std::string g = work.back();
        work.pop_back();
        if (!done.insert(g).second) continue;
        const FunctionSystem* fs = find(g);
        if (!fs) throw std::invalid_argument("no derivation for " + g);
        for (const auto& b : fs->branches)
            if (b.selected) merge_unique(out, seen, b.cs);
        for (const auto& c : fs->callees) work.push_back(c);
    }
    return out;
}

ConstraintSet Derivation::selected_system() const {
    ConstraintSet out;
    std::unordered_set<std::string> seen;
    for (const auto& f : functions)
        for (const auto& b : f.branches)
            if (b.selected) merge_unique(out, seen, b.cs);
    return out;
}

Derivation derive(const Program& p, const CoefFile& coefs, const Tactics& tactics, const DeriveOptions& opts) {
    if (p.signatures.size() != p.defs.size()) throw std::invalid_argument("derive needs a simply typed program");
    resolve_tactics(tactics, p);
    const SigTable sigs = make_sig_table(p, coefs);
    Derivation out;
    std::set<int> used;
    for (size_t i = 0; i < p.defs.size(); ++i) {
        const FunDef& def = p.defs[i];
        const FunSignature& fsig = p.signatures[i];
        const SigEntry& se = sigs.at(def.name);
        FunctionSystem fs;
        fs.fn = def.name;
        Env env;
        std::vector<std::string> ctx;
        for (size_t j = 0; j < def.params.size(); ++j) {
            env[def.params[j]] = fsig.params[j].is_tree();
            if (fsig.params[j].is_tree()) ctx.push_back(def.params[j]);
        }
        for (auto& choice : enumerate_branches(def.body)) {
            BranchSystem b;
            b.fn = def.name;
            b.choice = std::move(choice);
            b.label = branch_label(b.choice);
            try {
                Deriver d(def, tactics, sigs, opts, b, fs.callees);
                if (se.check_costed) {
                    PairRef pr = costed_pair(b.cs, def.name, se);
                    b.signatures.push_back({"costed", pr.pre, pr.post});
                    d.judge(def.body, ctx, pr.pre, pr.post, Mode{ModeKind::Costed, def.name + ".c"}, env);
                }
                if (se.cf.empty()) {
                    PairRef c = indeterminate_cf(b.cs, def.name, se);
                    b.signatures.push_back({"cost-free", c.pre, c.post});
                    d.judge(def.body, ctx, c.pre, c.post, Mode{ModeKind::CostFree, def.name + ".cf"}, env);
                } else {
                    for (size_t j = 0; j < se.cf.size(); ++j) {
                        SymAnnotation pre = literal_annotation(se.cf[j].first);
                        SymAnnotation post = literal_annotation(se.cf[j].second);
                        b.signatures.push_back({"cost-free#" + std::to_string(j), pre, post});
                        d.judge(def.body, ctx, pre, post,
                                Mode{ModeKind::CostFree, def.name + ".cf" + std::to_string(j)}, env);
                    }
                }
            } catch (const DerivationError& ex) {
                b.error = ex.what();
            }
            used.insert(b.directives_used.begin(), b.directives_used.end());
            fs.branches.push_back(std::move(b));
        }
        fs.callees.erase(def.name);

        // A directive on a node that only one branch passes through selects that branch.
        bool any = false;
        for (const auto& d : tactics.directives) {
            if (d.fn != def.name) continue;
            const std::string ps = path_to_string(d.path);
            BranchSystem* only = nullptr;
            int count = 0;
            for (auto& b : fs.branches)
                if (b.visited.count(ps)) {
                    ++count;
                    only = &b;
                }
            if (count == 1) {
                only->selected = true;
                any = true;
            }
        }
        if (!any)
            for (auto& b : fs.branches) b.selected = true;
        out.functions.push_back(std::move(fs));
    }
    // A broken branch stops early; if it heads for the directive, its own error is the better report.
    auto excused = [&](const Directive& d) {
        const FunctionSystem* fs = out.find(d.fn);
        if (!fs) return false;
        for (const auto& b : fs->branches) {
            if (!b.error) continue;
            bool heads = true;
            for (const auto& [at, kid] : b.choice)
                if (at.size() < d.path.size() && std::equal(at.begin(), at.end(), d.path.begin()) &&
                    d.path[at.size()] != kid)
                    heads = false;
            if (heads) return true;
        }
        return false;
    };
    for (size_t i = 0; i < tactics.directives.size(); ++i)
        if (!used.count(static_cast<int>(i)) && !excused(tactics.directives[i]))
            throw TacticError("directive is never reached by a derivation", tactics.directives[i].line);
    return out;
}

ConstraintSet derive_constraints(const Program& p, const CoefFile& coefs, const Tactics& tactics,
                                 const DeriveOptions& opts) {
    Derivation d = derive(p, coefs, tactics, opts);
    ConstraintSet out;
    std::unordered_set<std::string> seen;
    for (const auto& f : d.functions)
        for (const auto& b : f.branches) merge_unique(out, seen, b.cs);
    return out;
}

}  // namespace logcost
