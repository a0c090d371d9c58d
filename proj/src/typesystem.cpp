#include "logcost/typesystem.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

namespace logcost {

// ---------------------------------------------------------------------------
// Tactics

TacticError::TacticError(const std::string& msg, int line)
    : std::runtime_error(line > 0 ? "tactics line " + std::to_string(line) + ": " + msg : msg), line(line) {}

Tactics parse_tactics(const std::string& text) {
    Tactics out;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    static const std::regex kLine(
        R"(^([A-Za-z_][A-Za-z0-9_']*)\s*@\s*(e(?:\.[0-9]+)*)\s*:\s*(weaken|shift|share|wvar)(?:\s+([A-Za-z_$][A-Za-z0-9_'$]*))?$)");
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto c = raw.find('#'); c != std::string::npos) raw.erase(c);
        if (auto c = raw.find("--"); c != std::string::npos) raw.erase(c);
        auto b = raw.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = raw.find_last_not_of(" \t\r");
        std::string line = raw.substr(b, e - b + 1);
        std::smatch m;
        if (!std::regex_match(line, m, kLine))
            throw TacticError("expected `fn @ path : weaken | shift | share v | wvar v`", line_no);
        Directive d;
        d.fn = m[1];
        d.path = path_from_string(m[2]);
        d.line = line_no;
        const std::string kind = m[3];
        d.kind = kind == "weaken" ? Directive::Kind::Weaken
                 : kind == "shift" ? Directive::Kind::Shift
                 : kind == "share" ? Directive::Kind::Share
                                   : Directive::Kind::WVar;
        bool needs_var = d.kind == Directive::Kind::Share || d.kind == Directive::Kind::WVar;
        if (needs_var != m[4].matched)
            throw TacticError(needs_var ? kind + " needs a variable" : kind + " takes no variable", line_no);
        d.var = m[4];
        out.directives.push_back(std::move(d));
    }
    return out;
}

void resolve_tactics(const Tactics& t, const Program& p) {
    for (const auto& d : t.directives) {
        const FunDef* def = p.find(d.fn);
        if (!def) throw TacticError("no function named " + d.fn, d.line);
        if (!node_at(def->body, d.path))
            throw TacticError("path " + path_to_string(d.path) + " does not exist in " + d.fn, d.line);
    }
}

// ---------------------------------------------------------------------------
// Symbolic annotations

std::string index_key(const Index& idx) {
    if (idx.is_rank) return "r" + std::to_string(idx.pos + 1);
    std::string s = "l";
    for (size_t i = 0; i < idx.a.size(); ++i) s += (i ? "-" : "") + std::to_string(idx.a[i]);
    return s + "b" + std::to_string(idx.b);
}

LinExpr coef_at(const SymAnnotation& q, const Index& idx) {
    const LinExpr* e = q.get(idx);
    return e ? *e : LinExpr();
}

SymAnnotation fresh_annotation(ConstraintSet& cs, const std::string& prefix, int m) {
    SymAnnotation q;
    q.m = m;
    for (const auto& idx : index_universe(m)) q.coef[idx] = LinExpr::var(cs.unknown(prefix + "." + index_key(idx)));
    return q;
}

SymAnnotation literal_annotation(const Annotation& q) {
    SymAnnotation out;
    out.m = q.m;
    for (const auto& [idx, c] : q.coef)
        if (c != 0) out.coef[idx] = LinExpr(c);
    return out;
}

SymAnnotation permute(const SymAnnotation& q, const std::vector<int>& perm) {
    if (static_cast<int>(perm.size()) != q.m) throw ArityError("permutation does not match annotation arity");
    SymAnnotation out;
    out.m = q.m;
    for (const auto& [idx, e] : q.coef) out.coef[permute_index(idx, perm)] += e;
    return out;
}

SymAnnotation drop_last(const SymAnnotation& q) {
    if (q.m < 1) throw ArityError("nothing to drop from an empty context");
    SymAnnotation out;
    out.m = q.m - 1;
    for (const auto& [idx, e] : q.coef) {
        if (idx.is_rank) {
            if (idx.pos < out.m) out.coef[idx] += e;
        } else if (idx.a.back() == 0) {
            Index r = Index::log(std::vector<int>(idx.a.begin(), idx.a.end() - 1), idx.b);
            if (!r.is_constant() || r.b != 0) out.coef[r] += e;
        }
    }
    return out;
}

SymAnnotation share_last(const SymAnnotation& q) {
    SymAnnotation out;
    out.m = q.m - 1;
    for (const auto& [idx, e] : q.coef) out.coef[share_index(idx, q.m)] += e;
    return out;
}

Annotation instantiate(const SymAnnotation& q, const ConstraintSet& cs, const Assignment& a) {
    Annotation out;
    out.m = q.m;
    for (const auto& [idx, e] : q.coef) {
        Rational v = evaluate(e, cs, a);
        if (v != 0) out.coef[idx] = v;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Branches

DerivationError::DerivationError(const std::string& msg, const Path& path)
    : std::runtime_error("at " + path_to_string(path) + ": " + msg), path(path) {}

namespace {

void collect_branches(const ExprPtr& e, Path path, BranchChoice cur, std::vector<BranchChoice>& out) {
    switch (e->kind) {
    case Expr::Kind::Let:
        path.push_back(1);
        collect_branches(e->kids[1], path, cur, out);
        return;
    case Expr::Kind::If:
    case Expr::Kind::Match:
        for (int k : {1, 2}) {
            if (!e->kids[static_cast<size_t>(k)]) continue;
            BranchChoice next = cur;
            next[path] = k;
            Path p = path;
            p.push_back(k);
            collect_branches(e->kids[static_cast<size_t>(k)], p, next, out);
        }
        return;
    default:
        out.push_back(std::move(cur));
    }
}

}  // namespace

std::vector<BranchChoice> enumerate_branches(const ExprPtr& body) {
    std::vector<BranchChoice> out;
    collect_branches(body, {}, {}, out);
    return out;
}

std::string branch_label(const BranchChoice& b) {
    if (b.empty()) return "body";
    std::string s;
    for (const auto& [p, k] : b) {
        if (!s.empty()) s += " ";
        s += path_to_string(p) + ":" + std::to_string(k);
    }
    return s;
}

}  // namespace logcost
