#include "logcost/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_set>

namespace logcost {

SimpleType SimpleType::product(std::vector<SimpleType> elems) {
    if (elems.empty()) throw std::invalid_argument("product type needs at least one component");
    return {Kind::Product, std::move(elems)};
}

std::string to_string(const SimpleType& t) {
    switch (t.kind) {
    case SimpleType::Kind::Bool: return "Bool";
    case SimpleType::Kind::Base: return "Base";
    case SimpleType::Kind::Tree: return "Tree";
    case SimpleType::Kind::Product: {
        std::string s;
        for (size_t i = 0; i < t.elems.size(); ++i) {
            if (i) s += " * ";
            s += to_string(t.elems[i]);
        }
        return s;
    }
    }
    return "?";
}

const char* to_string(CmpOp op) {
    switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Gt: return ">";
    case CmpOp::Eq: return "=";
    }
    return "?";
}

namespace {

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

std::string loc_prefix(SourceLoc loc) {
    return std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": ";
}

}  // namespace

ExprPtr Expr::var(std::string name, SourceLoc loc) {
    Expr e;
    e.kind = Kind::Var;
    e.name = std::move(name);
    e.loc = loc;
    return make(std::move(e));
}

ExprPtr Expr::boolean(bool value, SourceLoc loc) {
    Expr e;
    e.kind = value ? Kind::True : Kind::False;
    e.loc = loc;
    return make(std::move(e));
}

ExprPtr Expr::leaf(SourceLoc loc) {
    Expr e;
    e.kind = Kind::Leaf;
    e.loc = loc;
    return make(std::move(e));
}

ExprPtr Expr::node(ExprPtr l, ExprPtr d, ExprPtr r, SourceLoc loc) {
    Expr e;
    e.kind = Kind::Node;
    e.kids = {std::move(l), std::move(d), std::move(r)};
    e.loc = loc;
    return make(std::move(e));
}

ExprPtr Expr::cmp(CmpOp op, ExprPtr lhs, ExprPtr rhs, SourceLoc loc) {
    Expr e;
    e.kind = Kind::Cmp;
    e.op = op;
    e.kids = {std::move(lhs), std::move(rhs)};
    e.loc = loc;
    return make(std::move(e));
}

ExprPtr Expr::ite(ExprPtr cond, ExprPtr then_e, ExprPtr else_e, SourceLoc loc) {
    Expr e;
    e.kind = Kind::If;
    e.kids = {std::move(cond), std::move(then_e), std::move(else_e)};
    e.loc = loc;
    return make(std::move(e));
}

ExprPtr Expr::match(ExprPtr scrut, ExprPtr leaf_branch, std::vector<std::string> binders,
                    ExprPtr node_branch, SourceLoc loc) {
    Expr e;
    e.kind = Kind::Match;
    e.kids = {std::move(scrut), std::move(leaf_branch), std::move(node_branch)};
    e.binders = std::move(binders);
    e.loc = loc;
    return make(std::move(e));
}

ExprPtr Expr::let(std::string x, ExprPtr bound, ExprPtr body, SourceLoc loc) {
    Expr e;
    e.kind = Kind::Let;
    e.name = std::move(x);
    e.kids = {std::move(bound), std::move(body)};
    e.loc = loc;
    return make(std::move(e));
}

ExprPtr Expr::app(std::string f, std::vector<ExprPtr> args, SourceLoc loc) {
    Expr e;
    e.kind = Kind::App;
    e.name = std::move(f);
    e.kids = std::move(args);
    e.loc = loc;
    return make(std::move(e));
}

std::string path_to_string(const Path& p) {
    std::string s = "e";
    for (int i : p) s += "." + std::to_string(i);
    return s;
}

Path path_from_string(const std::string& s) {
    if (s.empty() || s[0] != 'e') throw std::invalid_argument("path must start with 'e': " + s);
    Path p;
    size_t i = 1;
    while (i < s.size()) {
        if (s[i] != '.') throw std::invalid_argument("bad path: " + s);
        size_t j = i + 1;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (j == i + 1) throw std::invalid_argument("bad path: " + s);
        p.push_back(std::stoi(s.substr(i + 1, j - i - 1)));
        i = j;
    }
    return p;
}

const FunDef* Program::find(const std::string& name) const {
    for (const auto& d : defs)
        if (d.name == name) return &d;
    return nullptr;
}

SyntaxError::SyntaxError(const std::string& msg, SourceLoc loc)
    : std::runtime_error(loc_prefix(loc) + msg), loc(loc) {}

TypeError::TypeError(const std::string& msg, SourceLoc loc)
    : std::runtime_error(loc_prefix(loc) + msg), loc(loc) {}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Ident, Kw, Sym, End };

struct Token {
    Tok kind;
    std::string text;
    SourceLoc loc;
    bool first_on_line = false;
};

const std::unordered_set<std::string> kKeywords = {"match", "with", "if",   "then", "else",
                                                   "let",   "in",   "leaf", "true", "false"};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '\''; }

std::vector<Token> lex(const std::string& text) {
    std::vector<Token> out;
    int line = 1, col = 1;
    bool line_start = true;
    size_t i = 0;
    auto advance = [&](size_t n) {
        for (size_t k = 0; k < n; ++k) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
                line_start = true;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < text.size()) {
        unsigned char c = text[i];
        if (c == '\n' || std::isspace(c)) {
            advance(1);
            continue;
        }
        if (c == '-' && i + 1 < text.size() && text[i + 1] == '-') {
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.loc = {line, col};
        t.first_on_line = line_start;
        line_start = false;
        if (ident_start(c)) {
            size_t j = i;
            while (j < text.size() && ident_char(text[j])) ++j;
            t.text = text.substr(i, j - i);
            t.kind = kKeywords.count(t.text) ? Tok::Kw : Tok::Ident;
            advance(j - i);
        } else if (c == '-' && i + 1 < text.size() && text[i + 1] == '>') {
            t.kind = Tok::Sym;
            t.text = "->";
            advance(2);
        } else if (text.compare(i, 2, "\xC3\x97") == 0) {  // U+00D7 multiplication sign
            t.kind = Tok::Sym;
            t.text = "*";
            advance(2);
        } else if (text.compare(i, 3, "\xE2\x86\x92") == 0) {  // U+2192 rightwards arrow
            t.kind = Tok::Sym;
            t.text = "->";
            advance(3);
        } else if (std::string("(),|=<>:*").find(static_cast<char>(c)) != std::string::npos) {
            t.kind = Tok::Sym;
            t.text = std::string(1, static_cast<char>(c));
            advance(1);
        } else {
            throw SyntaxError(std::string("unexpected character '") + static_cast<char>(c) + "'", t.loc);
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::End;
    end.loc = {line, col};
    out.push_back(end);
    return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) { find_heads(); }

    Program run() {
        Program p;
        std::map<std::string, std::pair<std::vector<SimpleType>, SimpleType>> decls;
        while (peek().kind != Tok::End) {
            if (!heads_.count(pos_))
                throw SyntaxError("expected a definition 'f x1 ... xn = e' or a declaration 'f : T -> T'",
                                  peek().loc);
            if (toks_[pos_ + 1].kind == Tok::Sym && toks_[pos_ + 1].text == ":") {
                auto name = next().text;
                next();
                auto [params, result] = parse_decl();
                if (decls.count(name)) throw SyntaxError("duplicate declaration of " + name, toks_[pos_ - 1].loc);
                decls[name] = {params, result};
                continue;
            }
            FunDef d;
            d.loc = peek().loc;
            d.name = next().text;
            while (peek().kind == Tok::Ident) d.params.push_back(next().text);
            expect_sym("=");
            in_body_ = true;
            d.body = parse_expr();
            in_body_ = false;
            if (toks_[pos_].kind != Tok::End && !at_head())
                throw SyntaxError("unexpected " + describe(toks_[pos_]) + " after definition body", toks_[pos_].loc);
            if (p.find(d.name)) throw SyntaxError("duplicate definition of " + d.name, d.loc);
            std::set<std::string> seen;
            for (const auto& x : d.params)
                if (!seen.insert(x).second) throw SyntaxError("repeated parameter " + x + " in " + d.name, d.loc);
            p.defs.push_back(std::move(d));
        }
        for (auto& [name, sig] : decls) {
            auto it = std::find_if(p.defs.begin(), p.defs.end(), [&](const FunDef& d) { return d.name == name; });
            if (it == p.defs.end()) throw SyntaxError("declaration without definition: " + name, {});
            if (it->params.size() != sig.first.size())
                throw SyntaxError("declared arity of " + name + " differs from its definition", it->loc);
            it->declared_params = sig.first;
            it->declared_result = sig.second;
        }
        return p;
    }

private:
    std::vector<Token> toks_;
    size_t pos_ = 0;
    std::set<size_t> heads_;
    std::set<std::string> fun_names_;

    // A definition head is "f x1 .. xn =" and a declaration head is "f :",
    // both starting a line and fully contained in it.
    void find_heads() {
        for (size_t i = 0; i < toks_.size(); ++i) {
            const Token& t = toks_[i];
            if (t.kind != Tok::Ident || !t.first_on_line) continue;
            size_t j = i + 1;
            if (toks_[j].kind == Tok::Sym && toks_[j].text == ":" && toks_[j].loc.line == t.loc.line) {
                heads_.insert(i);
                continue;
            }
            while (toks_[j].kind == Tok::Ident && toks_[j].loc.line == t.loc.line) ++j;
            if (toks_[j].kind == Tok::Sym && toks_[j].text == "=" && toks_[j].loc.line == t.loc.line) {
                heads_.insert(i);
                fun_names_.insert(t.text);
            }
        }
    }

    const Token& peek() const {
        if (in_body_ && heads_.count(pos_)) return toks_.back();  // a body ends at the next head
        return toks_[pos_];
    }
    bool at_head() const { return heads_.count(pos_) > 0; }
    bool in_body_ = false;
    const Token& next() {
        const Token& t = toks_[pos_];
        if (t.kind != Tok::End) ++pos_;
        return t;
    }
    bool is_sym(const char* s) const { return peek().kind == Tok::Sym && peek().text == s; }
    bool is_kw(const char* s) const { return peek().kind == Tok::Kw && peek().text == s; }
    void expect_sym(const char* s) {
        if (!is_sym(s)) throw SyntaxError(std::string("expected '") + s + "', found " + describe(peek()), peek().loc);
        next();
    }
    void expect_kw(const char* s) {
        if (!is_kw(s)) throw SyntaxError(std::string("expected '") + s + "', found " + describe(peek()), peek().loc);
        next();
    }
    std::string expect_ident() {
        if (peek().kind != Tok::Ident) throw SyntaxError("expected identifier, found " + describe(peek()), peek().loc);
        return next().text;
    }
    static std::string describe(const Token& t) {
        if (t.kind == Tok::End) return "end of definition";
        return "'" + t.text + "'";
    }

    SimpleType parse_type_atom() {
        auto name = expect_ident();
        if (name == "Base" || name == "B") return SimpleType::base();
        if (name == "Tree" || name == "T") return SimpleType::tree();
        if (name == "Bool") return SimpleType::boolean();
        throw SyntaxError("unknown type " + name, toks_[pos_ - 1].loc);
    }

    std::pair<std::vector<SimpleType>, SimpleType> parse_decl() {
        std::vector<SimpleType> params;
        auto first = parse_type_atom();
        std::vector<SimpleType> parts{first};
        while (is_sym("*")) {
            next();
            parts.push_back(parse_type_atom());
        }
        if (is_sym("->")) {
            next();
            params = parts;
            return {params, parse_type_atom()};
        }
        // nullary function: "f : T"
        if (parts.size() != 1) throw SyntaxError("expected '->'", peek().loc);
        return {{}, parts[0]};
    }

    ExprPtr parse_expr() {
        auto loc = peek().loc;
        if (is_kw("if")) {
            next();
            auto c = parse_expr();
            expect_kw("then");
            auto t = parse_expr();
            expect_kw("else");
            auto e = parse_expr();
            return Expr::ite(c, t, e, loc);
        }
        if (is_kw("let")) {
            next();
            auto x = expect_ident();
            expect_sym("=");
            auto e1 = parse_expr();
            expect_kw("in");
            auto e2 = parse_expr();
            return Expr::let(x, e1, e2, loc);
        }
        if (is_kw("match")) {
            next();
            auto scrut = parse_expr();
            expect_kw("with");
            ExprPtr leaf_b, node_b;
            std::vector<std::string> binders;
            bool first = true;
            while (is_sym("|") || (first && (is_kw("leaf") || is_sym("(")))) {
                if (is_sym("|")) next();
                first = false;
                auto bloc = peek().loc;
                if (is_kw("leaf")) {
                    next();
                    expect_sym("->");
                    if (leaf_b) throw SyntaxError("duplicate leaf branch", bloc);
                    leaf_b = parse_expr();
                } else {
                    expect_sym("(");
                    auto x1 = expect_ident();
                    expect_sym(",");
                    auto x2 = expect_ident();
                    expect_sym(",");
                    auto x3 = expect_ident();
                    expect_sym(")");
                    expect_sym("->");
                    if (node_b) throw SyntaxError("duplicate node branch", bloc);
                    binders = {x1, x2, x3};
                    node_b = parse_expr();
                }
            }
            if (!node_b) throw SyntaxError("match needs a node branch '(x1, x2, x3) -> e'", loc);
            return Expr::match(scrut, leaf_b, binders, node_b, loc);
        }
        auto lhs = parse_app();
        if (is_sym("<") || is_sym(">") || is_sym("=")) {
            auto op = next().text;
            auto rhs = parse_app();
            CmpOp o = op == "<" ? CmpOp::Lt : op == ">" ? CmpOp::Gt : CmpOp::Eq;
            return Expr::cmp(o, lhs, rhs, loc);
        }
        return lhs;
    }

    bool atom_start() const {
        if (at_head()) return false;
        const Token& t = peek();
        if (t.kind == Tok::Ident) return true;
        if (t.kind == Tok::Kw) return t.text == "leaf" || t.text == "true" || t.text == "false";
        return t.kind == Tok::Sym && t.text == "(";
    }

    ExprPtr parse_app() {
        auto loc = peek().loc;
        if (peek().kind == Tok::Ident && fun_names_.count(peek().text)) {
            auto f = next().text;
            std::vector<ExprPtr> args;
            while (atom_start()) args.push_back(parse_atom());
            return Expr::app(f, std::move(args), loc);
        }
        return parse_atom();
    }

    ExprPtr parse_atom() {
        auto loc = peek().loc;
        if (peek().kind == Tok::Ident) return Expr::var(next().text, loc);
        if (is_kw("leaf")) {
            next();
            return Expr::leaf(loc);
        }
        if (is_kw("true") || is_kw("false")) return Expr::boolean(next().text == "true", loc);
        if (is_sym("(")) {
            next();
            auto a = parse_expr();
            if (is_sym(")")) {
                next();
                return a;
            }
            expect_sym(",");
            auto b = parse_expr();
            expect_sym(",");
            auto c = parse_expr();
            expect_sym(")");
            return Expr::node(a, b, c, loc);
        }
        throw SyntaxError("expected an expression, found " + describe(peek()), loc);
    }
};

}  // namespace

Program parse_program(const std::string& text) { return Parser(lex(text)).run(); }

// ---------------------------------------------------------------------------
// free variables

namespace {

void collect_free(const ExprPtr& e, std::set<std::string>& out, std::multiset<std::string>& bound) {
    if (!e) return;
    switch (e->kind) {
    case Expr::Kind::Var:
        if (!bound.count(e->name)) out.insert(e->name);
        return;
    case Expr::Kind::Let:
        collect_free(e->kids[0], out, bound);
        {
            auto it = bound.insert(e->name);
            collect_free(e->kids[1], out, bound);
            bound.erase(it);
        }
        return;
    case Expr::Kind::Match: {
        collect_free(e->kids[0], out, bound);
        collect_free(e->kids[1], out, bound);
        std::vector<std::multiset<std::string>::iterator> its;
        for (const auto& b : e->binders) its.push_back(bound.insert(b));
        collect_free(e->kids[2], out, bound);
        for (auto it : its) bound.erase(it);
        return;
    }
    default:
        for (const auto& k : e->kids) collect_free(k, out, bound);
    }
}

}  // namespace

std::set<std::string> free_vars(const ExprPtr& e) {
    std::set<std::string> out;
    std::multiset<std::string> bound;
    collect_free(e, out, bound);
    return out;
}

// ---------------------------------------------------------------------------
// Normalisation

namespace {

struct Binding {
    std::string name;
    ExprPtr bound;
};

class Normalizer {
public:
    explicit Normalizer(int& counter) : counter_(counter) {}

    ExprPtr tail(const ExprPtr& e) {
        std::vector<Binding> bs;
        auto t = flatten(e, bs);
        return wrap(bs, t);
    }

private:
    int& counter_;

    std::string fresh() { return "$t" + std::to_string(counter_++); }

    static ExprPtr wrap(const std::vector<Binding>& bs, ExprPtr body) {
        for (auto it = bs.rbegin(); it != bs.rend(); ++it) body = Expr::let(it->name, it->bound, body);
        return body;
    }

    static bool is_fresh(const std::string& n) { return !n.empty() && n[0] == '$'; }

    // Variable in argument position; pushes the bindings needed to compute it.
    std::string atom(const ExprPtr& e, std::vector<Binding>& bs) {
        if (e->is_var()) return e->name;
        auto t = flatten(e, bs);
        auto x = fresh();
        bs.push_back({x, t});
        return x;
    }

    // Returns an expression whose direct arguments are variables; fresh
    // bindings produced on the way are hoisted into bs. Lets binding fresh
    // names are hoisted too, so nested tuples become flat let chains.
    ExprPtr flatten(const ExprPtr& e, std::vector<Binding>& bs) {
        switch (e->kind) {
        case Expr::Kind::Var:
        case Expr::Kind::True:
        case Expr::Kind::False:
        case Expr::Kind::Leaf: return e;
        case Expr::Kind::Node: {
            auto l = atom(e->kids[0], bs);
            auto d = atom(e->kids[1], bs);
            auto r = atom(e->kids[2], bs);
            return Expr::node(Expr::var(l), Expr::var(d), Expr::var(r), e->loc);
        }
        case Expr::Kind::Cmp: {
            auto l = atom(e->kids[0], bs);
            auto r = atom(e->kids[1], bs);
            return Expr::cmp(e->op, Expr::var(l), Expr::var(r), e->loc);
        }
        case Expr::Kind::App: {
            std::vector<ExprPtr> args;
            for (const auto& a : e->kids) args.push_back(Expr::var(atom(a, bs)));
            return Expr::app(e->name, std::move(args), e->loc);
        }
        case Expr::Kind::If: {
            auto c = atom(e->kids[0], bs);
            return Expr::ite(Expr::var(c), tail(e->kids[1]), tail(e->kids[2]), e->loc);
        }
        case Expr::Kind::Match: {
            auto x = atom(e->kids[0], bs);
            ExprPtr leaf_b = e->kids[1] ? e->kids[1] : Expr::leaf(e->loc);
            ExprPtr node_b = e->kids[2];
            const auto& bnd = e->binders;
            // The leaf branch cannot see the scrutinee in the typing rule; rebind it.
            if (free_vars(leaf_b).count(x)) leaf_b = Expr::let(x, Expr::leaf(e->loc), leaf_b, e->loc);
            if (std::find(bnd.begin(), bnd.end(), x) == bnd.end() && free_vars(node_b).count(x))
                node_b = Expr::let(x, Expr::node(Expr::var(bnd[0]), Expr::var(bnd[1]), Expr::var(bnd[2])), node_b,
                                   e->loc);
            return Expr::match(Expr::var(x), tail(leaf_b), bnd, tail(node_b), e->loc);
        }
        case Expr::Kind::Let: {
            auto bound = flatten(e->kids[0], bs);
            if (is_fresh(e->name)) {
                bs.push_back({e->name, bound});
                return flatten(e->kids[1], bs);
            }
            return Expr::let(e->name, bound, tail(e->kids[1]), e->loc);
        }
        }
        return e;
    }
};

}  // namespace

ExprPtr normalize_expr(const ExprPtr& e, int& counter) { return Normalizer(counter).tail(e); }

Program normalize(const Program& p) {
    Program out = p;
    for (auto& d : out.defs) {
        // Continue numbering after fresh names already present so re-normalising is stable.
        int counter = 0;
        std::function<void(const ExprPtr&)> scan = [&](const ExprPtr& e) {
            if (!e) return;
            auto bump = [&](const std::string& n) {
                if (n.size() > 2 && n[0] == '$' && n[1] == 't') counter = std::max(counter, std::stoi(n.substr(2)) + 1);
            };
            if (e->kind == Expr::Kind::Let || e->kind == Expr::Kind::Var) bump(e->name);
            for (const auto& k : e->kids) scan(k);
        };
        scan(d.body);
        d.body = normalize_expr(d.body, counter);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Simple type inference

namespace {

class Unifier {
public:
    int fresh() {
        parent_.push_back(static_cast<int>(parent_.size()));
        kind_.push_back(std::nullopt);
        return static_cast<int>(parent_.size()) - 1;
    }
    int known(SimpleType::Kind k) {
        int v = fresh();
        kind_[v] = k;
        return v;
    }
    int find(int v) {
        while (parent_[v] != v) v = parent_[v] = parent_[parent_[v]];
        return v;
    }
    void unify(int a, int b, SourceLoc loc, const std::string& what) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (kind_[a] && kind_[b] && *kind_[a] != *kind_[b])
            throw TypeError("type mismatch in " + what + ": " + name(*kind_[a]) + " vs " + name(*kind_[b]), loc);
        if (!kind_[a]) kind_[a] = kind_[b];
        parent_[b] = a;
    }
    void require(int v, SimpleType::Kind k, SourceLoc loc, const std::string& what) {
        unify(v, known(k), loc, what);
    }
    SimpleType resolve(int v) {
        auto k = kind_[find(v)];
        // Unconstrained variables can only be compared or passed around; Base is a safe default.
        return {k.value_or(SimpleType::Kind::Base), {}};
    }
    static std::string name(SimpleType::Kind k) { return to_string(SimpleType{k, {}}); }

private:
    std::vector<int> parent_;
    std::vector<std::optional<SimpleType::Kind>> kind_;
};

struct FunVars {
    std::vector<int> params;
    int result;
};

class Typer {
public:
    explicit Typer(const Program& p) : prog_(p) {
        for (const auto& d : p.defs) {
            FunVars fv;
            for (size_t i = 0; i < d.params.size(); ++i) {
                int v = u_.fresh();
                if (d.declared_params) u_.require(v, (*d.declared_params)[i].kind, d.loc, "declared parameter");
                fv.params.push_back(v);
            }
            fv.result = u_.fresh();
            if (d.declared_result) u_.require(fv.result, d.declared_result->kind, d.loc, "declared result");
            funs_[d.name] = fv;
        }
    }

    Program run() {
        std::vector<std::pair<const FunDef*, int>> roots;
        for (const auto& d : prog_.defs) {
            std::map<std::string, int> env;
            for (size_t i = 0; i < d.params.size(); ++i) env[d.params[i]] = funs_[d.name].params[i];
            int t = infer(d.body, env);
            u_.unify(t, funs_[d.name].result, d.body->loc, "result of " + d.name);
        }
        Program out = prog_;
        out.signatures.clear();
        for (auto& d : out.defs) {
            FunSignature sig;
            for (int v : funs_[d.name].params) sig.params.push_back(u_.resolve(v));
            sig.result = u_.resolve(funs_[d.name].result);
            if (sig.result.kind == SimpleType::Kind::Product)
                throw TypeError("function results must not be products", d.loc);
            out.signatures.push_back(sig);
            d.body = annotate(d.body);
        }
        return out;
    }

private:
    const Program& prog_;
    Unifier u_;
    std::map<std::string, FunVars> funs_;
    std::map<const Expr*, int> types_;

    int infer(const ExprPtr& e, std::map<std::string, int>& env) {
        int t = infer_inner(e, env);
        types_[e.get()] = t;
        return t;
    }

    int lookup(const std::map<std::string, int>& env, const ExprPtr& e) {
        auto it = env.find(e->name);
        if (it == env.end()) throw TypeError("unbound variable " + e->name, e->loc);
        return it->second;
    }

    int infer_inner(const ExprPtr& e, std::map<std::string, int>& env) {
        using K = SimpleType::Kind;
        switch (e->kind) {
        case Expr::Kind::Var: return lookup(env, e);
        case Expr::Kind::True:
        case Expr::Kind::False: return u_.known(K::Bool);
        case Expr::Kind::Leaf: return u_.known(K::Tree);
        case Expr::Kind::Node: {
            u_.require(infer(e->kids[0], env), K::Tree, e->kids[0]->loc, "left subtree");
            u_.require(infer(e->kids[1], env), K::Base, e->kids[1]->loc, "node label");
            u_.require(infer(e->kids[2], env), K::Tree, e->kids[2]->loc, "right subtree");
            return u_.known(K::Tree);
        }
        case Expr::Kind::Cmp: {
            int a = infer(e->kids[0], env), b = infer(e->kids[1], env);
            u_.unify(a, b, e->loc, "comparison operands");
            if (e->op != CmpOp::Eq) u_.require(a, K::Base, e->loc, "ordering comparison");
            return u_.known(K::Bool);
        }
        case Expr::Kind::If: {
            u_.require(infer(e->kids[0], env), K::Bool, e->kids[0]->loc, "if condition");
            int a = infer(e->kids[1], env), b = infer(e->kids[2], env);
            u_.unify(a, b, e->loc, "if branches");
            return a;
        }
        case Expr::Kind::Match: {
            u_.require(infer(e->kids[0], env), K::Tree, e->kids[0]->loc, "match scrutinee");
            int r = u_.fresh();
            if (e->kids[1]) u_.unify(r, infer(e->kids[1], env), e->kids[1]->loc, "match branches");
            auto saved = env;
            env[e->binders[0]] = u_.known(K::Tree);
            env[e->binders[1]] = u_.known(K::Base);
            env[e->binders[2]] = u_.known(K::Tree);
            u_.unify(r, infer(e->kids[2], env), e->kids[2]->loc, "match branches");
            env = saved;
            return r;
        }
        case Expr::Kind::Let: {
            int t1 = infer(e->kids[0], env);
            auto saved = env;
            env[e->name] = t1;
            int t2 = infer(e->kids[1], env);
            env = saved;
            return t2;
        }
        case Expr::Kind::App: {
            auto it = funs_.find(e->name);
            if (it == funs_.end()) throw TypeError("call to undefined function " + e->name, e->loc);
            if (it->second.params.size() != e->kids.size())
                throw TypeError(e->name + " expects " + std::to_string(it->second.params.size()) + " arguments, got " +
                                    std::to_string(e->kids.size()),
                                e->loc);
            for (size_t i = 0; i < e->kids.size(); ++i)
                u_.unify(infer(e->kids[i], env), it->second.params[i], e->kids[i]->loc,
                         "argument " + std::to_string(i + 1) + " of " + e->name);
            return it->second.result;
        }
        }
        throw TypeError("unknown expression", e->loc);
    }

    ExprPtr annotate(const ExprPtr& e) {
        if (!e) return e;
        Expr copy = *e;
        copy.type = u_.resolve(types_.at(e.get()));
        for (auto& k : copy.kids) k = annotate(k);
        return make(std::move(copy));
    }
};

}  // namespace

Program simple_typecheck(const Program& p) {
    for (const auto& d : p.defs) {
        std::function<void(const ExprPtr&)> calls = [&](const ExprPtr& e) {
            if (!e) return;
            if (e->kind == Expr::Kind::App && !p.find(e->name))
                throw TypeError("call to undefined function " + e->name, e->loc);
            for (const auto& k : e->kids) calls(k);
        };
        calls(d.body);
    }
    return Typer(p).run();
}

// ---------------------------------------------------------------------------
// Structural equality, printing, lookup

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind || a->name != b->name || a->binders != b->binders || a->kids.size() != b->kids.size())
        return false;
    if (a->kind == Expr::Kind::Cmp && a->op != b->op) return false;
    for (size_t i = 0; i < a->kids.size(); ++i)
        if (!structurally_equal(a->kids[i], b->kids[i])) return false;
    return true;
}

bool structurally_equal(const Program& a, const Program& b) {
    if (a.defs.size() != b.defs.size()) return false;
    for (size_t i = 0; i < a.defs.size(); ++i) {
        if (a.defs[i].name != b.defs[i].name || a.defs[i].params != b.defs[i].params) return false;
        if (!structurally_equal(a.defs[i].body, b.defs[i].body)) return false;
    }
    return true;
}

namespace {

void print(const ExprPtr& e, std::ostream& os, int indent) {
    auto nl = [&](int ind) { os << "\n" << std::string(ind * 2, ' '); };
    switch (e->kind) {
    case Expr::Kind::Var: os << e->name; return;
    case Expr::Kind::True: os << "true"; return;
    case Expr::Kind::False: os << "false"; return;
    case Expr::Kind::Leaf: os << "leaf"; return;
    case Expr::Kind::Node:
        os << "(";
        print(e->kids[0], os, indent);
        os << ", ";
        print(e->kids[1], os, indent);
        os << ", ";
        print(e->kids[2], os, indent);
        os << ")";
        return;
    case Expr::Kind::Cmp:
        print(e->kids[0], os, indent);
        os << " " << to_string(e->op) << " ";
        print(e->kids[1], os, indent);
        return;
    case Expr::Kind::App:
        os << e->name;
        for (const auto& a : e->kids) {
            os << " ";
            bool paren = a->kind != Expr::Kind::Var && a->kind != Expr::Kind::Leaf && a->kind != Expr::Kind::Node &&
                         a->kind != Expr::Kind::True && a->kind != Expr::Kind::False;
            if (paren) os << "(";
            print(a, os, indent);
            if (paren) os << ")";
        }
        return;
    case Expr::Kind::If:
        os << "if ";
        print(e->kids[0], os, indent);
        os << " then";
        nl(indent + 1);
        print(e->kids[1], os, indent + 1);
        nl(indent);
        os << "else";
        nl(indent + 1);
        print(e->kids[2], os, indent + 1);
        return;
    case Expr::Kind::Match:
        os << "match ";
        print(e->kids[0], os, indent);
        os << " with";
        if (e->kids[1]) {
            nl(indent);
            os << "| leaf -> (";
            print(e->kids[1], os, indent + 1);
            os << ")";
        }
        nl(indent);
        os << "| (" << e->binders[0] << ", " << e->binders[1] << ", " << e->binders[2] << ") -> (";
        print(e->kids[2], os, indent + 1);
        os << ")";
        return;
    case Expr::Kind::Let:
        os << "let " << e->name << " = ";
        print(e->kids[0], os, indent + 1);
        os << " in";
        nl(indent);
        print(e->kids[1], os, indent);
        return;
    }
}

}  // namespace

std::string to_source(const ExprPtr& e) {
    std::ostringstream os;
    print(e, os, 1);
    return os.str();
}

std::string to_source(const Program& p) {
    std::ostringstream os;
    for (size_t i = 0; i < p.defs.size(); ++i) {
        const auto& d = p.defs[i];
        if (i) os << "\n";
        os << d.name;
        for (const auto& x : d.params) os << " " << x;
        os << " =\n  ";
        print(d.body, os, 1);
        os << "\n";
    }
    return os.str();
}

ExprPtr node_at(const ExprPtr& root, const Path& path) {
    ExprPtr cur = root;
    for (int i : path) {
        if (!cur || i < 0 || i >= static_cast<int>(cur->kids.size())) return nullptr;
        cur = cur->kids[i];
    }
    return cur;
}

}  // namespace logcost
