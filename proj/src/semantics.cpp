#include "logcost/semantics.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <optional>
#include <random>

namespace logcost {

Value Value::node(Value l, std::int64_t key, Value r) {
    if (!l.is_tree() || !r.is_tree()) throw EvalError("node children must be trees");
    Value v;
    v.kind_ = Kind::Node;
    std::uint64_t sz = l.size() + r.size();
    v.node_ = std::make_shared<const TreeNode>(TreeNode{std::move(l), key, std::move(r), sz});
    return v;
}

Value Value::base(std::int64_t x) {
    Value v;
    v.kind_ = Kind::Base;
    v.scalar_ = x;
    return v;
}

Value Value::boolean(bool b) {
    Value v;
    v.kind_ = Kind::Bool;
    v.scalar_ = b ? 1 : 0;
    return v;
}

const Value& Value::left() const {
    if (kind_ != Kind::Node) throw EvalError("left() of a non-node");
    return node_->left;
}

const Value& Value::right() const {
    if (kind_ != Kind::Node) throw EvalError("right() of a non-node");
    return node_->right;
}

std::int64_t Value::key() const {
    if (kind_ != Kind::Node) throw EvalError("key() of a non-node");
    return node_->key;
}

std::int64_t Value::as_base() const {
    if (kind_ != Kind::Base) throw EvalError("expected a base value");
    return scalar_;
}

bool Value::as_bool() const {
    if (kind_ != Kind::Bool) throw EvalError("expected a boolean");
    return scalar_ != 0;
}

std::uint64_t Value::size() const {
    if (kind_ == Kind::Leaf) return 1;
    if (kind_ == Kind::Node) return node_->size;
    throw EvalError("size of a non-tree");
}

bool Value::operator==(const Value& o) const {
    if (kind_ != o.kind_) return false;
    switch (kind_) {
    case Kind::Leaf: return true;
    case Kind::Base:
    case Kind::Bool: return scalar_ == o.scalar_;
    case Kind::Node:
        if (node_ == o.node_) return true;
        return node_->size == o.node_->size && node_->key == o.node_->key && node_->left == o.node_->left &&
               node_->right == o.node_->right;
    }
    return false;
}

namespace {

class Evaluator {
public:
    Evaluator(const Program& p, std::uint64_t fuel) : prog_(p), fuel_(fuel) {}

    EvalResult eval(Environment& env, const ExprPtr& e) {
        if (fuel_ == 0) throw Timeout();
        --fuel_;
        switch (e->kind) {
        case Expr::Kind::Var: return {lookup(env, e->name), 0};
        case Expr::Kind::True: return {Value::boolean(true), 0};
        case Expr::Kind::False: return {Value::boolean(false), 0};
        case Expr::Kind::Leaf: return {Value::leaf(), 0};
        case Expr::Kind::Node: {
            auto l = eval(env, e->kids[0]);
            auto d = eval(env, e->kids[1]);
            auto r = eval(env, e->kids[2]);
            return {Value::node(l.value, d.value.as_base(), r.value), l.cost + d.cost + r.cost};
        }
        case Expr::Kind::Cmp: {
            auto a = eval(env, e->kids[0]);
            auto b = eval(env, e->kids[1]);
            return {Value::boolean(compare(e->op, a.value, b.value)), a.cost + b.cost};
        }
        case Expr::Kind::If: {
            auto c = eval(env, e->kids[0]);
            auto r = eval(env, c.value.as_bool() ? e->kids[1] : e->kids[2]);
            return {r.value, c.cost + r.cost};
        }
        case Expr::Kind::Match: {
            auto s = eval(env, e->kids[0]);
            if (!s.value.is_tree()) throw EvalError("match on a non-tree value");
            if (s.value.kind() == Value::Kind::Leaf) {
                if (!e->kids[1]) throw EvalError("no leaf branch for a leaf scrutinee");
                auto r = eval(env, e->kids[1]);
                return {r.value, s.cost + r.cost};
            }
            // Binders shadow; the old bindings come back afterwards.
            std::vector<std::pair<std::string, std::optional<Value>>> saved;
            Value parts[3] = {s.value.left(), Value::base(s.value.key()), s.value.right()};
            for (int i = 0; i < 3; ++i) {
                const auto& x = e->binders[i];
                auto it = env.find(x);
                saved.emplace_back(x, it == env.end() ? std::nullopt : std::optional<Value>(it->second));
                env[x] = parts[i];
            }
            auto r = eval(env, e->kids[2]);
            for (auto it = saved.rbegin(); it != saved.rend(); ++it) restore(env, it->first, it->second);
            return {r.value, s.cost + r.cost};
        }
        case Expr::Kind::Let: {
            auto v1 = eval(env, e->kids[0]);
            auto it = env.find(e->name);
            std::optional<Value> old = it == env.end() ? std::nullopt : std::optional<Value>(it->second);
            env[e->name] = v1.value;
            auto v2 = eval(env, e->kids[1]);
            restore(env, e->name, old);
            return {v2.value, v1.cost + v2.cost};
        }
        case Expr::Kind::App: {
            std::uint64_t cost = 0;
            std::vector<Value> args;
            for (const auto& a : e->kids) {
                auto r = eval(env, a);
                cost += r.cost;
                args.push_back(r.value);
            }
            auto r = call(e->name, args);
            return {r.value, cost + r.cost};
        }
        }
        throw EvalError("unknown expression kind");
    }

    EvalResult call(const std::string& f, const std::vector<Value>& args) {
        const FunDef* d = prog_.find(f);
        if (!d) throw EvalError("undefined function " + f);
        if (d->params.size() != args.size()) throw EvalError("arity mismatch calling " + f);
        Environment env;
        for (size_t i = 0; i < args.size(); ++i) env[d->params[i]] = args[i];
        auto r = eval(env, d->body);
        return {r.value, r.cost + 1};
    }

private:
    const Program& prog_;
    std::uint64_t fuel_;

    static const Value& lookup(const Environment& env, const std::string& x) {
        auto it = env.find(x);
        if (it == env.end()) throw EvalError("unbound variable " + x);
        return it->second;
    }

    static void restore(Environment& env, const std::string& x, const std::optional<Value>& old) {
        if (old)
            env[x] = *old;
        else
            env.erase(x);
    }

    static bool compare(CmpOp op, const Value& a, const Value& b) {
        if (op == CmpOp::Eq) return a == b;
        auto x = a.as_base(), y = b.as_base();
        return op == CmpOp::Lt ? x < y : x > y;
    }
};

}  // namespace

EvalResult evaluate(const Environment& sigma, const ExprPtr& e, const Program& p, std::uint64_t fuel) {
    Environment env = sigma;
    return Evaluator(p, fuel).eval(env, e);
}

EvalResult run_function(const Program& p, const std::string& f, const std::vector<Value>& args, std::uint64_t fuel) {
    const FunDef* d = p.find(f);
    if (!d) throw EvalError("undefined function " + f);
    if (d->params.size() != args.size())
        throw EvalError(f + " expects " + std::to_string(d->params.size()) + " arguments, got " +
                        std::to_string(args.size()));
    if (p.signatures.size() == p.defs.size()) {
        const auto& sig = p.signatures[static_cast<size_t>(d - p.defs.data())];
        for (size_t i = 0; i < args.size(); ++i) {
            bool ok = sig.params[i].kind == SimpleType::Kind::Tree   ? args[i].is_tree()
                      : sig.params[i].kind == SimpleType::Kind::Bool ? args[i].kind() == Value::Kind::Bool
                                                                     : args[i].kind() == Value::Kind::Base;
            if (!ok)
                throw EvalError("argument " + std::to_string(i + 1) + " of " + f + " must be " +
                                to_string(sig.params[i]));
        }
    }
    return Evaluator(p, fuel).call(f, args);
}

namespace {

Value insert_bst(const Value& t, std::int64_t k) {
    if (t.kind() == Value::Kind::Leaf) return Value::node(Value::leaf(), k, Value::leaf());
    if (k < t.key()) return Value::node(insert_bst(t.left(), k), t.key(), t.right());
    return Value::node(t.left(), t.key(), insert_bst(t.right(), k));
}

}  // namespace

Value gen_random_search_tree(std::uint64_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("a tree has at least one leaf");
    std::mt19937_64 rng(seed);
    std::uint64_t keys = n - 1;
    // Distinct keys from a range twice as wide, so searches can also miss.
    std::vector<std::int64_t> pool(2 * keys + 1);
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(keys);
    Value t;
    for (auto k : pool) t = insert_bst(t, k);
    return t;
}

std::vector<std::int64_t> inorder_keys(const Value& t) {
    std::vector<std::int64_t> out;
    std::vector<const Value*> stack;
    const Value* cur = &t;
    while (cur->kind() == Value::Kind::Node || !stack.empty()) {
        while (cur->kind() == Value::Kind::Node) {
            stack.push_back(cur);
            cur = &cur->left();
        }
        cur = stack.back();
        stack.pop_back();
        out.push_back(cur->key());
        cur = &cur->right();
    }
    return out;
}

std::string to_string(const Value& v) {
    switch (v.kind()) {
    case Value::Kind::Leaf: return "leaf";
    case Value::Kind::Base: return std::to_string(v.as_base());
    case Value::Kind::Bool: return v.as_bool() ? "true" : "false";
    case Value::Kind::Node:
        return "(" + to_string(v.left()) + ", " + std::to_string(v.key()) + ", " + to_string(v.right()) + ")";
    }
    return "?";
}

namespace {

struct ValueParser {
    const std::string& s;
    size_t i = 0;

    void ws() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    [[noreturn]] void fail(const std::string& what) {
        throw std::invalid_argument("bad value literal at offset " + std::to_string(i) + ": " + what);
    }
    bool word(const char* w) {
        size_t n = std::char_traits<char>::length(w);
        if (s.compare(i, n, w) == 0 && (i + n == s.size() || !std::isalnum(static_cast<unsigned char>(s[i + n])))) {
            i += n;
            return true;
        }
        return false;
    }
    void expect(char c) {
        ws();
        if (i >= s.size() || s[i] != c) fail(std::string("expected '") + c + "'");
        ++i;
    }
    Value parse() {
        ws();
        if (word("leaf")) return Value::leaf();
        if (word("true")) return Value::boolean(true);
        if (word("false")) return Value::boolean(false);
        if (i < s.size() && s[i] == '(') {
            ++i;
            Value l = parse();
            expect(',');
            Value k = parse();
            expect(',');
            Value r = parse();
            expect(')');
            if (!l.is_tree() || !r.is_tree() || k.kind() != Value::Kind::Base) fail("node must be (tree, key, tree)");
            return Value::node(l, k.as_base(), r);
        }
        size_t start = i;
        if (i < s.size() && s[i] == '-') ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (i == start || (s[start] == '-' && i == start + 1)) fail("expected a value");
        return Value::base(std::stoll(s.substr(start, i - start)));
    }
};

}  // namespace

Value parse_value(const std::string& text) {
    ValueParser p{text};
    Value v = p.parse();
    p.ws();
    if (p.i != text.size()) p.fail("trailing characters");
    return v;
}

}  // namespace logcost
