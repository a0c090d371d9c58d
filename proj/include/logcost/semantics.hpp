#pragma once

#include "logcost/syntax.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace logcost {

struct TreeNode;

/** Runtime value. Trees share structure and are never mutated. */
class Value {
public:
    enum class Kind { Leaf, Node, Base, Bool };

    Value() = default;  // leaf
    static Value leaf() { return Value(); }
    static Value node(Value l, std::int64_t key, Value r);
    static Value base(std::int64_t v);
    static Value boolean(bool b);

    Kind kind() const { return kind_; }
    bool is_tree() const { return kind_ == Kind::Leaf || kind_ == Kind::Node; }
    const Value& left() const;
    const Value& right() const;
    std::int64_t key() const;
    std::int64_t as_base() const;
    bool as_bool() const;

    /** Number of leaves. */
    std::uint64_t size() const;

    bool operator==(const Value& o) const;

private:
    Kind kind_ = Kind::Leaf;
    std::int64_t scalar_ = 0;
    std::shared_ptr<const TreeNode> node_;
};

struct TreeNode {
    Value left;
    std::int64_t key;
    Value right;
    std::uint64_t size;
};

using Environment = std::map<std::string, Value>;

struct EvalResult {
    Value value;
    std::uint64_t cost = 0;
};

class Timeout : public std::runtime_error {
public:
    Timeout() : std::runtime_error("evaluation ran out of fuel") {}
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kDefaultFuel = 1'000'000;

/** Big-step evaluation; cost counts function applications inside e. */
EvalResult evaluate(const Environment& sigma, const ExprPtr& e, const Program& p, std::uint64_t fuel = kDefaultFuel);

/** Calls f on args; the outermost application is counted. */
EvalResult run_function(const Program& p, const std::string& f, const std::vector<Value>& args,
                        std::uint64_t fuel = kDefaultFuel);

/** Random binary search tree with n leaves and distinct keys; deterministic per seed. */
Value gen_random_search_tree(std::uint64_t n, std::uint64_t seed);

std::vector<std::int64_t> inorder_keys(const Value& t);

std::string to_string(const Value& v);
/** Accepts "leaf", "(v, k, v)", integers, "true", "false". */
Value parse_value(const std::string& text);

}  // namespace logcost
