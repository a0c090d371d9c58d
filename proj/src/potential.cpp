#include "logcost/potential.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

namespace logcost {

bool Index::is_constant() const {
    return !is_rank && std::all_of(a.begin(), a.end(), [](int x) { return x == 0; });
}

std::string to_string(const Index& idx, int arity) {
    if (idx.is_rank) return arity == 1 ? "q*" : "q" + std::to_string(idx.pos + 1);
    std::string s = "q(";
    for (size_t i = 0; i < idx.a.size(); ++i) s += std::to_string(idx.a[i]) + " ";
    return s + "| " + std::to_string(idx.b) + ")";
}

std::vector<Index> index_universe(int m) {
    std::vector<Index> out;
    for (int i = 0; i < m; ++i) out.push_back(Index::rank(i));
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        std::vector<int> a(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) a[static_cast<size_t>(i)] = (mask >> i) & 1;
        for (int b = 0; b <= 2; ++b) {
            if (mask == 0 && b == 0) continue;
            out.push_back(Index::log(a, b));
        }
    }
    return out;
}

double log2p(double n) { return std::log2(std::max(n, 1.0)); }

double rank(const Value& t) {
    if (t.kind() == Value::Kind::Leaf) return 1.0;
    if (t.kind() != Value::Kind::Node) throw std::invalid_argument("rank of a non-tree");
    const Value& l = t.left();
    const Value& r = t.right();
    return rank(l) + log2p(static_cast<double>(l.size())) + log2p(static_cast<double>(r.size())) + rank(r);
}

double potential_of(const Annotation& q, const std::vector<Value>& trees) {
    if (static_cast<int>(trees.size()) != q.m)
        throw ArityError("annotation of arity " + std::to_string(q.m) + " applied to " +
                         std::to_string(trees.size()) + " trees");
    double total = 0;
    for (const auto& [idx, c] : q.coef) {
        double v;
        if (idx.is_rank) {
            v = rank(trees.at(static_cast<size_t>(idx.pos)));
        } else {
            double arg = idx.b;
            for (size_t i = 0; i < idx.a.size(); ++i) arg += idx.a[i] * static_cast<double>(trees[i].size());
            v = log2p(arg);
        }
        total += to_double(c) * v;
    }
    return total;
}

Index share_index(const Index& idx, int m) {
    if (m < 2) throw ArityError("sharing needs two tree positions");
    if (idx.is_rank) return Index::rank(idx.pos == m - 1 ? m - 2 : idx.pos);
    std::vector<int> a(idx.a.begin(), idx.a.end() - 1);
    a.back() += idx.a.back();
    return Index::log(std::move(a), idx.b);
}

Annotation share(const Annotation& q) {
    Annotation out;
    out.m = q.m - 1;
    for (const auto& [idx, c] : q.coef) out.coef[share_index(idx, q.m)] += c;
    return out;
}

bool share_leaves_template(const Annotation& q) {
    for (const auto& [idx, c] : q.coef)
        if (c != 0 && !idx.is_rank && idx.a.size() >= 2 && idx.a[idx.a.size() - 1] + idx.a[idx.a.size() - 2] > 1)
            return true;
    return false;
}

Annotation add_constant(const Annotation& q, const Rational& k) {
    Annotation out = q;
    out.coef[Index::constant(q.m, 2)] += k;
    return out;
}

Annotation scale(const Rational& k, const Annotation& q) {
    Annotation out;
    out.m = q.m;
    if (k == 0) return out;
    for (const auto& [idx, c] : q.coef) out.coef[idx] = k * c;
    return out;
}

Annotation add(const Annotation& p, const Annotation& q) {
    if (p.m != q.m) throw ArityError("adding annotations of different arity");
    Annotation out = p;
    for (const auto& [idx, c] : q.coef) out.coef[idx] += c;
    return out;
}

Index permute_index(const Index& idx, const std::vector<int>& perm) {
    if (idx.is_rank) {
        auto it = std::find(perm.begin(), perm.end(), idx.pos);
        if (it == perm.end()) throw ArityError("permutation drops a ranked position");
        return Index::rank(static_cast<int>(it - perm.begin()));
    }
    std::vector<int> a(perm.size());
    for (size_t j = 0; j < perm.size(); ++j) a[j] = idx.a.at(static_cast<size_t>(perm[j]));
    return Index::log(std::move(a), idx.b);
}

// ---------------------------------------------------------------------------
// .coef files

CoefParseError::CoefParseError(const std::string& msg, int line)
    : std::runtime_error("line " + std::to_string(line) + ": " + msg), line(line) {}

namespace {

struct RawEntry {
    Index idx;
    Rational value;
};

Annotation build(const std::vector<RawEntry>& entries, int line) {
    Annotation q;
    int arity = -1;
    int max_rank = -1;
    bool star = false;
    for (const auto& e : entries) {
        if (e.idx.is_rank) {
            max_rank = std::max(max_rank, e.idx.pos);
            if (e.idx.pos == -1) star = true;
        } else {
            int m = static_cast<int>(e.idx.a.size());
            if (arity != -1 && arity != m) throw CoefParseError("mixed arities in one annotation", line);
            arity = m;
        }
    }
    if (arity == -1) arity = star ? 1 : max_rank + 1;
    if (star && arity != 1) throw CoefParseError("q* is only meaningful for one tree; use q1..qm", line);
    if (max_rank >= arity) throw CoefParseError("rank index beyond arity", line);
    q.m = std::max(arity, 0);
    for (const auto& e : entries) {
        Index idx = e.idx;
        if (idx.is_rank && idx.pos == -1) idx.pos = 0;
        if (e.value < 0) throw CoefParseError("negative coefficient", line);
        if (q.coef.count(idx)) throw CoefParseError("coefficient given twice", line);
        if (e.value != 0) q.coef[idx] = e.value;
    }
    return q;
}

}  // namespace

CoefFile parse_coef(const std::string& text) {
    CoefFile out;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    std::string fn;
    enum class Sec { None, Costed, CostFree, Result } sec = Sec::None;
    Sec pre_kind = Sec::None;
    std::vector<RawEntry> pre, post;
    int pre_line = 0;

    auto flush = [&]() {
        if (pre_kind == Sec::None) return;
        auto p = std::make_pair(build(pre, pre_line), build(post, pre_line));
        auto& fc = out[fn];
        if (pre_kind == Sec::Costed) {
            if (fc.costed) throw CoefParseError("second with-cost section for " + fn, pre_line);
            fc.costed = p;
        } else {
            fc.cost_free.push_back(p);
        }
        pre.clear();
        post.clear();
        pre_kind = Sec::None;
    };

    static const std::regex kFn(R"(^fn\s+([A-Za-z_][A-Za-z0-9_']*)$)");
    static const std::regex kRank(R"(^q(\*|[0-9]+)\s*=\s*(\S+)$)");
    static const std::regex kLog(R"(^q\(\s*([0-9\s]*)\|\s*([0-9]+)\s*\)\s*=\s*(\S+)$)");
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto c = raw.find('#'); c != std::string::npos) raw.erase(c);
        if (auto c = raw.find("--"); c != std::string::npos) raw.erase(c);
        auto b = raw.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = raw.find_last_not_of(" \t\r");
        std::string line = raw.substr(b, e - b + 1);
        std::smatch m;
        if (std::regex_match(line, m, kFn)) {
            flush();
            fn = m[1];
            if (out.count(fn)) throw CoefParseError("duplicate block for " + fn, line_no);
            out[fn];
            sec = Sec::None;
            continue;
        }
        if (line == "with-cost:" || line == "cost-free:") {
            if (fn.empty()) throw CoefParseError("section outside of an 'fn' block", line_no);
            flush();
            sec = pre_kind = line == "with-cost:" ? Sec::Costed : Sec::CostFree;
            pre_line = line_no;
            continue;
        }
        if (line == "result:") {
            if (sec != Sec::Costed && sec != Sec::CostFree)
                throw CoefParseError("'result:' must follow with-cost: or cost-free:", line_no);
            sec = Sec::Result;
            continue;
        }
        if (sec == Sec::None) throw CoefParseError("coefficient outside of a section", line_no);
        RawEntry entry;
        try {
            if (std::regex_match(line, m, kRank)) {
                entry.idx = Index::rank(m[1] == "*" ? -1 : std::stoi(m[1]) - 1);
                if (m[1] != "*" && entry.idx.pos < 0) throw CoefParseError("ranks are numbered from 1", line_no);
                entry.value = parse_rational(m[2].str());
            } else if (std::regex_match(line, m, kLog)) {
                std::istringstream as(m[1].str());
                std::vector<int> a;
                int x;
                while (as >> x) a.push_back(x);
                entry.idx = Index::log(a, std::stoi(m[2]));
                entry.value = parse_rational(m[3].str());
            } else {
                throw CoefParseError("expected 'q* = r', 'qi = r' or 'q(a1 .. am | b) = r'", line_no);
            }
        } catch (const std::invalid_argument& ex) {
            throw CoefParseError(ex.what(), line_no);
        }
        (sec == Sec::Result ? post : pre).push_back(entry);
    }
    flush();
    return out;
}

std::string to_coef_text(const CoefFile& f) {
    std::ostringstream os;
    auto dump = [&](const Annotation& q) {
        for (const auto& [idx, c] : q.coef)
            if (c != 0) os << "  " << to_string(idx, q.m) << " = " << to_string(c) << "\n";
    };
    bool first = true;
    for (const auto& [name, fc] : f) {
        if (!first) os << "\n";
        first = false;
        os << "fn " << name << "\n";
        if (fc.costed) {
            os << "with-cost:\n";
            dump(fc.costed->first);
            os << "result:\n";
            dump(fc.costed->second);
        }
        for (const auto& [p, pp] : fc.cost_free) {
            os << "cost-free:\n";
            dump(p);
            os << "result:\n";
            dump(pp);
        }
    }
    return os.str();
}

}  // namespace logcost
