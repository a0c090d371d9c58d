#include "logcost/cli.hpp"

#include "logcost/linearize.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

namespace logcost {

Program load_program(const std::string& text) { return simple_typecheck(normalize(parse_program(text))); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Backend Backend::parse(const std::string& spec) {
    Backend b;
    if (spec == "internal") return b;
    if (spec == "smtlib-out" || spec.rfind("smtlib-out:", 0) == 0) {
        b.kind = Kind::SmtlibOut;
        b.path = spec.size() > 11 ? spec.substr(11) : ".";
        return b;
    }
    if (spec.rfind("smtlib-exec:", 0) == 0 && spec.size() > 12) {
        b.kind = Kind::SmtlibExec;
        b.path = spec.substr(12);
        return b;
    }
    throw std::invalid_argument("unknown backend '" + spec + "'");
}

// ---------------------------------------------------------------------------
// Solving

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string run_process(const std::string& cmd) {
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw BackendError("cannot start " + cmd);
    std::string out;
    std::array<char, 4096> buf{};
    while (size_t n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
    int status = pclose(pipe);
    if (status == -1) throw BackendError("lost track of " + cmd);
    return out;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

}  // namespace

std::optional<SolveResult> solve_with(const ConstraintSet& cs, const Backend& backend, const std::string& stem,
                                      const SolveOptions& opts) {
    namespace fs = std::filesystem;
    switch (backend.kind) {
    case Backend::Kind::Internal: return solve(cs, opts);
    case Backend::Kind::SmtlibOut: {
        fs::create_directories(backend.path);
        std::ofstream(fs::path(backend.path) / (stem + ".smt2")) << export_smtlib(cs);
        return std::nullopt;
    }
    case Backend::Kind::SmtlibExec: {
        fs::path file = fs::temp_directory_path() / ("logcost-" + stem + "-" + std::to_string(::getpid()) + ".smt2");
        std::ofstream(file) << export_smtlib(cs);
        std::string out = run_process(shell_quote(backend.path) + " " + shell_quote(file.string()) + " 2>&1");
        fs::remove(file);
        std::string head = trim(out.substr(0, out.find('\n')));
        SolveResult r;
        if (head == "unsat") return r;
        if (head != "sat") {
            if (head == "unknown" || head == "timeout") return std::nullopt;
            throw BackendError("unexpected solver output: " + head);
        }
        try {
            r.model = import_model(out);
        } catch (const ModelParseError& e) {
            throw BackendError(std::string("unreadable model: ") + e.what());
        }
        for (size_t i = 0; i < cs.num_unknowns(); ++i) r.model.try_emplace(cs.name(static_cast<VarId>(i)), 0);
        r.feasible = true;
        return r;
    }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// check

namespace {

bool is_selector(const std::string& name) {
    return name.find(".sel.") != std::string::npos || name.ends_with(".act");
}

/** Pins every selector to 0/1 according to what it guards and re-solves, if any came out fractional. */
std::optional<SolveResult> round_selectors(const ConstraintSet& cs, SolveResult r, const Backend& backend,
                                           const std::string& stem, const SolveOptions& opts) {
    bool fractional = false;
    for (const auto& [name, v] : r.model)
        if (is_selector(name) && v != 0 && v != 1) fractional = true;
    if (!fractional) return r;
    ConstraintSet pinned = cs;
    for (const auto& [name, v] : r.model) {
        if (!is_selector(name)) continue;
        Rational target = v > 0 ? 1 : 0;
        if (auto at = name.find(".sel."); at != std::string::npos) {
            std::string guarded = name.substr(0, at) + ".p." + name.substr(at + 5);
            auto it = r.model.find(guarded);
            target = it != r.model.end() && it->second > 0 ? 1 : 0;
        }
        pinned.add(LinExpr::var(*pinned.find(name)) - LinExpr(target), Rel::Eq, "selector rounding");
    }
    auto again = solve_with(pinned, backend, stem + ".rounded", opts);
    if (again && again->feasible) {
        again->pivots += r.pivots;
    }
    return again;
}

void closure(const Derivation& d, const std::string& fn, std::set<std::string>& seen) {
    if (!seen.insert(fn).second) return;
    if (const FunctionSystem* fs = d.find(fn))
        for (const auto& c : fs->callees) closure(d, c, seen);
}

CoefFile solved_signature(const FunctionSystem& fs, const Assignment& model) {
    CoefFile out;
    auto& fc = out[fs.fn];
    for (const auto& b : fs.branches) {
        if (!b.selected || b.error) continue;
        for (const auto& s : b.signatures) {
            auto pair = std::make_pair(instantiate(s.pre, b.cs, model), instantiate(s.post, b.cs, model));
            if (s.role == "costed") {
                fc.costed = pair;
            } else {
                fc.cost_free.push_back(pair);
            }
        }
        break;
    }
    return out;
}

}  // namespace

CheckReport cmd_check(const Program& p, const CoefFile& coefs, const Tactics& tactics, const CheckOptions& opts) {
    using Clock = std::chrono::steady_clock;
    Derivation d = derive(p, coefs, tactics, opts.derive);
    SolveOptions so;
    so.time_limit = opts.time_limit;
    CheckReport report;

    for (const auto& fs : d.functions) {
        FunctionReport fr;
        fr.fn = fs.fn;
        const auto t0 = Clock::now();

        for (const auto& b : fs.branches) {
            BranchReport br;
            br.label = b.label;
            br.selected = b.selected;
            br.notes = b.notes;
            if (b.error) {
                br.status = "error";
                br.detail = *b.error;
            } else if (!opts.per_branch || opts.backend.kind != Backend::Kind::Internal) {
                br.status = "skipped";
            } else {
                try {
                    br.status = solve(b.cs, so).feasible ? "feasible" : "infeasible";
                } catch (const SolverLimit&) {
                    br.status = "limit";
                }
            }
            fr.branches.push_back(std::move(br));
        }

        std::set<std::string> deps;
        closure(d, fs.fn, deps);
        for (const auto& g : deps)
            if (const FunctionSystem* gs = d.find(g))
                for (const auto& b : gs->branches)
                    if (b.selected && b.error && fr.message.empty()) {
                        fr.verdict = "error";
                        fr.message = g + " [" + b.label + "] " + *b.error;
                    }

        if (fr.verdict.empty()) {
            const ConstraintSet joint = d.joint_system(fs.fn);
            fr.constraints = joint.constraints().size();
            fr.unknowns = joint.num_unknowns();
            try {
                auto r = solve_with(joint, opts.backend, fs.fn, so);
                if (r && r->feasible) r = round_selectors(joint, std::move(*r), opts.backend, fs.fn, so);
                if (!r) {
                    fr.verdict = "unknown";
                } else if (!r->feasible) {
                    fr.verdict = "infeasible";
                    fr.pivots = r->pivots;
                    if (opts.explain)
                        for (int i : r->conflict) fr.explain.push_back(to_string(joint, joint.constraints().at(static_cast<size_t>(i))));
                } else if (!check_assignment(joint, r->model)) {
                    fr.verdict = "error";
                    fr.message = "model rejected by exact validation";
                } else {
                    fr.verdict = "feasible";
                    fr.pivots = r->pivots;
                    fr.model = r->model;
                    for (const auto& b : fs.branches) {
                        if (!b.selected) continue;
                        for (const auto& rec : b.weakenings) {
                            ++fr.farkas_checked;
                            try {
                                if (!verify_farkas_sufficiency(instantiate(rec, b.cs, fr.model), rec.ks,
                                                               instantiate_f(rec, b.cs, fr.model), opts.farkas_samples,
                                                               opts.seed))
                                    ++fr.farkas_failed;
                            } catch (const InvalidCertificate&) {
                                ++fr.farkas_failed;
                            }
                        }
                    }
                    if (fr.farkas_failed > 0) {
                        fr.verdict = "error";
                        fr.message = "a weakening certificate failed sampling";
                    } else {
                        fr.coef_text = to_coef_text(solved_signature(fs, fr.model));
                    }
                }
            } catch (const SolverLimit&) {
                fr.verdict = "limit";
            }
        }
        fr.millis = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        report.functions.push_back(std::move(fr));
    }

    auto any = [&](const char* v) {
        return std::any_of(report.functions.begin(), report.functions.end(),
                           [&](const FunctionReport& f) { return f.verdict == v; });
    };
    report.exit_code = any("error")        ? kExitDerivation
                       : any("limit")      ? kExitSolverLimit
                       : any("unknown")    ? kExitUnknown
                       : any("infeasible") ? kExitInfeasible
                                           : kExitOk;
    return report;
}

// ---------------------------------------------------------------------------
// run

namespace {

bool fits(const Value& v, const SimpleType& t) {
    switch (t.kind) {
    case SimpleType::Kind::Tree: return v.is_tree();
    case SimpleType::Kind::Base: return v.kind() == Value::Kind::Base;
    case SimpleType::Kind::Bool: return v.kind() == Value::Kind::Bool;
    case SimpleType::Kind::Product: return false;
    }
    return false;
}

const FunSignature& signature_of(const Program& p, const std::string& fn) {
    for (size_t i = 0; i < p.defs.size(); ++i)
        if (p.defs[i].name == fn) return p.signatures.at(i);
    throw EvalError("no function named " + fn);
}

}  // namespace

EvalResult cmd_run(const Program& p, const std::string& fn, const std::vector<std::string>& literals,
                   std::uint64_t fuel) {
    const FunSignature& sig = signature_of(p, fn);
    if (literals.size() != sig.params.size())
        throw EvalError(fn + " takes " + std::to_string(sig.params.size()) + " arguments");
    std::vector<Value> args;
    for (size_t i = 0; i < literals.size(); ++i) {
        Value v = parse_value(literals[i]);
        if (!fits(v, sig.params[i]))
            throw EvalError("argument " + std::to_string(i + 1) + " of " + fn + " should be " + to_string(sig.params[i]));
        args.push_back(std::move(v));
    }
    return run_function(p, fn, args, fuel);
}

// ---------------------------------------------------------------------------
// validate

std::vector<ValidationReport> cmd_validate(const Program& p, const CoefFile& coefs, const std::string& fn,
                                           const ValidationOptions& opts) {
    const FunSignature& sig = signature_of(p, fn);
    auto it = coefs.find(fn);
    if (it == coefs.end()) throw std::invalid_argument("no annotation for " + fn);
    std::vector<std::pair<std::string, std::pair<Annotation, Annotation>>> pairs;
    if (it->second.costed) pairs.emplace_back("costed", *it->second.costed);
    for (size_t j = 0; j < it->second.cost_free.size(); ++j)
        pairs.emplace_back("cost-free#" + std::to_string(j), it->second.cost_free[j]);

    std::vector<ValidationReport> out;
    for (const auto& [role, pair] : pairs) {
        const bool costed = role == "costed";
        ValidationReport rep;
        rep.fn = fn;
        rep.pair = role;
        rep.worst_slack = std::numeric_limits<double>::infinity();
        std::mt19937_64 rng(opts.seed);
        std::uniform_int_distribution<int> size_dist(1, std::max(1, opts.max_size));
        for (int i = 0; i < opts.samples; ++i) {
            std::vector<Value> args, trees;
            std::vector<std::int64_t> keys;
            for (const auto& ty : sig.params) {
                if (!ty.is_tree()) continue;
                Value t = gen_random_search_tree(static_cast<std::uint64_t>(size_dist(rng)), rng());
                for (auto k : inorder_keys(t)) keys.push_back(k);
                trees.push_back(t);
            }
            std::int64_t lo = keys.empty() ? 0 : *std::min_element(keys.begin(), keys.end()) - 1;
            std::int64_t hi = keys.empty() ? 2 : *std::max_element(keys.begin(), keys.end()) + 1;
            size_t next_tree = 0;
            for (const auto& ty : sig.params) {
                if (ty.is_tree()) {
                    args.push_back(trees[next_tree++]);
                } else if (ty.kind == SimpleType::Kind::Bool) {
                    args.push_back(Value::boolean(rng() % 2 == 0));
                } else if (!keys.empty() && rng() % 2 == 0) {
                    args.push_back(Value::base(keys[rng() % keys.size()]));
                } else {
                    args.push_back(Value::base(std::uniform_int_distribution<std::int64_t>(lo, hi)(rng)));
                }
            }
            ++rep.attempted;
            EvalResult r;
            try {
                r = run_function(p, fn, args, opts.fuel);
            } catch (const Timeout&) {
                ++rep.skipped;
                continue;
            }
            const double in = potential_of(pair.first, trees);
            const double res = r.value.is_tree() && pair.second.m == 1 ? potential_of(pair.second, {r.value})
                                                                        : potential_of(pair.second, {});
            const double slack = in - res - (costed ? static_cast<double>(r.cost) : 0.0);
            rep.worst_slack = std::min(rep.worst_slack, slack);
            if (slack < -opts.tolerance) {
                ++rep.failed;
                if (rep.witnesses.size() < 5) {
                    std::string w = fn;
                    for (const auto& a : args) w += " " + to_string(a);
                    rep.witnesses.push_back(w);
                }
            } else {
                ++rep.passed;
            }
        }
        if (rep.attempted == rep.skipped) rep.worst_slack = 0;
        out.push_back(std::move(rep));
    }
    return out;
}

// ---------------------------------------------------------------------------
// export, paths

std::string cmd_export(const Program& p, const CoefFile& coefs, const Tactics& tactics, const DeriveOptions& opts) {
    return export_smtlib(derive(p, coefs, tactics, opts).selected_system());
}

namespace {

std::string head_of(const ExprPtr& e) {
    switch (e->kind) {
    case Expr::Kind::Var: return e->name;
    case Expr::Kind::True: return "true";
    case Expr::Kind::False: return "false";
    case Expr::Kind::Leaf: return "leaf";
    case Expr::Kind::Node:
    case Expr::Kind::Cmp:
    case Expr::Kind::App: return to_source(e);
    case Expr::Kind::If: return "if " + to_source(e->kids[0]);
    case Expr::Kind::Match:
        return "match " + e->kids[0]->name + " with (" + e->binders[0] + ", " + e->binders[1] + ", " + e->binders[2] + ")";
    case Expr::Kind::Let: return "let " + e->name;
    }
    return {};
}

void print_paths(const ExprPtr& e, const Path& path, int depth, std::ostringstream& out) {
    if (!e) return;
    out << std::string(static_cast<size_t>(depth) * 2, ' ') << path_to_string(path) << "  " << head_of(e) << "\n";
    if (e->kind == Expr::Kind::Node || e->kind == Expr::Kind::Cmp || e->kind == Expr::Kind::App ||
        e->kind == Expr::Kind::Var)
        return;
    for (size_t k = 0; k < e->kids.size(); ++k) {
        Path p = path;
        p.push_back(static_cast<int>(k));
        print_paths(e->kids[k], p, depth + 1, out);
    }
}

}  // namespace

std::string cmd_paths(const Program& p) {
    std::ostringstream out;
    for (const auto& def : p.defs) {
        out << def.name;
        for (const auto& x : def.params) out << " " << x;
        out << "\n";
        print_paths(def.body, {}, 1, out);
    }
    return out.str();
}

}  // namespace logcost
