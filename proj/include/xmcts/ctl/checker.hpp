#pragma once

// Finite-tree CTL checking with violation bookkeeping.
//
// Leaves end every path: AX holds vacuously, EX fails, and the G/F
// operators reduce to the local value. An atom that is not applicable at a
// node (the queried request or vehicle is absent there) takes whichever
// value makes its literal hold under the nearest enclosing safety operator
// (AX, AG, EG; also the top level) and fail under EX, AF, EF. Counting
// negations between the operator and the atom keeps the A/E dualities exact.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "formula.hpp"
#include "labels.hpp"

namespace xmcts::ctl {

enum class Verdict { satisfied, violated, not_applicable };

struct AtomEval {
    Verdict verdict = Verdict::not_applicable;
    double degree = 0.0; // > 0 exactly when violated
};

inline AtomEval eval_atom(const NodeLabels& labels, const Atom& atom) {
    if (atom.is_status()) {
        if (!labels.status) return {};
        bool same = *labels.status == *atom.status;
        bool ok = atom.op == Comparator::eq ? same : !same;
        return ok ? AtomEval{Verdict::satisfied, 0.0} : AtomEval{Verdict::violated, 1.0};
    }
    auto l = atom.lhs.evaluate(labels);
    auto r = atom.rhs.evaluate(labels);
    if (!l || !r) return {};
    const double a = *l;
    const double b = *r;
    bool ok = false;
    double margin = 0.0;
    // Labels are whole minutes or counts, so a strict bound x < y is x <= y - 1.
    switch (atom.op) {
    case Comparator::le: ok = a <= b; margin = a - b; break;
    case Comparator::lt: ok = a < b; margin = a - b + 1.0; break;
    case Comparator::ge: ok = a >= b; margin = b - a; break;
    case Comparator::gt: ok = a > b; margin = b - a + 1.0; break;
    case Comparator::eq: ok = a == b; margin = std::abs(a - b); break;
    case Comparator::ne: ok = a != b; margin = 1.0; break;
    }
    if (ok) return {Verdict::satisfied, 0.0};
    if (atom.is_timing()) margin = double(round_half_up(margin));
    return {Verdict::violated, std::max(margin, 1e-12)};
}

struct CheckResult {
    // Every subformula occurrence in preorder; row i of `satisfaction` holds
    // its truth value at each tree node. Row 0 is the formula itself.
    std::vector<FormulaPtr> subformulas;
    std::vector<std::vector<char>> satisfaction;
    bool root_verdict = false;

    const std::vector<char>& top() const { return satisfaction.front(); }
};

namespace detail {

class Checker {
public:
    Checker(const LabeledTree& tree, CheckResult& out) : tree_(tree), out_(out) {
        // Preorder storage puts children after parents.
        order_.resize(tree.size());
        for (std::size_t i = 0; i < tree.size(); ++i) order_[i] = tree.size() - 1 - i;
    }

    std::size_t run(const FormulaPtr& f, bool safety, bool negated) {
        std::size_t row = out_.subformulas.size();
        out_.subformulas.push_back(f);
        out_.satisfaction.emplace_back(tree_.size(), 0);
        switch (f->op) {
        case Op::True: fill(row, 1); break;
        case Op::False: fill(row, 0); break;
        case Op::Atom: {
            char na = safety != negated ? 1 : 0;
            for (std::size_t n = 0; n < tree_.size(); ++n) {
                Verdict v = eval_atom(tree_.nodes[n].labels, f->atom).verdict;
                out_.satisfaction[row][n] = v == Verdict::not_applicable ? na : char(v == Verdict::satisfied);
            }
            break;
        }
        case Op::Not: {
            std::size_t a = run(f->lhs, safety, !negated);
            for (std::size_t n = 0; n < tree_.size(); ++n) set(row, n, !get(a, n));
            break;
        }
        case Op::And:
        case Op::Or: {
            std::size_t a = run(f->lhs, safety, negated);
            std::size_t b = run(f->rhs, safety, negated);
            for (std::size_t n = 0; n < tree_.size(); ++n)
                set(row, n, f->op == Op::And ? get(a, n) && get(b, n) : get(a, n) || get(b, n));
            break;
        }
        default: temporal(row, f->op, run(f->lhs, is_safety(f->op), false)); break;
        }
        return row;
    }

private:
    const LabeledTree& tree_;
    CheckResult& out_;
    std::vector<std::size_t> order_;

    bool get(std::size_t row, std::size_t n) const { return out_.satisfaction[row][n] != 0; }
    void set(std::size_t row, std::size_t n, bool v) { out_.satisfaction[row][n] = v ? 1 : 0; }
    void fill(std::size_t row, char v) { std::fill(out_.satisfaction[row].begin(), out_.satisfaction[row].end(), v); }

    void temporal(std::size_t row, Op op, std::size_t sub) {
        for (std::size_t n : order_) {
            const auto& kids = tree_.nodes[n].children;
            const bool here = get(sub, n);
            auto all = [&](std::size_t r) {
                return std::all_of(kids.begin(), kids.end(), [&](std::size_t c) { return get(r, c); });
            };
            auto any = [&](std::size_t r) {
                return std::any_of(kids.begin(), kids.end(), [&](std::size_t c) { return get(r, c); });
            };
            bool v = false;
            switch (op) {
            case Op::AX: v = kids.empty() || all(sub); break;
            case Op::EX: v = any(sub); break;
            case Op::AG: v = here && all(row); break;
            case Op::EG: v = here && (kids.empty() || any(row)); break;
            case Op::AF: v = here || (!kids.empty() && all(row)); break;
            case Op::EF: v = here || any(row); break;
            default: break;
            }
            set(row, n, v);
        }
    }
};

} // namespace detail

inline CheckResult check(const LabeledTree& tree, const FormulaPtr& formula) {
    if (tree.nodes.empty()) throw InvalidInput("cannot check an empty tree");
    CheckResult result;
    detail::Checker(tree, result).run(formula, /*safety=*/true, /*negated=*/false);
    result.root_verdict = result.top()[0] != 0;
    return result;
}

struct ViolationRecord {
    std::size_t node = 0; // index in the labeled tree
    int source_node = 0;  // search-tree node id
    std::size_t atom = 0;
    double degree = 0.0;
};

struct QuantitativeSummary {
    long applicable_nodes = 0;
    long violating_nodes = 0;
    double violation_pct = 0.0;
    std::optional<double> avg_degree; // empty without violations
    std::optional<double> min_degree;
    std::optional<double> max_degree;
    long scenario_count = 0;
};

struct Quantification {
    QuantitativeSummary summary;
    std::vector<ViolationRecord> records;
};

// The single atom under one temporal operator (the shape of every
// specification formula), or empty for any other shape.
inline const Atom* quantifiable_atom(const Formula& f) {
    if (is_temporal(f.op) && f.lhs->op == Op::Atom) return &f.lhs->atom;
    return nullptr;
}

inline Quantification quantify_violations(const LabeledTree& tree, const FormulaPtr& formula) {
    const Atom* atom = quantifiable_atom(*formula);
    if (!atom)
        throw UnsupportedQuantification("quantification needs one temporal operator over one atom: " +
                                        to_string(formula));
    Quantification q;
    q.summary.scenario_count = tree.iterations_run;
    double sum = 0.0;
    for (std::size_t n = 0; n < tree.size(); ++n) {
        AtomEval e = eval_atom(tree.nodes[n].labels, *atom);
        if (e.verdict == Verdict::not_applicable) continue;
        ++q.summary.applicable_nodes;
        if (e.verdict != Verdict::violated) continue;
        ++q.summary.violating_nodes;
        q.records.push_back({n, tree.nodes[n].source_id, 0, e.degree});
        sum += e.degree;
        q.summary.min_degree = std::min(q.summary.min_degree.value_or(e.degree), e.degree);
        q.summary.max_degree = std::max(q.summary.max_degree.value_or(e.degree), e.degree);
    }
    if (q.summary.applicable_nodes > 0)
        q.summary.violation_pct = 100.0 * double(q.summary.violating_nodes) / double(q.summary.applicable_nodes);
    if (q.summary.violating_nodes > 0) q.summary.avg_degree = sum / double(q.summary.violating_nodes);
    return q;
}

} // namespace xmcts::ctl
