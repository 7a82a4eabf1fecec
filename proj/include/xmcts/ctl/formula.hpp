#pragma once

// CTL formulas over atomic comparisons of state variables.
//
//   formula := 'true' | 'false' | atom | '!' formula | formula ('&&' | '||') formula
//            | ('AX'|'EX'|'AF'|'EF'|'AG'|'EG') '(' formula ')' | '(' formula ')'
//   atom    := expr cmp expr | 'r_cs' ('=' | '!=') status
//   expr    := ['-'] term (('+' | '-') term)*
//   term    := number ['*' variable] | variable
//
// Precedence: ! binds tighter than &&, which binds tighter than ||; binary
// operators associate to the left.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "../errors.hpp"
#include "../model.hpp"
#include "labels.hpp"

namespace xmcts::ctl {

enum class Comparator { le, lt, ge, gt, eq, ne };

inline std::string_view to_string(Comparator c) {
    switch (c) {
    case Comparator::le: return "<=";
    case Comparator::lt: return "<";
    case Comparator::ge: return ">=";
    case Comparator::gt: return ">";
    case Comparator::eq: return "=";
    case Comparator::ne: return "!=";
    }
    return "?";
}

struct Term {
    double coef = 1.0;
    std::optional<Variable> var; // constant when empty

    friend bool operator==(const Term&, const Term&) = default;
};

struct LinearExpr {
    std::vector<Term> terms;

    static LinearExpr constant(double c) { return {{Term{c, std::nullopt}}}; }
    static LinearExpr of(Variable v) { return {{Term{1.0, v}}}; }

    LinearExpr plus(Variable v, double coef = 1.0) const {
        LinearExpr e = *this;
        e.terms.push_back({coef, v});
        return e;
    }

    // Empty when any referenced variable is not applicable at the node.
    std::optional<double> evaluate(const NodeLabels& labels) const {
        double sum = 0.0;
        for (const auto& t : terms) {
            if (!t.var) {
                sum += t.coef;
                continue;
            }
            auto v = labels.get(*t.var);
            if (!v) return std::nullopt;
            sum += t.coef * *v;
        }
        return sum;
    }

    friend bool operator==(const LinearExpr&, const LinearExpr&) = default;
};

struct Atom {
    LinearExpr lhs;
    Comparator op = Comparator::le;
    LinearExpr rhs;
    std::optional<RequestStatus> status; // set for `r_cs op <status>`

    bool is_status() const { return status.has_value(); }

    bool is_timing() const {
        if (is_status()) return false;
        for (const auto* side : {&lhs, &rhs})
            for (const auto& t : side->terms)
                if (t.var && ctl::is_timing(*t.var)) return true;
        return false;
    }

    friend bool operator==(const Atom&, const Atom&) = default;
};

enum class Op { True, False, Atom, Not, And, Or, AX, EX, AF, EF, AG, EG };

inline bool is_temporal(Op op) { return op >= Op::AX; }

// Universal-safety operators; the rest are existential or eventualities.
inline bool is_safety(Op op) { return op == Op::AX || op == Op::AG || op == Op::EG; }

inline std::string_view to_string(Op op) {
    switch (op) {
    case Op::AX: return "AX";
    case Op::EX: return "EX";
    case Op::AF: return "AF";
    case Op::EF: return "EF";
    case Op::AG: return "AG";
    case Op::EG: return "EG";
    default: return "";
    }
}

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
    Op op = Op::True;
    Atom atom;      // Op::Atom
    FormulaPtr lhs; // unary operand or left operand
    FormulaPtr rhs; // right operand of && and ||
};

inline FormulaPtr make_true() { return std::make_shared<const Formula>(Formula{Op::True, {}, nullptr, nullptr}); }
inline FormulaPtr make_false() { return std::make_shared<const Formula>(Formula{Op::False, {}, nullptr, nullptr}); }
inline FormulaPtr make_atom(Atom a) {
    return std::make_shared<const Formula>(Formula{Op::Atom, std::move(a), nullptr, nullptr});
}
inline FormulaPtr make_not(FormulaPtr f) { return std::make_shared<const Formula>(Formula{Op::Not, {}, std::move(f), nullptr}); }
inline FormulaPtr make_and(FormulaPtr a, FormulaPtr b) {
    return std::make_shared<const Formula>(Formula{Op::And, {}, std::move(a), std::move(b)});
}
inline FormulaPtr make_or(FormulaPtr a, FormulaPtr b) {
    return std::make_shared<const Formula>(Formula{Op::Or, {}, std::move(a), std::move(b)});
}
inline FormulaPtr make_temporal(Op op, FormulaPtr f) {
    if (!is_temporal(op)) throw InvalidInput("not a temporal operator");
    return std::make_shared<const Formula>(Formula{op, {}, std::move(f), nullptr});
}

inline bool equal(const Formula& a, const Formula& b) {
    if (a.op != b.op) return false;
    switch (a.op) {
    case Op::True:
    case Op::False: return true;
    case Op::Atom: return a.atom == b.atom;
    case Op::And:
    case Op::Or: return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
    default: return equal(*a.lhs, *b.lhs);
    }
}

inline int depth(const Formula& f) {
    switch (f.op) {
    case Op::True:
    case Op::False:
    case Op::Atom: return 0;
    case Op::And:
    case Op::Or: return 1 + std::max(depth(*f.lhs), depth(*f.rhs));
    default: return 1 + depth(*f.lhs);
    }
}

// ---------------------------------------------------------------------------
// Canonical printer

namespace detail {

inline std::string format_number(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string format_term_body(const Term& t, double magnitude) {
    if (!t.var) return format_number(magnitude);
    if (magnitude == 1.0) return std::string(to_string(*t.var));
    return format_number(magnitude) + "*" + std::string(to_string(*t.var));
}

} // namespace detail

inline std::string to_string(const LinearExpr& e) {
    if (e.terms.empty()) return "0";
    std::string out;
    for (std::size_t i = 0; i < e.terms.size(); ++i) {
        const Term& t = e.terms[i];
        bool neg = std::signbit(t.coef);
        double mag = neg ? -t.coef : t.coef;
        if (i == 0)
            out += neg ? "-" + detail::format_term_body(t, mag) : detail::format_term_body(t, mag);
        else
            out += (neg ? " - " : " + ") + detail::format_term_body(t, mag);
    }
    return out;
}

inline std::string to_string(const Atom& a) {
    if (a.is_status()) return "r_cs " + std::string(to_string(a.op)) + " " + std::string(to_string(*a.status));
    return to_string(a.lhs) + " " + std::string(to_string(a.op)) + " " + to_string(a.rhs);
}

inline std::string to_string(const Formula& f) {
    switch (f.op) {
    case Op::True: return "true";
    case Op::False: return "false";
    case Op::Atom: return to_string(f.atom);
    case Op::Not: return "!(" + to_string(*f.lhs) + ")";
    case Op::And: return "(" + to_string(*f.lhs) + " && " + to_string(*f.rhs) + ")";
    case Op::Or: return "(" + to_string(*f.lhs) + " || " + to_string(*f.rhs) + ")";
    default: return std::string(to_string(f.op)) + " (" + to_string(*f.lhs) + ")";
    }
}

inline std::string to_string(const FormulaPtr& f) { return to_string(*f); }

// ---------------------------------------------------------------------------
// Parser

namespace detail {

class FormulaParser {
public:
    explicit FormulaParser(std::string_view text) : text_(text) {}

    FormulaPtr parse() {
        FormulaPtr f = parse_or();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return f;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(msg, pos_); }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                       text_[pos_] == '\r'))
            ++pos_;
    }

    bool eat(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view tok) {
        if (!eat(tok)) fail("expected '" + std::string(tok) + "'");
    }

    static bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == 0xCE; }
    static bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == 0xCE || c == 0xB8; }

    // Peeks an identifier without consuming it.
    std::string_view peek_ident() {
        skip_ws();
        std::size_t p = pos_;
        if (p >= text_.size() || !ident_start(static_cast<unsigned char>(text_[p]))) return {};
        while (p < text_.size() && ident_char(static_cast<unsigned char>(text_[p]))) ++p;
        return text_.substr(pos_, p - pos_);
    }

    FormulaPtr parse_or() {
        FormulaPtr f = parse_and();
        while (eat("||")) f = make_or(f, parse_and());
        return f;
    }

    FormulaPtr parse_and() {
        FormulaPtr f = parse_unary();
        while (eat("&&")) f = make_and(f, parse_unary());
        return f;
    }

    FormulaPtr parse_unary() {
        skip_ws();
        if (text_.substr(pos_, 2) != "!=" && eat("!")) return make_not(parse_unary());
        return parse_primary();
    }

    FormulaPtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of formula");
        if (text_[pos_] == '(') {
            // A parenthesized formula, or an atom whose left side starts with '('.
            std::size_t start = pos_;
            std::optional<SyntaxError> first;
            try {
                ++pos_;
                FormulaPtr f = parse_or();
                expect(")");
                if (!at_comparator()) return f;
            } catch (const SyntaxError& e) {
                first = e;
            }
            pos_ = start;
            try {
                return make_atom(parse_atom());
            } catch (const SyntaxError& e) {
                // Report whichever reading got further into the text.
                if (first && first->offset() > e.offset()) throw *first;
                throw;
            }
        }
        std::string_view id = peek_ident();
        if (id == "true" || id == "false") {
            pos_ += id.size();
            return id == "true" ? make_true() : make_false();
        }
        static constexpr std::pair<std::string_view, Op> temporal[] = {
            {"AX", Op::AX}, {"EX", Op::EX}, {"AF", Op::AF}, {"EF", Op::EF}, {"AG", Op::AG}, {"EG", Op::EG}};
        for (const auto& [kw, op] : temporal) {
            if (id == kw) {
                pos_ += id.size();
                expect("(");
                FormulaPtr f = parse_or();
                expect(")");
                return make_temporal(op, f);
            }
        }
        return make_atom(parse_atom());
    }

    std::optional<Comparator> parse_comparator() {
        skip_ws();
        static constexpr std::pair<std::string_view, Comparator> cmps[] = {
            {"<=", Comparator::le},           {">=", Comparator::ge},           {"!=", Comparator::ne},
            {"\xE2\x89\xA4", Comparator::le}, {"\xE2\x89\xA5", Comparator::ge}, {"\xE2\x89\xA0", Comparator::ne},
            {"<", Comparator::lt},            {">", Comparator::gt},            {"=", Comparator::eq}};
        for (const auto& [tok, c] : cmps)
            if (eat(tok)) return c;
        return std::nullopt;
    }

    bool at_comparator() {
        std::size_t save = pos_;
        bool found = parse_comparator().has_value();
        pos_ = save;
        return found;
    }

    Atom parse_atom() {
        skip_ws();
        if (peek_ident() == "r_cs") {
            pos_ += 4;
            auto cmp = parse_comparator();
            if (!cmp || (*cmp != Comparator::eq && *cmp != Comparator::ne))
                fail("r_cs may only be compared with '=' or '!='");
            skip_ws();
            std::size_t start = pos_;
            while (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-'))
                ++pos_;
            auto st = parse_status(text_.substr(start, pos_ - start));
            if (!st) {
                pos_ = start;
                fail("expected a status literal (waiting, assigned, in-transit, dropped-off)");
            }
            Atom a;
            a.lhs = LinearExpr::of(Variable::r_cs);
            a.op = *cmp;
            a.status = *st;
            return a;
        }
        Atom a;
        a.lhs = parse_expr();
        auto cmp = parse_comparator();
        if (!cmp) fail("atom requires a comparator");
        a.op = *cmp;
        a.rhs = parse_expr();
        return a;
    }

    LinearExpr parse_expr() {
        LinearExpr e;
        double sign = eat("-") ? -1.0 : 1.0;
        parse_term(sign, e);
        for (;;) {
            skip_ws();
            if (eat("+"))
                parse_term(1.0, e);
            else if (eat("-"))
                parse_term(-1.0, e);
            else
                break;
        }
        return e;
    }

    // Appends one term, or every term of a parenthesized sub-expression.
    void parse_term(double sign, LinearExpr& into) {
        skip_ws();
        if (eat("(")) {
            LinearExpr inner = parse_expr();
            expect(")");
            for (Term t : inner.terms) {
                t.coef *= sign;
                into.terms.push_back(t);
            }
            return;
        }
        into.terms.push_back(parse_single_term(sign));
    }

    Term parse_single_term(double sign) {
        skip_ws();
        if (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
            double value = parse_number();
            if (eat("*")) {
                Variable v = parse_numeric_variable();
                return {sign * value, v};
            }
            return {sign * value, std::nullopt};
        }
        return {sign, parse_numeric_variable()};
    }

    Variable parse_numeric_variable() {
        std::string_view id = peek_ident();
        if (id.empty()) fail("expected a variable or number");
        auto v = parse_variable(id);
        if (!v) fail("unknown identifier '" + std::string(id) + "'");
        if (*v == Variable::r_cs) fail("r_cs cannot appear in arithmetic");
        pos_ += id.size();
        return *v;
    }

    double parse_number() {
        std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                digits();
            else
                pos_ = save;
        }
        double value = 0.0;
        auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (res.ec != std::errc() || res.ptr != text_.data() + pos_) {
            pos_ = start;
            fail("malformed number");
        }
        return value;
    }
};

} // namespace detail

inline FormulaPtr parse_formula(std::string_view text) { return detail::FormulaParser(text).parse(); }

} // namespace xmcts::ctl
