#pragma once

// Recursive-descent parser for the coefficient DSL and its canonical printer.
//
//   coefficient := factor (('*' | '/') factor)*
//   factor      := primary ['^' int]
//   primary     := number | 'x' | '(' laurent-poly ')' | 'exp' '(' poly ')'
//                | 'sin' '(' arg ')' | 'cos' '(' arg ')' | 'gamma' '(' 'x' ')'
//   arg         := [number '*'] 'x' | number '/' 'x' | 'x' '/' number
//
// Parenthesized polynomials are factored numerically into alpha * x^mu *
// prod (1 - x/r_k); numbers admit an 'i' suffix and the named constants pi,
// omega3, i. Factors in 1/x ("(1 - c/x)", "sin(2/x)") accumulate into the
// inner part of a Laurent form.

#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "qdiff/coefficient.hpp"
#include "qdiff/errors.hpp"
#include "qdiff/rational.hpp"

namespace qdiff {

namespace detail {

class CoeffParser {
  public:
    explicit CoeffParser(std::string text) : src_(std::move(text)) {}

    Coefficient parse() {
        acc_ = LaurentFactoredForm{};
        parse_expr();
        skip_ws();
        if (pos_ != src_.size()) throw ParseError(pos_, "end of input or '*', '/'");
        acc_.validate();
        if (acc_.inner.is_one()) {
            FactoredForm f = acc_.outer;
            f.alpha = acc_.alpha;
            f.mu0 = acc_.v;
            f.validate();
            return f;
        }
        return acc_;
    }

  private:
    std::string src_;
    std::size_t pos_ = 0;
    LaurentFactoredForm acc_;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }
    bool consume(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c, const char* what) {
        if (!consume(c)) throw ParseError(pos_, what);
    }

    bool ident_ahead(const char* word) {
        skip_ws();
        const std::size_t len = std::string(word).size();
        if (src_.compare(pos_, len, word) != 0) return false;
        const std::size_t after = pos_ + len;
        if (after < src_.size() && std::isalnum(static_cast<unsigned char>(src_[after]))) return false;
        pos_ = after;
        return true;
    }

    int parse_int() {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) ++pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ == start || (pos_ == start + 1 && !std::isdigit(static_cast<unsigned char>(src_[start]))))
            throw ParseError(start, "integer");
        return std::stoi(src_.substr(start, pos_ - start));
    }

    bool number_ahead() {
        const char c = peek();
        return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
    }

    // number := decimal ['i'] | 'pi' | 'i' | 'omega3'
    cplx parse_number() {
        skip_ws();
        if (ident_ahead("pi")) return cplx(std::numbers::pi, 0.0);
        if (ident_ahead("omega3")) return std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
        if (ident_ahead("i")) return cplx(0.0, 1.0);
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        if (pos_ == start) throw ParseError(start, "number");
        double v = std::stod(src_.substr(start, pos_ - start));
        if (pos_ < src_.size() && src_[pos_] == 'i' &&
            !(pos_ + 1 < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_ + 1])))) {
            ++pos_;
            return cplx(0.0, v);
        }
        return cplx(v, 0.0);
    }

    // signed complex literal, optionally parenthesized as (a), (a+bi), (a-bi)
    cplx parse_cnum() {
        skip_ws();
        if (consume('(')) {
            cplx first = parse_signed_number();
            cplx total = first;
            skip_ws();
            while (peek() == '+' || peek() == '-') total += parse_signed_number();
            expect(')', "')'");
            return total;
        }
        return parse_signed_number();
    }

    cplx parse_signed_number() {
        skip_ws();
        double sign = 1.0;
        while (peek() == '+' || peek() == '-') {
            if (consume('-')) sign = -sign;
            else consume('+');
        }
        return sign * parse_number();
    }

    void parse_expr() {
        parse_factor(+1);
        for (;;) {
            if (consume('*')) parse_factor(+1);
            else if (consume('/')) parse_factor(-1);
            else break;
        }
    }

    void parse_factor(int sign) {
        skip_ws();
        const std::size_t start = pos_;
        // Exponents distribute over the primary's contribution; parse into a
        // fresh accumulator and fold with the requested power.
        LaurentFactoredForm outer_acc = acc_;
        acc_ = LaurentFactoredForm{};
        parse_primary();
        int expn = 1;
        skip_ws();
        if (consume('^')) expn = parse_int();
        LaurentFactoredForm contrib = acc_;
        acc_ = outer_acc;
        fold(contrib, sign * expn, start);
    }

    void fold(const LaurentFactoredForm& c, int power, std::size_t at) {
        if (power == 0) return;
        if (c.alpha == 0.0) throw SemanticError("coefficient factor is identically zero");
        acc_.alpha *= detail_pow(c.alpha, power);
        acc_.v += c.v * power;
        fold_family(acc_.outer.zeros, acc_.outer.poles, c.outer.zeros, power, at);
        fold_family(acc_.outer.poles, acc_.outer.zeros, c.outer.poles, power, at);
        fold_family(acc_.inner.zeros, acc_.inner.poles, c.inner.zeros, power, at);
        fold_family(acc_.inner.poles, acc_.inner.zeros, c.inner.poles, power, at);
        fold_series(acc_.outer.exp_part, c.outer.exp_part, power);
        fold_series(acc_.inner.exp_part, c.inner.exp_part, power);
    }

    static cplx detail_pow(cplx b, int n) {
        cplx r = 1.0;
        const cplx base = n < 0 ? 1.0 / b : b;
        for (int m = std::abs(n); m > 0; --m) r *= base;
        return r;
    }

    static void fold_series(PowerSeries& dst, const PowerSeries& src, int power) {
        if (src.is_zero()) return;
        if (dst.coeffs.size() < src.coeffs.size()) dst.coeffs.resize(src.coeffs.size(), 0.0);
        for (std::size_t k = 0; k < src.coeffs.size(); ++k)
            dst.coeffs[k] += src.coeffs[k] * double(power);
    }

    static void fold_family(ZeroFamily& same, ZeroFamily& opposite, const ZeroFamily& src,
                            int power, std::size_t) {
        for (const auto& p : src.points) {
            const int m = p.multiplicity * power;
            if (m > 0) same.points.push_back({p.location, m});
            else opposite.points.push_back({p.location, -m});
        }
        for (const auto& b : src.builtins) {
            BuiltinFamily nb = b;
            nb.power = b.power * power;
            if (nb.power > 0) same.builtins.push_back(nb);
            else {
                nb.power = -nb.power;
                opposite.builtins.push_back(nb);
            }
        }
    }

    void parse_primary() {
        skip_ws();
        if (ident_ahead("exp")) return parse_exp_primary();
        if (ident_ahead("sin")) return parse_trig_primary(BuiltinKind::Sin);
        if (ident_ahead("cos")) return parse_trig_primary(BuiltinKind::Cos);
        if (ident_ahead("gamma")) return parse_gamma_primary();
        if (ident_ahead("x")) {
            acc_.v += 1;
            return;
        }
        if (peek() == '(') return parse_poly_primary();
        if (number_ahead() || peek() == 'i' || peek() == 'p' || peek() == 'o') {
            acc_.alpha *= parse_number();
            if (acc_.alpha == 0.0) throw SemanticError("zero coefficient factor");
            return;
        }
        throw ParseError(pos_, "number, 'x', '(', 'exp', 'sin', 'cos' or 'gamma'");
    }

    void parse_gamma_primary() {
        expect('(', "'('");
        if (!ident_ahead("x")) throw ParseError(pos_, "'x'");
        expect(')', "')'");
        FactoredForm g = make_gamma_coefficient();
        acc_.alpha *= g.alpha;
        acc_.v += g.mu0;
        acc_.outer.poles.builtins.push_back(g.poles.builtins[0]);
        fold_series(acc_.outer.exp_part, g.exp_part, 1);
    }

    void parse_trig_primary(BuiltinKind kind) {
        expect('(', "'('");
        double scale = 1.0;
        bool inverse_arg = false;
        if (number_ahead() || peek() == 'p') {
            const cplx s = parse_number();
            if (s.imag() != 0.0) throw UnsupportedInput("trig argument scale must be real");
            scale = s.real();
            if (consume('*')) {
                if (!ident_ahead("x")) throw ParseError(pos_, "'x'");
            } else if (consume('/')) {
                if (!ident_ahead("x")) throw ParseError(pos_, "'x'");
                inverse_arg = true;
            } else {
                throw ParseError(pos_, "'*x' or '/x'");
            }
        } else {
            if (!ident_ahead("x")) throw ParseError(pos_, "'x'");
            if (consume('/')) {
                const cplx d = parse_number();
                if (d.imag() != 0.0 || d == 0.0) throw UnsupportedInput("trig scale must be real nonzero");
                scale = 1.0 / d.real();
            }
        }
        expect(')', "')'");
        if (scale == 0.0) throw SemanticError("trig scale must be nonzero");
        BuiltinFamily fam{kind, std::abs(scale), 1, 200};
        if (!inverse_arg) {
            // sin(cx) = c x * paired family; cos(cx) = paired family
            if (kind == BuiltinKind::Sin) {
                acc_.alpha *= scale;
                acc_.v += 1;
            }
            acc_.outer.zeros.builtins.push_back(fam);
        } else {
            // sin(c/x) = c x^{-1} h(1/x); cos(c/x) = h(1/x)
            if (kind == BuiltinKind::Sin) {
                acc_.alpha *= scale;
                acc_.v -= 1;
            }
            acc_.inner.zeros.builtins.push_back(fam);
        }
    }

    void parse_exp_primary() {
        expect('(', "'('");
        auto poly = parse_laurent_poly();
        expect(')', "')'");
        cplx constant = 0.0;
        PowerSeries g;
        for (const auto& [k, c] : poly) {
            if (k < 0) throw UnsupportedInput("exp of negative powers is not supported");
            if (k == 0) {
                constant = c;
                continue;
            }
            if (g.coeffs.size() <= std::size_t(k)) g.coeffs.resize(std::size_t(k) + 1, 0.0);
            g.coeffs[std::size_t(k)] = c;
        }
        if (constant != 0.0) acc_.alpha *= std::exp(constant);
        fold_series(acc_.outer.exp_part, g, 1);
    }

    // '(' already peeked; parse a Laurent polynomial and factor it.
    void parse_poly_primary() {
        expect('(', "'('");
        auto poly = parse_laurent_poly();
        expect(')', "')'");
        if (poly.empty()) throw SemanticError("coefficient factor is identically zero");
        const int vmin = poly.begin()->first;
        std::vector<cplx> q_coeffs(std::size_t(poly.rbegin()->first - vmin) + 1, 0.0);
        for (const auto& [k, c] : poly) q_coeffs[std::size_t(k - vmin)] = c;
        Polynomial Q(std::move(q_coeffs));
        const cplx q0 = Q.coeff(0);
        if (q0 == 0.0) throw SemanticError("internal: factored polynomial vanishes at 0");
        acc_.alpha *= q0;
        acc_.v += vmin;
        if (Q.degree() >= 1) {
            for (const auto& r : polynomial_roots(Q)) {
                if (std::abs(r.location) < 1e-10)
                    throw SemanticError("zero located at 0 in a coefficient factor");
                acc_.outer.zeros.points.push_back({r.location, r.multiplicity});
            }
        }
    }

    // sum of signed monomials c * x^k with k possibly negative
    std::map<int, cplx> parse_laurent_poly() {
        std::map<int, cplx> poly;
        bool first = true;
        for (;;) {
            skip_ws();
            double sign = 1.0;
            if (consume('-')) sign = -1.0;
            else if (consume('+')) sign = 1.0;
            else if (!first) break;
            auto [k, c] = parse_poly_term();
            poly[k] += sign * c;
            if (poly[k] == 0.0) poly.erase(k);
            first = false;
            skip_ws();
            if (peek() != '+' && peek() != '-') break;
        }
        return poly;
    }

    // term := cnum ['*' xpow | '/' 'x' ['^' int]] | xpow ['/' cnum] | cnum
    std::pair<int, cplx> parse_poly_term() {
        skip_ws();
        cplx coeff = 1.0;
        if (peek() == '(' || number_ahead() || peek() == 'i' || peek() == 'p' || peek() == 'o') {
            coeff = parse_cnum();
            skip_ws();
            if (consume('*')) {
                auto k = parse_xpow();
                return {k, coeff};
            }
            if (peek() == '/') {
                const std::size_t save = pos_;
                ++pos_;
                skip_ws();
                if (pos_ < src_.size() && src_[pos_] == 'x') {
                    ident_ahead("x");
                    int k = 1;
                    if (consume('^')) k = parse_int();
                    return {-k, coeff};
                }
                pos_ = save;
            }
            return {0, coeff};
        }
        if (peek() == 'x') {
            int k = parse_xpow();
            skip_ws();
            if (consume('/')) {
                const cplx d = parse_cnum();
                if (d == 0.0) throw SemanticError("division by zero in polynomial term");
                coeff /= d;
            }
            return {k, coeff};
        }
        throw ParseError(pos_, "polynomial term");
    }

    int parse_xpow() {
        if (!ident_ahead("x")) throw ParseError(pos_, "'x'");
        if (consume('^')) return parse_int();
        return 1;
    }
};

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::string format_cnum(cplx z) {
    if (z.imag() == 0.0) {
        if (z.real() < 0.0) return "(" + format_double(z.real()) + ")";
        return format_double(z.real());
    }
    std::string s = "(" + format_double(z.real());
    s += (z.imag() >= 0.0 ? "+" : "-") + format_double(std::abs(z.imag())) + "i)";
    return s;
}

} // namespace detail

inline Coefficient parse_coefficient(const std::string& text) {
    return detail::CoeffParser(text).parse();
}

// Canonical printer; parse(print(f)) reproduces f structurally.
inline std::string print_coefficient(const Coefficient& coeff) {
    std::ostringstream os;
    cplx alpha;
    int v;
    const FactoredForm* outer;
    const FactoredForm* inner;
    FactoredForm plain;
    LaurentFactoredForm laur;
    if (std::holds_alternative<FactoredForm>(coeff)) {
        plain = std::get<FactoredForm>(coeff);
        alpha = plain.alpha;
        v = plain.mu0;
        plain.alpha = 1.0;
        plain.mu0 = 0;
        outer = &plain;
        inner = nullptr;
    } else {
        laur = std::get<LaurentFactoredForm>(coeff);
        alpha = laur.alpha;
        v = laur.v;
        outer = &laur.outer;
        inner = &laur.inner;
    }

    PowerSeries exp_remaining = outer->exp_part;

    // Builtins imply prefactors (sin(cx) = c x * family, gamma = x^{-1} e^{-g x} / family);
    // peel those off alpha / v / exp before printing. sign = +1 when the
    // family sits where its builtin naturally puts it, -1 for reciprocals.
    std::vector<std::string> zero_calls, pole_calls;
    auto peel = [&](const BuiltinFamily& b, bool inner_arg, int sign) {
        std::string call;
        if (b.kind == BuiltinKind::Sin) {
            call = "sin(" + detail::format_double(b.scale) + (inner_arg ? "/x)" : "*x)");
            for (int j = 0; j < b.power; ++j) {
                if (sign > 0) {
                    alpha /= b.scale;
                    v -= inner_arg ? -1 : 1;
                } else {
                    alpha *= b.scale;
                    v += inner_arg ? -1 : 1;
                }
            }
        } else if (b.kind == BuiltinKind::Cos) {
            call = "cos(" + detail::format_double(b.scale) + (inner_arg ? "/x)" : "*x)");
        } else {
            call = "gamma(x)";
            for (int j = 0; j < b.power; ++j) {
                v += sign;
                if (exp_remaining.coeffs.size() < 2) exp_remaining.coeffs.resize(2, 0.0);
                exp_remaining.coeffs[1] += double(sign) * std::numbers::egamma;
            }
        }
        if (b.power != 1) call += "^" + std::to_string(b.power);
        (sign > 0 ? zero_calls : pole_calls).push_back(call);
    };
    // sin/cos families live among zeros; the gamma family lives among poles.
    for (const auto& b : outer->zeros.builtins)
        peel(b, false, b.kind == BuiltinKind::GammaPoles ? -1 : +1);
    for (const auto& b : outer->poles.builtins)
        peel(b, false, b.kind == BuiltinKind::GammaPoles ? +1 : -1);
    if (inner) {
        for (const auto& b : inner->zeros.builtins)
            peel(b, true, b.kind == BuiltinKind::GammaPoles ? -1 : +1);
        for (const auto& b : inner->poles.builtins)
            peel(b, true, b.kind == BuiltinKind::GammaPoles ? +1 : -1);
    }

    std::vector<std::string> parts;
    const bool bare = outer->zeros.points.empty() && zero_calls.empty() && v == 0;
    if (alpha != 1.0 || bare) parts.push_back(detail::format_cnum(alpha));
    if (v != 0) parts.push_back(v == 1 ? "x" : "x^" + std::to_string(v));
    for (const auto& p : outer->zeros.points) {
        std::string f = "(1 - x/" + detail::format_cnum(p.location) + ")";
        if (p.multiplicity != 1) f += "^" + std::to_string(p.multiplicity);
        parts.push_back(f);
    }
    if (inner)
        for (const auto& p : inner->zeros.points) {
            std::string f = "(1 - " + detail::format_cnum(1.0 / p.location) + "/x)";
            if (p.multiplicity != 1) f += "^" + std::to_string(p.multiplicity);
            parts.push_back(f);
        }
    for (const auto& c : zero_calls) parts.push_back(c);
    if (!exp_remaining.is_zero()) {
        std::string e = "exp(";
        bool first = true;
        for (std::size_t k = 1; k < exp_remaining.coeffs.size(); ++k) {
            if (exp_remaining.coeffs[k] == 0.0) continue;
            if (!first) e += " + ";
            e += detail::format_cnum(exp_remaining.coeffs[k]) + "*x";
            if (k != 1) e += "^" + std::to_string(k);
            first = false;
        }
        e += ")";
        if (!first) parts.push_back(e);
    }
    if (inner && !inner->exp_part.is_zero())
        throw UnsupportedInput("printer: inner exponential parts are not representable in the DSL");

    std::vector<std::string> denom;
    for (const auto& p : outer->poles.points) {
        std::string f = "(1 - x/" + detail::format_cnum(p.location) + ")";
        if (p.multiplicity != 1) f += "^" + std::to_string(p.multiplicity);
        denom.push_back(f);
    }
    if (inner)
        for (const auto& p : inner->poles.points) {
            std::string f = "(1 - " + detail::format_cnum(1.0 / p.location) + "/x)";
            if (p.multiplicity != 1) f += "^" + std::to_string(p.multiplicity);
            denom.push_back(f);
        }
    for (const auto& c : pole_calls) denom.push_back(c);

    std::string result;
    for (std::size_t i = 0; i < parts.size(); ++i) result += (i ? " * " : "") + parts[i];
    if (result.empty()) result = "1";
    for (const auto& d : denom) result += " / " + d;
    return result;
}

} // namespace qdiff
