#pragma once

// Coefficient functions m(x) in factored canonical form
//   alpha * x^mu0 * (zero factors) / (pole factors) * exp(g(x)),
// the only admitted input class of the solvers. Builtin families carry the
// Weierstrass data of the classical examples (sin, cos, 1/Gamma) with explicit
// genus, so condition sum (r/|a_n|)^{p_n+1} < inf is known by construction.

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qdiff/errors.hpp"
#include "qdiff/numerics.hpp"

namespace qdiff {

struct ZeroPoint {
    cplx location;
    int multiplicity = 1;
};

enum class BuiltinKind { Sin, Cos, GammaPoles };

// Generator of a countable zero family with moduli tending to infinity.
struct BuiltinFamily {
    BuiltinKind kind;
    double scale = 1.0; // sin(scale*arg), cos(scale*arg); ignored by GammaPoles
    int power = 1;      // multiplicity applied to every member
    int truncation_count = 200;

    int genus() const { return kind == BuiltinKind::GammaPoles ? 1 : 0; }
    bool paired() const { return kind != BuiltinKind::GammaPoles; }

    std::string name() const {
        switch (kind) {
            case BuiltinKind::Sin: return "sin";
            case BuiltinKind::Cos: return "cos";
            default: return "gamma_poles";
        }
    }

    // k-th base location (k = 1, 2, ...); paired kinds also contribute the
    // negated location.
    cplx base_location(int k) const {
        switch (kind) {
            case BuiltinKind::Sin: return cplx(double(k) * std::numbers::pi / scale, 0.0);
            case BuiltinKind::Cos: return cplx((double(k) - 0.5) * std::numbers::pi / scale, 0.0);
            default: return cplx(-double(k), 0.0);
        }
    }

    double min_modulus() const { return std::abs(base_location(1)); }

    std::vector<ZeroPoint> members() const {
        std::vector<ZeroPoint> out;
        out.reserve(std::size_t(truncation_count) * (paired() ? 2 : 1));
        for (int k = 1; k <= truncation_count; ++k) {
            const cplx a = base_location(k);
            out.push_back({a, power});
            if (paired()) out.push_back({-a, power});
        }
        return out;
    }

    // Truncated product of the family's Weierstrass factors at x. Paired
    // members are folded as (1 - x^2/a^2); genus-1 members carry the e^{x/a}
    // convergence factor.
    cplx eval(cplx x) const {
        cplx prod = 1.0;
        for (int k = 1; k <= truncation_count; ++k) {
            const cplx a = base_location(k);
            cplx f;
            if (paired()) {
                f = 1.0 - (x * x) / (a * a);
            } else {
                f = (1.0 - x / a) * std::exp(x / a);
            }
            for (int j = 0; j < power; ++j) prod *= f;
        }
        return prod;
    }

    // First-order relative bound on the dropped factors, |x| fixed; decreases
    // monotonically in truncation_count.
    double tail_bound(cplx x) const {
        const double ax2 = std::norm(x);
        double s = 0.0;
        if (paired()) {
            // |1 - (1 - x^2/a_k^2)| = |x|^2/|a_k|^2, sum_{k>N} ~ integral
            const double a1 = std::abs(base_location(1));
            // moduli grow linearly: |a_k| ~ k*|a_1| (sin) or (k-1/2)*pi/scale
            s = ax2 / (a1 * a1) / double(truncation_count);
            if (kind == BuiltinKind::Sin || kind == BuiltinKind::Cos) {
                const double step = std::numbers::pi / scale;
                s = ax2 / (step * step) / double(truncation_count);
            }
        } else {
            // |1 - E_1(u)| <= |u|^2 for |u| <= 1
            s = ax2 / double(truncation_count);
        }
        return s * double(power);
    }
};

// Zeros (or poles) of a coefficient: finitely many explicit points plus any
// number of builtin generators. All locations nonzero.
struct ZeroFamily {
    std::vector<ZeroPoint> points;
    std::vector<BuiltinFamily> builtins;

    bool empty() const { return points.empty() && builtins.empty(); }
    bool has_builtin() const { return !builtins.empty(); }

    std::vector<ZeroPoint> all_members() const {
        std::vector<ZeroPoint> out = points;
        for (const auto& b : builtins) {
            auto m = b.members();
            out.insert(out.end(), m.begin(), m.end());
        }
        return out;
    }

    void validate() const {
        for (const auto& p : points) {
            if (p.location == 0.0) throw SemanticError("family member located at 0");
            if (p.multiplicity < 1) throw SemanticError("family multiplicity must be positive");
        }
    }

    cplx eval(cplx x) const {
        cplx prod = 1.0;
        for (const auto& p : points)
            for (int j = 0; j < p.multiplicity; ++j) prod *= (1.0 - x / p.location);
        for (const auto& b : builtins) prod *= b.eval(x);
        return prod;
    }

    double tail_bound(cplx x) const {
        double s = 0.0;
        for (const auto& b : builtins) s += b.tail_bound(x);
        return s;
    }

    double distance_to_member(cplx x) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : all_members()) best = std::min(best, std::abs(x - p.location));
        return best;
    }
};

struct CoefficientValue {
    cplx value;
    double rel_tail_bound; // first-order relative bound from truncated builtins
};

struct FactoredForm {
    cplx alpha = 1.0;
    int mu0 = 0;
    ZeroFamily zeros;
    ZeroFamily poles;
    PowerSeries exp_part; // g with g(0) = 0; empty means none

    static FactoredForm one() { return {}; }

    bool is_one() const {
        return alpha == 1.0 && mu0 == 0 && zeros.empty() && poles.empty() && exp_part.is_zero();
    }

    void validate() const {
        if (alpha == 0.0) throw SemanticError("alpha must be nonzero");
        if (!exp_part.coeffs.empty() && exp_part.coeffs[0] != 0.0)
            throw SemanticError("exp part must vanish at 0");
        zeros.validate();
        poles.validate();
        for (const auto& z : zeros.points)
            for (const auto& p : poles.points)
                if (std::abs(z.location - p.location) <
                    1e-12 * (1.0 + std::abs(z.location)))
                    throw SemanticError("zero and pole locations must be disjoint");
    }

    FactoredForm reciprocal() const {
        FactoredForm r;
        r.alpha = 1.0 / alpha;
        r.mu0 = -mu0;
        r.zeros = poles;
        r.poles = zeros;
        if (!exp_part.is_zero()) {
            r.exp_part = exp_part;
            for (auto& c : r.exp_part.coeffs) c = -c;
        }
        return r;
    }

    FactoredForm times(const FactoredForm& o) const {
        FactoredForm r = *this;
        r.alpha *= o.alpha;
        r.mu0 += o.mu0;
        r.zeros.points.insert(r.zeros.points.end(), o.zeros.points.begin(), o.zeros.points.end());
        r.zeros.builtins.insert(r.zeros.builtins.end(), o.zeros.builtins.begin(), o.zeros.builtins.end());
        r.poles.points.insert(r.poles.points.end(), o.poles.points.begin(), o.poles.points.end());
        r.poles.builtins.insert(r.poles.builtins.end(), o.poles.builtins.begin(), o.poles.builtins.end());
        if (!o.exp_part.is_zero()) {
            std::vector<cplx> c(std::max(r.exp_part.coeffs.size(), o.exp_part.coeffs.size()), 0.0);
            for (std::size_t k = 0; k < r.exp_part.coeffs.size(); ++k) c[k] += r.exp_part.coeffs[k];
            for (std::size_t k = 0; k < o.exp_part.coeffs.size(); ++k) c[k] += o.exp_part.coeffs[k];
            r.exp_part.coeffs = std::move(c);
        }
        return r;
    }

    CoefficientValue eval_with_tail(cplx x) const {
        if (x == 0.0) {
            if (mu0 < 0) throw AtPole("coefficient has a pole at 0");
            if (mu0 > 0) return {0.0, 0.0};
            return {alpha * zeros.eval(0.0) / poles.eval(0.0), zeros.tail_bound(0.0) + poles.tail_bound(0.0)};
        }
        if (poles.distance_to_member(x) < 1e-12 * (1.0 + std::abs(x)))
            throw AtPole("coefficient evaluated at a pole location");
        cplx v = alpha * std::pow(x, cplx(double(mu0), 0.0));
        v *= zeros.eval(x);
        v /= poles.eval(x);
        if (!exp_part.is_zero()) v *= std::exp(exp_part.eval(x));
        return {v, zeros.tail_bound(x) + poles.tail_bound(x)};
    }

    cplx eval(cplx x) const { return eval_with_tail(x).value; }
};

// m(x) = alpha * x^v * outer(x) * inner(1/x); outer and inner are factored
// forms with value 1 at 0 (the Birkhoff decomposition shape, restricted to
// the factored input class).
struct LaurentFactoredForm {
    cplx alpha = 1.0;
    int v = 0;
    FactoredForm outer; // function of x
    FactoredForm inner; // function of u = 1/x

    void validate() const {
        if (alpha == 0.0) throw SemanticError("alpha must be nonzero");
        if (outer.alpha != 1.0 || outer.mu0 != 0)
            throw SemanticError("outer part must have value 1 at 0");
        if (inner.alpha != 1.0 || inner.mu0 != 0)
            throw SemanticError("inner part must have value 1 at 0");
        outer.validate();
        inner.validate();
    }

    bool inner_trivial() const { return inner.is_one(); }

    CoefficientValue eval_with_tail(cplx x) const {
        if (x == 0.0) throw AtPole("Laurent form evaluated at 0");
        const auto o = outer.eval_with_tail(x);
        const auto i = inner.eval_with_tail(1.0 / x);
        return {alpha * std::pow(x, cplx(double(v), 0.0)) * o.value * i.value,
                o.rel_tail_bound + i.rel_tail_bound};
    }

    cplx eval(cplx x) const { return eval_with_tail(x).value; }
};

using Coefficient = std::variant<FactoredForm, LaurentFactoredForm>;

inline CoefficientValue evaluate_coefficient_with_tail(const Coefficient& c, cplx x) {
    return std::visit([&](const auto& f) { return f.eval_with_tail(x); }, c);
}

inline cplx evaluate_coefficient(const Coefficient& c, cplx x) {
    return evaluate_coefficient_with_tail(c, x).value;
}

namespace detail {

inline void move_zero_outer_to_inner(LaurentFactoredForm& lf, const ZeroPoint& z) {
    // (1 - x/a) = (-1/a) * x * (1 - a/x)
    for (int j = 0; j < z.multiplicity; ++j) lf.alpha *= (-1.0 / z.location);
    lf.v += z.multiplicity;
    lf.inner.zeros.points.push_back({1.0 / z.location, z.multiplicity});
}

inline void move_zero_inner_to_outer(LaurentFactoredForm& lf, const ZeroPoint& u) {
    // (1 - u/u0)|_{u=1/x} = (-a) * x^{-1} * (1 - x/a), a = 1/u0
    const cplx a = 1.0 / u.location;
    for (int j = 0; j < u.multiplicity; ++j) lf.alpha *= (-a);
    lf.v -= u.multiplicity;
    lf.outer.zeros.points.push_back({a, u.multiplicity});
}

inline void move_pole_outer_to_inner(LaurentFactoredForm& lf, const ZeroPoint& z) {
    for (int j = 0; j < z.multiplicity; ++j) lf.alpha *= (-z.location);
    lf.v -= z.multiplicity;
    lf.inner.poles.points.push_back({1.0 / z.location, z.multiplicity});
}

inline void move_pole_inner_to_outer(LaurentFactoredForm& lf, const ZeroPoint& u) {
    const cplx a = 1.0 / u.location;
    for (int j = 0; j < u.multiplicity; ++j) lf.alpha *= (-1.0 / a);
    lf.v += u.multiplicity;
    lf.outer.poles.points.push_back({a, u.multiplicity});
}

inline void check_tie(double modulus, double rho, const char* what) {
    if (std::abs(modulus - rho) < 1e-9 * (1.0 + rho))
        throw SemanticError(std::string(what) +
                            " modulus ties the split threshold; perturb rho");
}

} // namespace detail

// Rebin the zero/pole factors of a C*-form by modulus: zeros with |a| > rho
// stay in the outer part, |a| <= rho go inner (as functions of 1/x); poles use
// rho_prime. Builtin families cannot be split member-by-member and must land
// entirely on one side.
inline LaurentFactoredForm split_at_modulus(const LaurentFactoredForm& src, double rho,
                                            double rho_prime) {
    if (!(rho > 0.0) || !(rho_prime > 0.0))
        throw InvalidInput("split thresholds must be positive");
    LaurentFactoredForm out;
    out.alpha = src.alpha;
    out.v = src.v;
    out.outer.exp_part = src.outer.exp_part;
    out.inner.exp_part = src.inner.exp_part;

    // Builtins stay put; verify the requested thresholds are consistent.
    for (const auto& b : src.outer.zeros.builtins) {
        if (b.min_modulus() <= rho)
            throw UnsupportedInput("builtin zero family cannot be split at this rho");
        out.outer.zeros.builtins.push_back(b);
    }
    for (const auto& b : src.outer.poles.builtins) {
        if (b.min_modulus() <= rho_prime)
            throw UnsupportedInput("builtin pole family cannot be split at this rho'");
        out.outer.poles.builtins.push_back(b);
    }
    for (const auto& b : src.inner.zeros.builtins) {
        // inner members sit at x = 1/u, largest modulus 1/min|u|
        if (1.0 / b.min_modulus() > rho)
            throw UnsupportedInput("inner builtin zero family exceeds rho");
        out.inner.zeros.builtins.push_back(b);
    }
    for (const auto& b : src.inner.poles.builtins) {
        if (1.0 / b.min_modulus() > rho_prime)
            throw UnsupportedInput("inner builtin pole family exceeds rho'");
        out.inner.poles.builtins.push_back(b);
    }

    for (const auto& z : src.outer.zeros.points) {
        detail::check_tie(std::abs(z.location), rho, "zero");
        if (std::abs(z.location) > rho) out.outer.zeros.points.push_back(z);
        else detail::move_zero_outer_to_inner(out, z);
    }
    for (const auto& u : src.inner.zeros.points) {
        const double ax = 1.0 / std::abs(u.location);
        detail::check_tie(ax, rho, "zero");
        if (ax <= rho) out.inner.zeros.points.push_back(u);
        else detail::move_zero_inner_to_outer(out, u);
    }
    for (const auto& z : src.outer.poles.points) {
        detail::check_tie(std::abs(z.location), rho_prime, "pole");
        if (std::abs(z.location) > rho_prime) out.outer.poles.points.push_back(z);
        else detail::move_pole_outer_to_inner(out, z);
    }
    for (const auto& u : src.inner.poles.points) {
        const double ax = 1.0 / std::abs(u.location);
        detail::check_tie(ax, rho_prime, "pole");
        if (ax <= rho_prime) out.inner.poles.points.push_back(u);
        else detail::move_pole_inner_to_outer(out, u);
    }
    out.validate();
    return out;
}

// Shipped builtin coefficients covering the worked examples.

inline FactoredForm make_sin_coefficient(double scale = 1.0, int truncation = 200) {
    FactoredForm f;
    f.alpha = scale;
    f.mu0 = 1;
    f.zeros.builtins.push_back({BuiltinKind::Sin, scale, 1, truncation});
    return f;
}

inline FactoredForm make_cos_coefficient(double scale = 1.0, int truncation = 200) {
    FactoredForm f;
    f.zeros.builtins.push_back({BuiltinKind::Cos, scale, 1, truncation});
    return f;
}

// Gamma(x) = e^{-gamma x} / (x prod (1+x/n) e^{-x/n})
inline FactoredForm make_gamma_coefficient(int truncation = 200) {
    FactoredForm f;
    f.mu0 = -1;
    f.exp_part = PowerSeries({0.0, cplx(-std::numbers::egamma, 0.0)});
    f.poles.builtins.push_back({BuiltinKind::GammaPoles, 1.0, 1, truncation});
    return f;
}

// sin(c/x) = c x^{-1} h(1/x) with h(u) the paired sin family in u.
inline LaurentFactoredForm make_sin_inverse_coefficient(double scale = 2.0, int truncation = 200) {
    LaurentFactoredForm lf;
    lf.alpha = scale;
    lf.v = -1;
    lf.inner.zeros.builtins.push_back({BuiltinKind::Sin, scale, 1, truncation});
    return lf;
}

} // namespace qdiff
