#pragma once

// Explicit meromorphic solutions of y(qx) = m(x) y(x) for coefficients in
// factored canonical form, together with the predicted zero/pole spirals.
// The emitted expressions are exactly the constructive ones of the proofs:
//
//   entire coefficient h = alpha x^mu prod(...) e^g :
//     Theta^{2mu+1}(x) / (q^mu x^mu Theta^mu(-x) Theta(alpha^{-1}x))
//       * prod f-factors * e^{G_g}
//   meromorphic on C:  m = alpha x^mu h1/h2  ->  prefactor * H1 / H2
//   meromorphic on C*: m = alpha x^v m0(x) m_inf(1/x)
//       ->  prefactor * M0(x) * M_inf(q/x)

#include <cmath>

#include "qdiff/coefficient.hpp"
#include "qdiff/numerics.hpp"
#include "qdiff/solution.hpp"

namespace qdiff {

struct SolveResult {
    SolutionExpr expr;
    SpiralCatalog catalog; // unmerged audit trail; merge_spirals for verification
};

namespace detail {

inline bool is_unit(cplx alpha) { return std::abs(alpha - 1.0) <= 1e-14; }

// Solution of y(qx) = alpha x^mu y(x) with its Table rows (signed orders:
// positive zeros, negative poles; zero orders are never emitted).
inline SolveResult theta_prefactor(const QParameter& q, cplx alpha, int mu) {
    SolveResult r{SolutionExpr::constant(1.0), {}};
    const bool unit = is_unit(alpha);
    const int q_order = unit ? 2 * mu : 2 * mu + 1;
    SolutionExpr e = SolutionExpr::constant(1.0);
    if (q_order != 0) e = e * SolutionExpr::theta(1.0).pow(q_order);
    if (mu != 0) {
        e = e * SolutionExpr::monomial(std::pow(q.q(), cplx(-double(mu), 0.0)), -mu);
        e = e * SolutionExpr::theta(-1.0).pow(-mu);
    }
    if (!unit) e = e / SolutionExpr::theta(1.0 / alpha);
    r.expr = e;
    r.catalog.add(q, 1.0, SpiralDirection::FullZ, q_order);
    r.catalog.add(q, -1.0, SpiralDirection::FullZ, -mu);
    if (!unit) r.catalog.add(q, alpha, SpiralDirection::FullZ, -1);
    return r;
}

// prod over family members of the q-analog Weierstrass factors, with their
// zero spirals a q^{N*}.
inline SolveResult family_product(const QParameter& q, const ZeroFamily& fam) {
    SolveResult r{SolutionExpr::constant(1.0), {}};
    SolutionExpr e = SolutionExpr::constant(1.0);
    for (const auto& p : fam.points) {
        e = e * SolutionExpr::fa(p.location).pow(p.multiplicity);
        r.catalog.add(q, p.location, SpiralDirection::PosNStar, p.multiplicity);
    }
    for (const auto& b : fam.builtins) {
        for (const auto& p : b.members()) {
            e = e * SolutionExpr::modified_elementary(q, p.location, b.genus()).pow(p.multiplicity);
            r.catalog.add(q, p.location, SpiralDirection::PosNStar, p.multiplicity);
        }
    }
    r.expr = e;
    return r;
}

} // namespace detail

// Entire coefficient; an entire solution exists exactly when h(0) = 1. The
// four proof cases (no zeros / zero only at 0 / finitely many / countable)
// all reduce to prefactor * family product * e^{G_g}.
inline SolveResult solve_entire(const QParameter& q, const FactoredForm& h) {
    h.validate();
    if (h.mu0 < 0 || !h.poles.empty())
        throw InvalidInput("solve_entire requires mu0 >= 0 and no pole family");
    SolveResult pre = detail::theta_prefactor(q, h.alpha, h.mu0);
    SolveResult fam = detail::family_product(q, h.zeros);
    SolutionExpr e = pre.expr * fam.expr;
    if (!h.exp_part.is_zero()) e = e * SolutionExpr::series_exp(g_transform(q, h.exp_part));
    pre.catalog.extend(fam.catalog);
    return {e, pre.catalog};
}

// Meromorphic-on-C coefficient: m = alpha x^mu h1/h2 with h1(0) = h2(0) = 1.
inline SolveResult solve_mer_c(const QParameter& q, const FactoredForm& m) {
    m.validate();
    FactoredForm h1;
    h1.zeros = m.zeros;
    h1.exp_part = m.exp_part;
    FactoredForm h2;
    h2.zeros = m.poles;
    SolveResult pre = detail::theta_prefactor(q, m.alpha, m.mu0);
    SolveResult H1 = detail::family_product(q, m.zeros);
    SolveResult H2 = detail::family_product(q, m.poles);
    SolutionExpr e = pre.expr * H1.expr;
    if (!m.exp_part.is_zero()) e = e * SolutionExpr::series_exp(g_transform(q, m.exp_part));
    if (!m.poles.empty()) e = e / H2.expr;
    pre.catalog.extend(H1.catalog);
    pre.catalog.extend(H2.catalog.negated());
    return {e, pre.catalog};
}

// Meromorphic-on-C* coefficient in Birkhoff shape. The inner factor enters
// the solution at argument q/x; its spirals invert accordingly (half spirals
// about infinity become the a q^{-N} spirals of Tables 4-5).
inline SolveResult solve_mer_cstar(const QParameter& q, const LaurentFactoredForm& m,
                                   double rho, double rho_prime) {
    const LaurentFactoredForm split = split_at_modulus(m, rho, rho_prime);
    SolveResult pre = detail::theta_prefactor(q, split.alpha, split.v);
    SolveResult M0 = solve_mer_c(q, split.outer);
    SolveResult Minf = solve_mer_c(q, split.inner.reciprocal());
    SolutionExpr e = pre.expr * M0.expr;
    if (!split.inner.is_one()) e = e * SolutionExpr::arg_inverse(Minf.expr);
    pre.catalog.extend(M0.catalog);
    pre.catalog.extend(Minf.catalog.arg_inverted(q));
    return {e, pre.catalog};
}

// Convenience dispatch over the two coefficient classes.
inline SolveResult solve_homogeneous(const QParameter& q, const Coefficient& m, double rho = 1.0,
                                     double rho_prime = 1.0) {
    if (std::holds_alternative<FactoredForm>(m)) return solve_mer_c(q, std::get<FactoredForm>(m));
    return solve_mer_cstar(q, std::get<LaurentFactoredForm>(m), rho, rho_prime);
}

} // namespace qdiff
