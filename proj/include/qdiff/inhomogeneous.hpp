#pragma once

// Solving y(qx) = m(x) y(x) + r(x): change of unknown y = M z against the
// homogeneous solution M, additive decomposition of R = M(qx)^{-1} r(x) into
//   R_0(x) + alpha + R_inf(1/x)
// with poles binned by modulus, and the three-part solution
//   z = sum_{n>=1} R_0(p^n x)  +  alpha x Theta'/Theta  -  sum_{n>=0} R_inf(p^n/x).
//
// Rational R decomposes exactly through partial fractions. For cascades R is
// a quotient of solution expressions; its principal parts at the finitely
// many predicted poles inside the working annulus are extracted by contour
// quadrature, and the regular remainder is captured by a two-sided numeric
// Laurent expansion on a circle inside the pole-free gap annulus (the
// positive tail joins R_0, the constant joins alpha, the negative tail joins
// R_inf as a polynomial in 1/x).

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "qdiff/homogeneous.hpp"
#include "qdiff/rational.hpp"
#include "qdiff/solution.hpp"
#include "qdiff/verify.hpp"

namespace qdiff {

struct AdditiveDecomposition {
    RationalFunction r0;    // analytic at 0, r0(0) = 0, poles of modulus > rho
    cplx alpha = 0.0;
    RationalFunction r_inf; // in u = 1/x; r_inf(0) = 0, poles of x->r_inf(1/x) <= rho
    double rho = 1.0;
    // pole metadata (kept exact when built by additive_decompose)
    std::vector<RootWithMultiplicity> poles_r0;
    std::vector<RootWithMultiplicity> poles_rinf; // locations in u

    static bool vanishes_at_zero(const RationalFunction& f) {
        if (f.is_zero()) return true;
        if (f.den().valuation() != 0) return false;
        return std::abs(f.num().coeff(0)) <= 1e-9 * (1.0 + f.num().max_abs_coeff());
    }

    void validate() const {
        if (!vanishes_at_zero(r0)) throw InvalidInput("additive decomposition: r0(0) != 0");
        if (!vanishes_at_zero(r_inf)) throw InvalidInput("additive decomposition: r_inf(0) != 0");
    }

    cplx reconstruct(cplx x) const { return r0.eval(x) + alpha + r_inf.eval(1.0 / x); }
};

namespace detail {

// P(1/u) for a principal part P at pole a != 0:
//   sum_j c_j / (1/u - a)^j = sum_j c_j u^j / (1 - a u)^j, rational in u,
// vanishing at u = 0.
inline RationalFunction principal_part_in_inverse(const PrincipalPart& p) {
    // common denominator (1 - a u)^J; numerator sum_j c_j u^j (1 - a u)^{J-j}
    const std::size_t J = p.coeffs.size();
    const Polynomial lin{1.0, -p.pole};
    std::vector<Polynomial> lin_pows{Polynomial{1.0}};
    for (std::size_t j = 1; j <= J; ++j) lin_pows.push_back(lin_pows.back() * lin);
    Polynomial num;
    Polynomial u_pow{1.0};
    for (std::size_t j = 1; j <= J; ++j) {
        u_pow = u_pow * Polynomial{0.0, 1.0};
        if (p.coeffs[j - 1] != 0.0) num = num + u_pow * lin_pows[J - j] * p.coeffs[j - 1];
    }
    return {std::move(num), lin_pows[J]};
}

inline RationalFunction principal_part_rational(const PrincipalPart& p) {
    // common denominator (x - a)^J; numerator sum_j c_j (x - a)^{J-j}
    const std::size_t J = p.coeffs.size();
    const Polynomial lin{-p.pole, 1.0};
    std::vector<Polynomial> lin_pows{Polynomial{1.0}};
    for (std::size_t j = 1; j <= J; ++j) lin_pows.push_back(lin_pows.back() * lin);
    Polynomial num;
    for (std::size_t j = 1; j <= J; ++j)
        if (p.coeffs[j - 1] != 0.0) num = num + lin_pows[J - j] * p.coeffs[j - 1];
    return {std::move(num), lin_pows[J]};
}

} // namespace detail

// Exact Mittag-Leffler-style split of a rational function by pole modulus.
// Poles at 0 are carried as Laurent terms into r_inf; the polynomial part
// splits between r0 (positive powers) and alpha (constant).
inline AdditiveDecomposition additive_decompose(const RationalFunction& R, double rho,
                                                const std::vector<RootWithMultiplicity>* known_poles = nullptr) {
    if (!(rho > 0.0)) throw InvalidInput("additive_decompose: rho must be positive");
    AdditiveDecomposition dec;
    dec.rho = rho;
    if (R.is_zero()) return dec;

    const PartialFractions pf = partial_fractions(R, known_poles);

    // polynomial part: constant -> alpha, higher powers -> r0
    if (!pf.poly_part.is_zero()) {
        dec.alpha += pf.poly_part.coeff(0);
        std::vector<cplx> rest = pf.poly_part.coeffs();
        if (!rest.empty()) rest[0] = 0.0;
        Polynomial high(rest);
        if (!high.is_zero()) dec.r0 = dec.r0 + RationalFunction::from_poly(high);
    }

    for (const auto& part : pf.parts) {
        const double mod = std::abs(part.pole);
        if (mod < 1e-12) {
            // pole at the origin: negative powers become positive powers of u
            std::vector<cplx> u_coeffs(part.coeffs.size() + 1, 0.0);
            for (std::size_t j = 1; j <= part.coeffs.size(); ++j)
                u_coeffs[j] = part.coeffs[j - 1];
            dec.r_inf = dec.r_inf + RationalFunction::from_poly(Polynomial(std::move(u_coeffs)));
            continue;
        }
        if (std::abs(mod - rho) < 1e-9 * (1.0 + rho))
            throw TieAtThreshold("pole modulus ties rho; perturb the threshold");
        if (mod > rho) {
            RationalFunction pp = detail::principal_part_rational(part);
            const cplx at0 = part.eval_at_zero();
            dec.r0 = dec.r0 + pp - RationalFunction::from_poly(Polynomial{at0});
            dec.alpha += at0;
            dec.poles_r0.push_back({part.pole, part.order()});
        } else {
            dec.r_inf = dec.r_inf + detail::principal_part_in_inverse(part);
            dec.poles_rinf.push_back({1.0 / part.pole, part.order()});
        }
    }
    dec.validate();
    return dec;
}

// sum_{n>=1} r(p^n x), the solution of y(qx) = y(x) + r(x) for r analytic at
// 0 with r(0) = 0.
inline cplx tail_series_eval(const RationalFunction& r, const QParameter& q, cplx x,
                             const TruncationPolicy& pol = {}) {
    if (!r.is_zero() && (r.den().valuation() != 0 || std::abs(r.eval(0.0)) > 1e-12))
        throw InvalidInput("tail_series_eval: r must be analytic at 0 with r(0) = 0");
    return SolutionExpr::tail_sum(r).eval(q, x, pol);
}

// Three-part assembly z = z0 + z_alpha + z_inf(q/x), with the pole catalog
//   q^Z (order <= 1, iff alpha != 0), a q^{N*} for poles of r0, a q^{-N} for
//   poles of x -> r_inf(1/x).
inline SolveResult solve_additive(const AdditiveDecomposition& dec, const QParameter& q) {
    dec.validate();
    SolveResult out{SolutionExpr::constant(0.0), {}};
    std::vector<cplx> r0_poles, rinf_poles;
    for (const auto& b : dec.poles_r0) r0_poles.push_back(b.location);
    for (const auto& u : dec.poles_rinf) rinf_poles.push_back(u.location);
    SolutionExpr z = SolutionExpr::constant(0.0);
    if (!dec.r0.is_zero()) z = z + SolutionExpr::tail_sum(dec.r0, 0, r0_poles);
    if (dec.alpha != 0.0) {
        z = z + SolutionExpr::theta_log_deriv(dec.alpha);
        out.catalog.add(q, 1.0, SpiralDirection::FullZ, -1);
    }
    if (!dec.r_inf.is_zero())
        z = z + SolutionExpr::constant(-1.0) *
                    SolutionExpr::arg_inverse(SolutionExpr::tail_sum(dec.r_inf, 0, rinf_poles));
    out.expr = z;

    std::vector<RootWithMultiplicity> p0 = dec.poles_r0;
    if (p0.empty() && !dec.r0.is_zero() && dec.r0.den().degree() >= 1)
        p0 = polynomial_roots(dec.r0.den());
    for (const auto& b : p0) out.catalog.add(q, b.location, SpiralDirection::PosNStar, -b.multiplicity);

    std::vector<RootWithMultiplicity> pinf = dec.poles_rinf;
    if (pinf.empty() && !dec.r_inf.is_zero() && dec.r_inf.den().degree() >= 1)
        pinf = polynomial_roots(dec.r_inf.den());
    for (const auto& u0 : pinf)
        out.catalog.add(q, 1.0 / u0.location, SpiralDirection::NegN, -u0.multiplicity);
    return out;
}

struct RhoSet {
    double rho = 0.05;
    double rho_prime = 1.0;
    double rho_second = 1.0;
};

// Y = M z plus the annulus on which the extracted decomposition reproduces R
// (bounded by the nearest non-extracted predicted poles). Verifying the
// functional equation outside this ring is meaningless and is rejected with
// AnnulusTooSmall by the residual helper.
struct InhomogeneousResult {
    SolutionExpr expr;
    SpiralCatalog catalog;
    double captured_r_min = 0.0;
    double captured_r_max = std::numeric_limits<double>::infinity();
};

struct ExtractionOptions {
    double annulus_min = 0.1;
    double annulus_max = 0.0; // 0: defaults to 10 |q|
    int contour_nodes = 256;
    int laurent_terms = 48;
    int laurent_nodes = 512;
    TruncationPolicy pol{};
};

namespace detail {

// Signed zero/pole-order prediction for R = r / M(qx): catalog spirals plus
// isolated points, with memberships summed.
struct OrderPrediction {
    SpiralCatalog spirals;
    std::vector<RootWithMultiplicity> points; // signed multiplicity

    int order_at(const QParameter& q, cplx x) const {
        int o = spirals.order_at(q, x);
        for (const auto& p : points)
            if (std::abs(x - p.location) <= 1e-9 * (1.0 + std::abs(p.location)))
                o += p.multiplicity;
        return o;
    }

    // distinct support points with modulus in [r_min, r_max]
    std::vector<cplx> support_in(const QParameter& q, double r_min, double r_max) const {
        std::vector<cplx> pts = spirals.support_points_in(q, r_min, r_max);
        for (const auto& p : points) {
            const double m = std::abs(p.location);
            if (m >= r_min && m <= r_max) pts.push_back(p.location);
        }
        std::vector<cplx> uniq;
        for (const auto& p : pts) {
            bool dup = false;
            for (const auto& u : uniq) dup |= std::abs(u - p) <= 1e-9 * (1.0 + std::abs(p));
            if (!dup) uniq.push_back(p);
        }
        return uniq;
    }
};

inline double distance_to_nearest(const std::vector<cplx>& pts, cplx x, double exclude_below) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
        const double d = std::abs(p - x);
        if (d > exclude_below) best = std::min(best, d);
    }
    return best;
}

// Laurent coefficients c_{-J}..c_{-1} of F at pole b by trapezoid quadrature
// on |x - b| = radius.
inline std::vector<cplx> extract_principal_coeffs(const std::function<cplx(cplx)>& F, cplx b,
                                                  double radius, int order, int nodes) {
    std::vector<cplx> coeffs(std::size_t(order), 0.0);
    for (int k = 0; k < nodes; ++k) {
        const double th = 2.0 * std::numbers::pi * double(k) / double(nodes);
        const cplx e = std::polar(1.0, th);
        const cplx fv = F(b + radius * e);
        cplx w = e; // e^{i theta} * (rho e^{i theta})^{j-1} accumulates below
        double rj = 1.0;
        for (int j = 1; j <= order; ++j) {
            coeffs[std::size_t(j - 1)] += fv * w * rj;
            w *= e;
            rj *= radius;
        }
    }
    for (int j = 1; j <= order; ++j) coeffs[std::size_t(j - 1)] *= radius / double(nodes);
    return coeffs;
}

} // namespace detail

// General inhomogeneous solve with an arbitrary evaluable right-hand side
// whose zero/pole structure is known (catalog for solution expressions,
// num/den roots for rationals). Returns Y = M z and its pole
// catalog: support-exact, with conservative orders on collided spirals.
inline InhomogeneousResult solve_inhomogeneous_general(
    const QParameter& q, const Coefficient& m, const std::function<cplx(cplx)>& r_eval,
    const SpiralCatalog& r_structure, const std::vector<RootWithMultiplicity>& r_points,
    const RhoSet& rhos, const ExtractionOptions& opts = {}) {
    const double r_lo = opts.annulus_min;
    const double r_hi = opts.annulus_max > 0.0 ? opts.annulus_max : 10.0 * q.abs_q();
    if (!(r_lo > 0.0) || !(r_hi > r_lo)) throw InvalidInput("bad working annulus");

    SolveResult hom = solve_homogeneous(q, m, rhos.rho_prime, rhos.rho_second);
    const SolutionExpr M = hom.expr;

    // R(x) = r(x) / M(qx)
    const auto R = [&, M](cplx x) { return r_eval(x) / M.eval(q, q.q() * x, opts.pol); };

    // predicted signed order of R: r's structure minus M(qx)'s structure
    detail::OrderPrediction pred;
    pred.spirals = hom.catalog.dilated_down(q).negated();
    pred.spirals.extend(r_structure);
    pred.points = r_points;

    // include just-outside-annulus singular points so extraction contours and
    // the Laurent circle keep clear of them
    const auto support = pred.support_in(q, r_lo / (1.5 * q.abs_q()), r_hi * 1.5 * q.abs_q());

    // principal parts at predicted poles inside the working annulus
    std::vector<PrincipalPart> parts;
    for (const auto& b : pred.support_in(q, r_lo, r_hi)) {
        const int signed_order = pred.order_at(q, b);
        if (signed_order >= 0) continue;
        const int order = -signed_order;
        const double gap = detail::distance_to_nearest(support, b, 1e-9 * (1.0 + std::abs(b)));
        const double radius = 0.5 * std::min(gap, std::abs(b));
        if (!(radius > 0.0)) throw ContourTooClose("predicted poles of R collide");
        PrincipalPart pp;
        pp.pole = b;
        pp.coeffs = detail::extract_principal_coeffs(R, b, radius, order, opts.contour_nodes);
        parts.push_back(std::move(pp));
    }

    // Two-sided Laurent expansion of the regular remainder. Quadrature
    // rounding in a coefficient c_n taken on a circle of radius s enters the
    // reconstruction as eps * (|x|/s)^n, so the positive tail is read off a
    // circle near the outer rim of the working annulus and the negative tail
    // near the inner rim; both circles are placed to maximize clearance from
    // every predicted singular point.
    // prefer_high widens the captured ring: among circles within 80% of the
    // best clearance, take the outermost (resp. innermost).
    const auto pick_circle = [&](double lo, double hi, bool prefer_high) {
        std::vector<double> scores(97);
        double best_score = -1.0;
        for (int k = 0; k <= 96; ++k) {
            const double s = lo * std::pow(hi / lo, double(k) / 96.0);
            double score = std::numeric_limits<double>::infinity();
            for (const auto& p : support) score = std::min(score, std::abs(std::abs(p) - s) / s);
            scores[std::size_t(k)] = score;
            best_score = std::max(best_score, score);
        }
        if (prefer_high) {
            for (int k = 96; k >= 0; --k)
                if (scores[std::size_t(k)] >= 0.8 * best_score)
                    return lo * std::pow(hi / lo, double(k) / 96.0);
        } else {
            for (int k = 0; k <= 96; ++k)
                if (scores[std::size_t(k)] >= 0.8 * best_score)
                    return lo * std::pow(hi / lo, double(k) / 96.0);
        }
        return std::sqrt(lo * hi);
    };
    const double s_mid = std::sqrt(r_lo * r_hi);
    const double s_minus = pick_circle(r_lo * 1.05, std::min(4.0 * r_lo, s_mid), false);
    const double s_plus = pick_circle(std::max(r_hi / 4.0, s_mid), r_hi * 0.95, true);

    std::vector<cplx> cpos(std::size_t(opts.laurent_terms) + 1, 0.0); // c_0..c_N
    std::vector<cplx> cneg(std::size_t(opts.laurent_terms), 0.0);     // c_{-1}..c_{-N}
    const auto accumulate = [&](double s, bool positive) {
        for (int k = 0; k < opts.laurent_nodes; ++k) {
            const double th = 2.0 * std::numbers::pi * double(k) / double(opts.laurent_nodes);
            const cplx x = std::polar(s, th);
            cplx reg = R(x);
            for (const auto& p : parts) reg -= p.eval(x);
            if (positive) {
                const cplx em = std::exp(cplx(0.0, -th));
                cplx w = 1.0;
                for (int n = 0; n <= opts.laurent_terms; ++n) {
                    cpos[std::size_t(n)] += reg * w;
                    w *= em;
                }
            } else {
                const cplx ep = std::exp(cplx(0.0, th));
                cplx w = ep;
                for (int n = 1; n <= opts.laurent_terms; ++n) {
                    cneg[std::size_t(n - 1)] += reg * w;
                    w *= ep;
                }
            }
        }
    };
    accumulate(s_plus, true);
    accumulate(s_minus, false);
    for (int n = 0; n <= opts.laurent_terms; ++n)
        cpos[std::size_t(n)] *= std::pow(s_plus, -double(n)) / double(opts.laurent_nodes);
    for (int n = 1; n <= opts.laurent_terms; ++n)
        cneg[std::size_t(n - 1)] *= std::pow(s_minus, double(n)) / double(opts.laurent_nodes);

    // Assemble z by superposition, one tail node per principal part plus one
    // per Laurent tail. Keeping the parts separate avoids expanding a huge
    // common-denominator rational whose coefficients would be ill-scaled.
    SolutionExpr z = SolutionExpr::constant(0.0);
    SpiralCatalog zcat;
    cplx alpha = cpos[0];
    double coeff_scale = 0.0;
    for (const auto& c : cpos) coeff_scale = std::max(coeff_scale, std::abs(c));
    for (const auto& c : cneg) coeff_scale = std::max(coeff_scale, std::abs(c));
    {
        std::vector<cplx> highs = cpos;
        highs[0] = 0.0;
        Polynomial high(std::move(highs));
        if (!high.is_zero())
            z = z + SolutionExpr::tail_sum(RationalFunction::from_poly(high));
        std::vector<cplx> lows(cneg.size() + 1, 0.0);
        for (std::size_t n = 0; n < cneg.size(); ++n) lows[n + 1] = cneg[n];
        Polynomial low(std::move(lows));
        if (!low.is_zero())
            z = z + SolutionExpr::constant(-1.0) *
                        SolutionExpr::arg_inverse(
                            SolutionExpr::tail_sum(RationalFunction::from_poly(low)));
    }
    for (const auto& p : parts) {
        const double mod = std::abs(p.pole);
        if (std::abs(mod - rhos.rho) < 1e-9 * (1.0 + rhos.rho))
            throw TieAtThreshold("extracted pole modulus ties rho");
        for (const auto& c : p.coeffs) coeff_scale = std::max(coeff_scale, std::abs(c));
        if (mod > rhos.rho) {
            const cplx at0 = p.eval_at_zero();
            RationalFunction piece = detail::principal_part_rational(p) -
                                     RationalFunction::from_poly(Polynomial{at0});
            z = z + SolutionExpr::tail_sum(piece, 0, {p.pole});
            alpha += at0;
            zcat.add(q, p.pole, SpiralDirection::PosNStar, -p.order());
        } else {
            z = z + SolutionExpr::constant(-1.0) *
                        SolutionExpr::arg_inverse(SolutionExpr::tail_sum(
                            detail::principal_part_in_inverse(p), 0, {1.0 / p.pole}));
            zcat.add(q, p.pole, SpiralDirection::NegN, -p.order());
        }
    }
    if (std::abs(alpha) > 1e-12 * (1.0 + coeff_scale)) {
        z = z + SolutionExpr::theta_log_deriv(alpha);
        zcat.add(q, 1.0, SpiralDirection::FullZ, -1);
    }

    InhomogeneousResult out{M * z, {}, 0.0, std::numeric_limits<double>::infinity()};
    out.catalog = hom.catalog;
    out.catalog.extend(zcat);
    // ring on which the decomposition reproduces R: bounded by the nearest
    // non-extracted predicted poles and by the two expansion circles
    out.captured_r_min = s_minus;
    out.captured_r_max = s_plus;
    for (const auto& b : pred.support_in(q, r_lo * 1e-4, r_lo)) {
        if (pred.order_at(q, b) < 0 && std::abs(b) < r_lo)
            out.captured_r_min = std::max(out.captured_r_min, std::abs(b));
    }
    for (const auto& b : pred.support_in(q, r_hi, r_hi * 1e4)) {
        if (pred.order_at(q, b) < 0 && std::abs(b) > r_hi)
            out.captured_r_max = std::min(out.captured_r_max, std::abs(b));
    }
    return out;
}

// Rational right-hand side. m is the coefficient;
// the trivial cases m = 0 and r = 0 are handled by solve_inhomogeneous_null_m
// and the homogeneous solvers respectively.
inline InhomogeneousResult solve_inhomogeneous(const QParameter& q, const Coefficient& m,
                                               const RationalFunction& r, const RhoSet& rhos,
                                               const ExtractionOptions& opts = {}) {
    if (r.is_zero()) {
        SolveResult h = solve_homogeneous(q, m, rhos.rho_prime, rhos.rho_second);
        return {h.expr, h.catalog, 0.0, std::numeric_limits<double>::infinity()};
    }
    std::vector<RootWithMultiplicity> r_points;
    if (r.den().degree() >= 1) {
        for (const auto& root : polynomial_roots(r.den()))
            r_points.push_back({root.location, -root.multiplicity});
    }
    if (r.num().degree() >= 1) {
        for (const auto& root : polynomial_roots(r.num()))
            r_points.push_back({root.location, root.multiplicity});
    }
    return solve_inhomogeneous_general(
        q, m, [r](cplx x) { return r.eval(x); }, {}, r_points, rhos, opts);
}

// m identically zero: y(qx) = r(x) has the direct solution y(x) = r(x/q).
inline InhomogeneousResult solve_inhomogeneous_null_m(const QParameter& q,
                                                      const RationalFunction& r) {
    return {SolutionExpr::rational_at(r, q.p()), {}, 0.0,
            std::numeric_limits<double>::infinity()};
}

// Residual guard: refuse to verify outside the ring where the decomposition
// captures R.
inline ResidualReport inhomogeneous_residual(const QParameter& q, const InhomogeneousResult& sol,
                                             const PointFn& m, const PointFn& r, Annulus a,
                                             int n_points, const GuardSet& guards,
                                             const TruncationPolicy& pol = {},
                                             unsigned seed = 42) {
    if (a.r_min <= sol.captured_r_min || a.r_max * q.abs_q() >= sol.captured_r_max)
        throw AnnulusTooSmall("verification annulus exceeds the captured decomposition ring");
    return residual_report(q, sol.expr, m, r, a, n_points, guards, pol, seed);
}

} // namespace qdiff
