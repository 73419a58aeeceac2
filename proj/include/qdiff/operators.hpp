#pragma once

// Order-n q-difference operators delta = m_0 + m_1 sigma_q + ... + m_n sigma_q^n,
// their Newton polygons (lower convex hull of the coefficient valuations,
// slopes counted with horizontal-projection multiplicity), verification of
// supplied first-order factorizations, and cascade solving of factored chains:
// the first-listed factor is solved homogeneously and each stage's solution
// feeds the next stage as its inhomogeneity, the last factor solved last.

#include <functional>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

#include "qdiff/coefficient.hpp"
#include "qdiff/inhomogeneous.hpp"
#include "qdiff/rational.hpp"

namespace qdiff {

using OperatorCoefficient = std::variant<RationalFunction, FactoredForm>;

inline bool coeff_is_zero(const OperatorCoefficient& c) {
    const RationalFunction* r = std::get_if<RationalFunction>(&c);
    return r && r->is_zero();
}

inline cplx coeff_eval(const OperatorCoefficient& c, cplx x) {
    if (const RationalFunction* r = std::get_if<RationalFunction>(&c)) return r->eval(x);
    return std::get<FactoredForm>(c).eval(x);
}

inline int coeff_valuation(const OperatorCoefficient& c) {
    if (const RationalFunction* r = std::get_if<RationalFunction>(&c)) return r->valuation();
    return std::get<FactoredForm>(c).mu0;
}

struct QDifferenceOperator {
    std::vector<OperatorCoefficient> coeffs; // index j multiplies y(q^j x)

    int order() const { return int(coeffs.size()) - 1; }

    void validate() const {
        if (order() < 1) throw InvalidInput("operator order must be >= 1");
        if (coeff_is_zero(coeffs.front()) || coeff_is_zero(coeffs.back()))
            throw InvalidInput("m_0 and m_n must not vanish identically");
    }

    cplx apply(const std::function<cplx(cplx)>& y, const QParameter& q, cplx x) const {
        cplx acc = 0.0;
        cplx arg = x;
        for (const auto& c : coeffs) {
            if (!coeff_is_zero(c)) acc += coeff_eval(c, x) * y(arg);
            arg *= q.q();
        }
        return acc;
    }
};

struct RationalSlope {
    long long num = 0;
    long long den = 1;

    RationalSlope() = default;
    RationalSlope(long long n, long long d) : num(n), den(d) {
        if (den == 0) throw InvalidInput("slope with zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    bool is_integer() const { return den == 1; }
    double value() const { return double(num) / double(den); }
    bool operator==(const RationalSlope& o) const { return num == o.num && den == o.den; }
};

struct NewtonPolygon {
    std::vector<std::pair<int, int>> support;       // (j, val(m_j)) for m_j != 0
    std::vector<std::pair<int, int>> hull_vertices; // lower convex hull, left to right
    std::vector<std::pair<RationalSlope, int>> slopes; // nondecreasing, with multiplicity
};

inline NewtonPolygon newton_polygon(const QDifferenceOperator& op) {
    op.validate();
    NewtonPolygon np;
    for (int j = 0; j <= op.order(); ++j)
        if (!coeff_is_zero(op.coeffs[std::size_t(j)]))
            np.support.emplace_back(j, coeff_valuation(op.coeffs[std::size_t(j)]));

    // Andrew's monotone chain, lower hull only (support is sorted by j).
    auto cross = [](std::pair<int, int> o, std::pair<int, int> a, std::pair<int, int> b) {
        return (long long)(a.first - o.first) * (b.second - o.second) -
               (long long)(a.second - o.second) * (b.first - o.first);
    };
    for (const auto& p : np.support) {
        auto& h = np.hull_vertices;
        while (h.size() >= 2 && cross(h[h.size() - 2], h.back(), p) <= 0) h.pop_back();
        h.push_back(p);
    }
    for (std::size_t i = 1; i < np.hull_vertices.size(); ++i) {
        const auto& a = np.hull_vertices[i - 1];
        const auto& b = np.hull_vertices[i];
        np.slopes.emplace_back(RationalSlope(b.second - a.second, b.first - a.first),
                               b.first - a.first);
    }
    return np;
}

// x^k sigma_q - alpha * cofactor(x): the stage coefficient of the associated
// homogeneous equation is alpha x^{-k} cofactor(x).
struct FirstOrderFactor {
    int k = 0;
    cplx alpha = 1.0;
    FactoredForm cofactor = FactoredForm::one();

    FactoredForm stage_coefficient() const {
        if (alpha == 0.0) throw SemanticError("factor alpha must be nonzero");
        FactoredForm m = cofactor;
        m.alpha *= alpha;
        m.mu0 -= k;
        return m;
    }
};

struct FactorizationReport {
    double max_rel_discrepancy = 0.0;
    cplx worst_point = 0.0;
    int evaluated = 0;
    int skipped = 0;
    bool pass = false;
};

namespace detail {

inline std::function<cplx(cplx)> compose_factors(const std::vector<FirstOrderFactor>& factors,
                                                 const QParameter& q,
                                                 std::function<cplx(cplx)> y) {
    std::function<cplx(cplx)> w = std::move(y);
    for (std::size_t i = factors.size(); i-- > 0;) {
        const FirstOrderFactor f = factors[i];
        std::function<cplx(cplx)> inner = w;
        w = [f, inner, &q](cplx x) -> cplx {
            const cplx shift = std::pow(x, cplx(double(f.k), 0.0)) * inner(q.q() * x);
            return shift - f.alpha * f.cofactor.eval(x) * inner(x);
        };
    }
    return w;
}

} // namespace detail

// Applies the composed factored operator and the original operator to a probe
// family (monomials x^s plus theta quotients, which are not sigma_q
// eigenvectors) over the grid; PASS iff the max relative discrepancy <= 1e-9.
inline FactorizationReport verify_factorization(const QDifferenceOperator& op,
                                                const std::vector<FirstOrderFactor>& factors,
                                                const QParameter& q,
                                                const std::vector<cplx>& grid,
                                                cplx leading = 1.0,
                                                const TruncationPolicy& pol = {}) {
    op.validate();
    if (int(factors.size()) != op.order())
        throw InvalidInput("factor count must equal the operator order");

    std::vector<std::function<cplx(cplx)>> probes;
    for (int s = -9; s <= 10; ++s)
        probes.push_back([s](cplx x) { return std::pow(x, cplx(double(s), 0.0)); });
    probes.push_back([&q, pol](cplx x) { return theta_eval(q, x, pol); });
    probes.push_back([&q, pol](cplx x) { return theta_eval(q, 2.0 * x, pol); });
    probes.push_back(
        [&q, pol](cplx x) { return theta_eval(q, x, pol) / theta_eval(q, x / 3.0, pol); });
    probes.push_back(
        [&q, pol](cplx x) { return theta_eval(q, 2.0 * x, pol) / theta_eval(q, -x, pol); });

    FactorizationReport rep;
    for (const auto& probe : probes) {
        const auto composed = detail::compose_factors(factors, q, probe);
        for (const cplx& x : grid) {
            if (x == 0.0) {
                ++rep.skipped;
                continue;
            }
            cplx a, b;
            try {
                a = leading * composed(x);
                b = op.apply(probe, q, x);
            } catch (const Error&) {
                ++rep.skipped;
                continue;
            }
            if (!finite(a) || !finite(b)) {
                ++rep.skipped;
                continue;
            }
            const double rel = std::abs(a - b) / (1.0 + std::abs(a) + std::abs(b));
            ++rep.evaluated;
            if (rel > rep.max_rel_discrepancy) {
                rep.max_rel_discrepancy = rel;
                rep.worst_point = x;
            }
        }
    }
    if (rep.evaluated == 0) throw EvaluationFailure("all probe evaluations failed");
    rep.pass = rep.max_rel_discrepancy <= 1e-9;
    return rep;
}

inline std::vector<cplx> default_probe_grid(unsigned seed = 42, int count = 40,
                                            double r_min = 0.3, double r_max = 3.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ur(std::log(r_min), std::log(r_max));
    std::uniform_real_distribution<double> ua(0.0, 2.0 * std::numbers::pi);
    std::vector<cplx> grid;
    for (int i = 0; i < count; ++i) grid.push_back(std::polar(std::exp(ur(rng)), ua(rng)));
    return grid;
}

// Constant-coefficient slope-0 operators factor through the roots of the
// characteristic polynomial sum m_j(0) lambda^j; the general factorization
// algorithm is out of scope and factorizations are otherwise user-supplied.
struct AutoFactorization {
    std::vector<FirstOrderFactor> factors;
    cplx leading = 1.0; // m_n(0); the composed factors are monic
};

inline AutoFactorization auto_factor_constant(const QDifferenceOperator& op) {
    op.validate();
    std::vector<cplx> char_coeffs;
    for (int j = 0; j <= op.order(); ++j) {
        const auto& c = op.coeffs[std::size_t(j)];
        if (coeff_is_zero(c)) {
            char_coeffs.push_back(0.0);
            continue;
        }
        if (coeff_valuation(c) != 0)
            throw UnsupportedInput("auto factorization covers constant coefficients only");
        // constant means no x-dependence at all
        if (const RationalFunction* r = std::get_if<RationalFunction>(&c)) {
            if (r->num().degree() > 0 || r->den().degree() > 0)
                throw UnsupportedInput("auto factorization covers constant coefficients only");
        } else if (!std::get<FactoredForm>(c).zeros.empty() ||
                   !std::get<FactoredForm>(c).poles.empty() ||
                   !std::get<FactoredForm>(c).exp_part.is_zero() ||
                   std::get<FactoredForm>(c).mu0 != 0) {
            throw UnsupportedInput("auto factorization covers constant coefficients only");
        }
        char_coeffs.push_back(coeff_eval(c, 0.0));
    }
    AutoFactorization out;
    out.leading = char_coeffs.back();
    Polynomial cp(std::move(char_coeffs));
    for (const auto& root : polynomial_roots(cp)) {
        if (std::abs(root.location) < 1e-12)
            throw SemanticError("characteristic root at 0 (m_0(0) = 0?)");
        for (int j = 0; j < root.multiplicity; ++j)
            out.factors.push_back({0, root.location, FactoredForm::one()});
    }
    return out;
}

struct CascadeResult {
    SolutionExpr expr;
    SpiralCatalog catalog; // last stage's catalog
    double captured_r_min = 0.0;
    double captured_r_max = std::numeric_limits<double>::infinity();
    std::vector<SolutionExpr> stage_solutions;
};

// delta = F_1 F_2 ... F_n with F_j = x^{k_j} sigma_q - alpha_j cof_j(x):
// solve F_1 v_1 = 0 homogeneously, then each F_j v_j = v_{j-1}, i.e.
//   v_j(qx) = alpha_j x^{-k_j} cof_j(x) v_j(x) + x^{-k_j} v_{j-1}(x).
inline CascadeResult cascade_solve(const std::vector<FirstOrderFactor>& factors,
                                   const QParameter& q, const RhoSet& rhos = {},
                                   const ExtractionOptions& opts = {}) {
    if (factors.empty()) throw InvalidInput("cascade needs at least one factor");
    CascadeResult out;
    SolveResult stage = solve_mer_c(q, factors.front().stage_coefficient());
    out.stage_solutions.push_back(stage.expr);
    SolutionExpr prev = stage.expr;
    SpiralCatalog prev_cat = stage.catalog;

    for (std::size_t i = 1; i < factors.size(); ++i) {
        const FirstOrderFactor& f = factors[i];
        const FactoredForm m = f.stage_coefficient();
        const TruncationPolicy pol = opts.pol;
        const int k = f.k;
        const auto r_eval = [prev, &q, pol, k](cplx x) {
            const cplx shift = k == 0 ? cplx(1.0) : std::pow(x, cplx(-double(k), 0.0));
            return shift * prev.eval(q, x, pol);
        };
        // Each later stage samples this stage's solution on its own extraction
        // contours, which reach beyond the verification annulus; widen the
        // working annulus of earlier stages so their captured rings cover
        // everything the rest of the chain will evaluate.
        ExtractionOptions stage_opts = opts;
        const double spread = std::pow(2.5 * q.abs_q(), double(factors.size() - 1 - i));
        stage_opts.annulus_min = opts.annulus_min / spread;
        stage_opts.annulus_max =
            (opts.annulus_max > 0.0 ? opts.annulus_max : 10.0 * q.abs_q()) * spread;
        // the x^{-k} prefactor only shifts the order at 0; spirals carry over
        InhomogeneousResult sol = solve_inhomogeneous_general(q, Coefficient(m), r_eval, prev_cat,
                                                              {}, rhos, stage_opts);
        out.stage_solutions.push_back(sol.expr);
        prev = sol.expr;
        prev_cat = sol.catalog;
        out.captured_r_min = std::max(out.captured_r_min, sol.captured_r_min);
        out.captured_r_max = std::min(out.captured_r_max, sol.captured_r_max);
    }
    out.expr = prev;
    out.catalog = prev_cat;
    return out;
}

// Pointwise order-n residual |sum_j m_j(x) Y(q^j x)| / sum_j |m_j(x) Y(q^j x)|.
inline ResidualReport operator_residual(const QDifferenceOperator& op, const QParameter& q,
                                        const SolutionExpr& Y, Annulus annulus, int n_points,
                                        const GuardSet& guards, const TruncationPolicy& pol = {},
                                        unsigned seed = 42) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ua(0.0, 2.0 * std::numbers::pi);
    ResidualReport rep;
    const int n = op.order();
    for (int i = 0; i < n_points; ++i) {
        const double t = n_points == 1 ? 0.5 : double(i) / double(n_points - 1);
        const double radius = std::exp(std::log(annulus.r_min) +
                                       t * (std::log(annulus.r_max) - std::log(annulus.r_min)));
        const cplx x = std::polar(radius, ua(rng));
        bool ok = true;
        for (int j = 0; j <= n; ++j)
            ok &= guards.clear(q, x * std::pow(q.q(), cplx(double(j), 0.0)));
        if (!ok) {
            ++rep.points_skipped;
            continue;
        }
        cplx acc = 0.0;
        double scale = 0.0;
        try {
            cplx arg = x;
            for (int j = 0; j <= n; ++j) {
                const auto& c = op.coeffs[std::size_t(j)];
                if (!coeff_is_zero(c)) {
                    const cplx term = coeff_eval(c, x) * Y.eval(q, arg, pol);
                    acc += term;
                    scale += std::abs(term);
                }
                arg *= q.q();
            }
        } catch (const Error&) {
            ++rep.points_skipped;
            continue;
        }
        if (!(scale > 0.0)) {
            ++rep.points_skipped;
            continue;
        }
        const double res = std::abs(acc) / scale;
        ++rep.points_tested;
        if (res > rep.max_rel_residual) {
            rep.max_rel_residual = res;
            rep.worst_point = x;
        }
    }
    if (rep.points_tested == 0) throw AllPointsSkipped("operator residual: no testable points");
    return rep;
}

} // namespace qdiff
