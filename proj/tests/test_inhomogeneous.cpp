#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qdiff/inhomogeneous.hpp"
#include "qdiff/parser.hpp"

using namespace qdiff;

namespace {

RationalFunction one_pole(cplx a) {
    return RationalFunction(Polynomial{1.0}, Polynomial{-a, 1.0}); // 1/(x-a)
}

std::vector<cplx> sample_points(int n, double r_min, double r_max, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ur(std::log(r_min), std::log(r_max));
    std::uniform_real_distribution<double> ua(0.0, 2.0 * std::numbers::pi);
    std::vector<cplx> out;
    for (int i = 0; i < n; ++i) out.push_back(std::polar(std::exp(ur(rng)), ua(rng)));
    return out;
}

} // namespace

TEST_CASE("additive_decompose: single outer pole") {
    const cplx a(2.0, 1.0); // |a| > 1
    auto dec = additive_decompose(one_pole(a), 1.0);
    CHECK(dec.r_inf.is_zero());
    CHECK(std::abs(dec.alpha - (-1.0 / a)) < 1e-14);
    // r0 = 1/(x-a) + 1/a
    for (cplx x : sample_points(10, 0.3, 3.0, 1)) {
        const cplx expect = 1.0 / (x - a) + 1.0 / a;
        CHECK(std::abs(dec.r0.eval(x) - expect) < 1e-13 * (1.0 + std::abs(expect)));
    }
    CHECK(std::abs(dec.r0.eval(0.0)) < 1e-14);
}

TEST_CASE("additive_decompose: entire polynomial and inner poles") {
    // entire polynomial: r0 = R - R(0), alpha = R(0)
    RationalFunction P = RationalFunction::from_poly(Polynomial{cplx(2.0, -1.0), 3.0, 0.0, 0.5});
    auto dec = additive_decompose(P, 1.0);
    CHECK(std::abs(dec.alpha - cplx(2.0, -1.0)) < 1e-15);
    CHECK(dec.r_inf.is_zero());
    CHECK(std::abs(dec.r0.eval(1.3) - (P.eval(1.3) - cplx(2.0, -1.0))) < 1e-13);

    // inner pole and a pole at the origin both land in r_inf
    RationalFunction R = one_pole(cplx(0.3, 0.2)) +
                         RationalFunction(Polynomial{1.0}, Polynomial{0.0, 0.0, 1.0});
    auto d2 = additive_decompose(R, 1.0);
    CHECK(d2.r0.is_zero());
    CHECK(!d2.r_inf.is_zero());
    CHECK(std::abs(d2.r_inf.eval(0.0)) < 1e-13);
    for (cplx x : sample_points(20, 0.5, 4.0, 2)) {
        const cplx expect = R.eval(x);
        CHECK(std::abs(d2.reconstruct(x) - expect) < 1e-12 * (1.0 + std::abs(expect)));
    }
}

TEST_CASE("additive_decompose: reconstruction identity on random rationals") {
    std::mt19937 rng(33);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<RootWithMultiplicity> poles;
        const int np = 1 + int(rng() % 3);
        for (int i = 0; i < np; ++i) {
            const double mod = 0.2 + 4.8 * std::abs(u(rng));
            poles.push_back({std::polar(mod, 3.0 * u(rng)), 1});
        }
        Polynomial den{1.0};
        for (const auto& p : poles) den = den * Polynomial{-p.location, 1.0};
        Polynomial num{cplx(u(rng), u(rng)), cplx(u(rng), u(rng)), cplx(u(rng), u(rng))};
        RationalFunction R(num, den);
        auto dec = additive_decompose(R, 1.0, &poles);
        for (cplx x : sample_points(50, 0.25, 4.0, 100 + unsigned(trial))) {
            bool near = false;
            for (const auto& p : poles) near |= std::abs(x - p.location) < 0.1;
            if (near) continue;
            const cplx expect = R.eval(x);
            CHECK(std::abs(dec.reconstruct(x) - expect) < 1e-12 * (1.0 + std::abs(expect)));
        }
    }
}

TEST_CASE("additive_decompose: ties and zero input") {
    CHECK_THROWS_AS(additive_decompose(one_pole(cplx(1.0, 0.0)), 1.0), TieAtThreshold);
    auto dec = additive_decompose(RationalFunction{}, 1.0);
    CHECK(dec.r0.is_zero());
    CHECK(dec.alpha == cplx(0.0));
    CHECK(dec.r_inf.is_zero());
}

TEST_CASE("tail_series_eval: geometric sum, vanishing at 0, pole spirals") {
    QParameter q(2.0);
    RationalFunction lin = RationalFunction::from_poly(Polynomial{0.0, 1.0});
    const cplx x(1.1, -0.4);
    CHECK(std::abs(tail_series_eval(lin, q, x) - x) < 1e-13);
    CHECK(std::abs(tail_series_eval(lin, q, 0.0)) == 0.0);

    RationalFunction r(Polynomial{0.0, 1.0}, Polynomial{cplx(-1.5, -0.5), 1.0});
    // defining relation z(qx) - z(x) = r(x)
    for (cplx p : sample_points(25, 0.3, 2.5, 9)) {
        cplx zq, z0;
        try {
            zq = tail_series_eval(r, q, 2.0 * p);
            z0 = tail_series_eval(r, q, p);
        } catch (const AtPole&) {
            continue;
        }
        CHECK(std::abs(zq - z0 - r.eval(p)) < 1e-11 * (1.0 + std::abs(r.eval(p))));
    }
    // pole detected at a*q
    const cplx aq = cplx(1.5, 0.5) * 2.0;
    CHECK(std::abs(tail_series_eval(r, q, aq * 1.001)) > 1e2);
    CHECK_THROWS_AS(tail_series_eval(one_pole(2.0), q, 1.0), InvalidInput); // r(0) != 0
}

TEST_CASE("solve_additive: constant inhomogeneity") {
    QParameter q(2.0);
    AdditiveDecomposition dec;
    dec.alpha = cplx(0.7, 0.2);
    auto sol = solve_additive(dec, q);
    REQUIRE(sol.catalog.spirals.size() == 1);
    CHECK(sol.catalog.spirals[0].order == -1);
    for (cplx x : sample_points(30, 0.3, 3.0, 4)) {
        if (distance_to_q_spiral(q, x) < 1e-3 || distance_to_q_spiral(q, 2.0 * x) < 1e-3) continue;
        const cplx lhs = sol.expr.eval(q, 2.0 * x) - sol.expr.eval(q, x);
        CHECK(std::abs(lhs - dec.alpha) < 1e-10);
    }
}

TEST_CASE("solve_additive: cascade Example 1 closed form") {
    QParameter q(2.0);
    for (int k = 1; k <= 3; ++k) {
        // R(x) = q^{-k(k+1)/2} x^{-k}
        const double qd = 2.0;
        const cplx c = std::pow(qd, -0.5 * k * (k + 1));
        RationalFunction R(Polynomial{c}, Polynomial::monomial(1.0, k));
        auto dec = additive_decompose(R, 1.0);
        CHECK(dec.r0.is_zero());
        CHECK(std::abs(dec.alpha) == 0.0);
        auto sol = solve_additive(dec, q);
        const cplx coef = -1.0 / ((std::pow(qd, k) - 1.0) * std::pow(qd, 0.5 * (k * k - k)));
        for (cplx x : sample_points(20, 0.3, 3.0, 7)) {
            const cplx expect = coef * std::pow(x, cplx(-double(k), 0.0));
            const cplx got = sol.expr.eval(q, x);
            CHECK(std::abs(got - expect) < 1e-10 * (1.0 + std::abs(expect)));
        }
        // and it solves z(qx) = z(x) + R(x)
        const cplx x0(0.9, 0.35);
        CHECK(std::abs(sol.expr.eval(q, 2.0 * x0) - sol.expr.eval(q, x0) - R.eval(x0)) < 1e-12);
    }
}

TEST_CASE("solve_additive: zero input and superposition") {
    QParameter q(2.0);
    AdditiveDecomposition zero;
    auto z = solve_additive(zero, q);
    CHECK(z.catalog.spirals.empty());
    CHECK(std::abs(z.expr.eval(q, cplx(1.3, 0.4))) == 0.0);

    RationalFunction R1 = one_pole(cplx(3.0, 1.0));
    RationalFunction R2 = RationalFunction::from_poly(Polynomial{0.5, 0.0, cplx(0.0, 0.25)});
    auto s1 = solve_additive(additive_decompose(R1, 1.0), q);
    auto s2 = solve_additive(additive_decompose(R2, 1.0), q);
    auto s12 = solve_additive(additive_decompose(R1 + R2, 1.0), q);
    for (cplx x : sample_points(25, 0.3, 2.5, 12)) {
        if (distance_to_q_spiral(q, x) < 1e-3) continue;
        cplx a, b;
        try {
            a = s1.expr.eval(q, x) + s2.expr.eval(q, x);
            b = s12.expr.eval(q, x);
        } catch (const Error&) {
            continue;
        }
        CHECK(std::abs(a - b) < 1e-10 * (1.0 + std::abs(b)));
    }
}

TEST_CASE("the q^Z pole appears exactly when alpha is nonzero") {
    QParameter q(2.0);
    // alpha = 0: R vanishing at 0 with no constant part
    RationalFunction R0 = RationalFunction::from_poly(Polynomial{0.0, 1.0});
    auto s0 = solve_additive(additive_decompose(R0, 1.0), q);
    bool has_qz = false;
    for (const auto& s : s0.catalog.spirals)
        has_qz |= (s.direction == SpiralDirection::FullZ);
    CHECK(!has_qz);

    auto s1 = solve_additive(additive_decompose(one_pole(cplx(2.5, 0.0)), 1.0), q);
    has_qz = false;
    for (const auto& s : s1.catalog.spirals)
        has_qz |= (s.direction == SpiralDirection::FullZ && std::abs(s.base - 1.0) < 1e-9);
    CHECK(has_qz);
}

TEST_CASE("solve_inhomogeneous: full pipeline with rational r") {
    QParameter q(2.0);
    auto m = std::get<FactoredForm>(parse_coefficient("(1 - x/(3+1i))"));
    RationalFunction r = one_pole(cplx(-2.0, 0.5)) + RationalFunction::from_poly(Polynomial{0.3, 0.2});
    RhoSet rhos;
    auto sol = solve_inhomogeneous(q, Coefficient(m), r, rhos);

    GuardSet guards;
    guards.catalog = merge_spirals(sol.catalog, q);
    guards.extra_points = {cplx(-2.0, 0.5)};
    auto rep = inhomogeneous_residual(
        q, sol, coefficient_fn(Coefficient(m)), [&](cplx x) { return r.eval(x); }, {0.3, 3.0},
        100, guards);
    CHECK(rep.max_rel_residual <= 1e-8);
    CHECK(rep.points_tested >= 60);
}

TEST_CASE("solve_inhomogeneous: r = 0 delegates to the homogeneous solver") {
    QParameter q(2.0);
    auto m = std::get<FactoredForm>(parse_coefficient("2 * (1 - x/4)"));
    auto sol = solve_inhomogeneous(q, Coefficient(m), RationalFunction{}, {});
    auto hom = solve_mer_c(q, m);
    const cplx x(0.77, 0.31);
    CHECK(std::abs(sol.expr.eval(q, x) - hom.expr.eval(q, x)) < 1e-12);
}

TEST_CASE("m = 0: solution is r(x/q)") {
    QParameter q(2.0);
    RationalFunction r = one_pole(cplx(1.0, 1.0));
    auto sol = solve_inhomogeneous_null_m(q, r);
    for (cplx x : sample_points(10, 0.4, 3.0, 5)) {
        CHECK(std::abs(sol.expr.eval(q, x) - r.eval(x / 2.0)) < 1e-14);
        // y(qx) = r(x) directly
        CHECK(std::abs(sol.expr.eval(q, 2.0 * x) - r.eval(x)) < 1e-14);
    }
}

TEST_CASE("inhomogeneous worked example: m = x sin(2x), r solves the cos equation") {
    QParameter q(2.0);
    auto rsol = solve_entire(q, make_cos_coefficient());
    auto m = std::get<FactoredForm>(parse_coefficient("x * sin(2*x)"));
    RhoSet rhos;
    rhos.rho = 0.05; // inside (0, pi/2); every captured pole bins outward
    const TruncationPolicy pol{};
    const SolutionExpr rex = rsol.expr;
    auto sol = solve_inhomogeneous_general(
        q, Coefficient(m), [&, rex](cplx x) { return rex.eval(q, x, pol); }, rsol.catalog, {},
        rhos);

    // no q^{-N} pole spiral: no half-spiral of poles accumulating at 0
    auto merged = merge_spirals(sol.catalog, q);
    for (const auto& s : merged.spirals) {
        if (s.order < 0) CHECK(s.direction != SpiralDirection::NegN);
    }
    // pole support confined to +-q^Z, 2q^Z and (n pi / 2) q^{N*}
    for (const auto& s : merged.spirals) {
        if (s.order >= 0) continue;
        bool ok = false;
        for (cplx base : {cplx(1.0), cplx(-1.0), cplx(2.0)})
            ok |= detail::q_power_of(q, s.base / base).has_value();
        if (!ok && s.direction == SpiralDirection::PosNStar) {
            const double ratio = s.base.real() / (std::numbers::pi / 2.0);
            ok = std::abs(s.base.imag()) < 1e-9 && std::abs(ratio - std::round(ratio)) < 1e-6;
        }
        CHECK(ok);
    }

    // functional equation residual
    GuardSet guards;
    guards.catalog = merged;
    guards.extra_points = coefficient_singular_points(Coefficient(m), 0.05, 12.0);
    auto rep = inhomogeneous_residual(
        q, sol, coefficient_fn(Coefficient(m)), [&, rex](cplx x) { return rex.eval(q, x, pol); },
        {0.4, 2.5}, 100, guards);
    CHECK(rep.max_rel_residual <= 1e-6);
}

TEST_CASE("annulus guard refuses verification outside the captured ring") {
    QParameter q(2.0);
    auto m = std::get<FactoredForm>(parse_coefficient("(1 - x/(3+1i))"));
    RationalFunction r = one_pole(cplx(-2.0, 0.5));
    ExtractionOptions opts;
    opts.annulus_min = 0.35;
    opts.annulus_max = 6.0;
    auto sol = solve_inhomogeneous(q, Coefficient(m), r, {}, opts);
    GuardSet guards;
    guards.catalog = merge_spirals(sol.catalog, q);
    CHECK_THROWS_AS(inhomogeneous_residual(q, sol, coefficient_fn(Coefficient(m)),
                                           [&](cplx x) { return r.eval(x); }, {0.05, 20.0}, 50,
                                           guards),
                    AnnulusTooSmall);
}
