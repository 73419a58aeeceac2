#include <doctest.h>

#include <cmath>

#include "qdiff/homogeneous.hpp"
#include "qdiff/parser.hpp"
#include "qdiff/verify.hpp"

using namespace qdiff;

TEST_CASE("residual_report: trivial identity and theta relation") {
    QParameter q(2.0);
    GuardSet guards;
    // Y = 1, m = 1, r = 0
    auto rep = residual_report(q, SolutionExpr::constant(1.0), [](cplx) { return cplx(1.0); },
                               nullptr, {0.3, 3.0}, 50, guards);
    CHECK(rep.max_rel_residual == 0.0);
    CHECK(rep.points_tested == 50);

    // theta itself solves y(qx) = -q x y(x)
    GuardSet tguards;
    tguards.catalog.add(q, 1.0, SpiralDirection::FullZ, 1);
    auto trep = residual_report(q, SolutionExpr::theta(1.0),
                                [&](cplx x) { return -q.q() * x; }, nullptr, {0.3, 3.0}, 100,
                                tguards);
    CHECK(trep.max_rel_residual <= 1e-12);
}

TEST_CASE("residual_report: guard zones are skipped and reported") {
    QParameter q(2.0);
    GuardSet guards;
    guards.catalog.add(q, 1.0, SpiralDirection::FullZ, 1);
    guards.rel_guard = 10.0; // absurdly wide: every sample point is skipped
    CHECK_THROWS_AS(residual_report(q, SolutionExpr::constant(1.0),
                                    [](cplx) { return cplx(1.0); }, nullptr, {0.9, 1.1}, 10,
                                    guards),
                    AllPointsSkipped);
}

TEST_CASE("residual monotonicity under tolerance tightening") {
    QParameter q(2.0);
    const SolutionExpr Y = SolutionExpr::fa(3.0);
    GuardSet guards;
    guards.catalog.add(q, 3.0, SpiralDirection::PosNStar, 1);
    const PointFn m = [](cplx x) { return 1.0 - x / 3.0; };
    TruncationPolicy loose(1e-10, 10000);
    TruncationPolicy tight(5e-11, 10000);
    const auto r1 = residual_report(q, Y, m, nullptr, {0.3, 3.0}, 60, guards, loose);
    const auto r2 = residual_report(q, Y, m, nullptr, {0.3, 3.0}, 60, guards, tight);
    CHECK(r2.max_rel_residual <= 2.0 * r1.max_rel_residual + 1e-15);
}

TEST_CASE("winding counts: theta, the x-coefficient solution, entire function") {
    QParameter q(2.0);
    const SolutionExpr theta = SolutionExpr::theta(1.0);
    auto w = count_zeros_poles(q, theta, 1.0, 0.1);
    CHECK(w.rounded_count == 1);
    CHECK(w.distance_to_integer <= 1e-3);

    // Theta^2(x)/(q x Theta(-x)): zeros double on q^Z, poles simple on -q^Z
    const SolutionExpr s = SolutionExpr::theta(1.0).pow(2) *
                           SolutionExpr::monomial(1.0 / q.q(), -1) / SolutionExpr::theta(-1.0);
    CHECK(count_zeros_poles(q, s, 1.0, 0.1).rounded_count == 2);
    CHECK(count_zeros_poles(q, s, -1.0, 0.1).rounded_count == -1);
    CHECK(count_zeros_poles(q, s, 4.0, 0.2).rounded_count == 2);

    // f_a with a contour enclosing no zeros
    CHECK(count_zeros_poles(q, SolutionExpr::fa(3.0), cplx(0.5, 0.5), 0.2).rounded_count == 0);
}

TEST_CASE("check_catalog flags corrupted orders") {
    QParameter q(2.0);
    const SolutionExpr s = SolutionExpr::theta(1.0).pow(2) *
                           SolutionExpr::monomial(1.0 / q.q(), -1) / SolutionExpr::theta(-1.0);
    SpiralCatalog good;
    good.add(q, 1.0, SpiralDirection::FullZ, 2);
    good.add(q, -1.0, SpiralDirection::FullZ, -1);
    auto rep = check_catalog(q, s, merge_spirals(good, q), {0.4, 2.5}, 256, 10);
    CHECK(rep.all_pass);
    CHECK(!rep.spiral_points.empty());
    for (const auto& c : rep.spiral_points) CHECK(c.distance_to_integer <= 1e-3);

    SpiralCatalog bad;
    bad.add(q, 1.0, SpiralDirection::FullZ, 1); // genuinely a double zero
    bad.add(q, -1.0, SpiralDirection::FullZ, -1);
    auto brep = check_catalog(q, s, merge_spirals(bad, q), {0.4, 2.5}, 256, 5);
    CHECK(!brep.all_pass);

    CHECK_THROWS_AS(check_catalog(q, s, good, {0.4, 2.5}), InvalidInput); // unmerged input
}

TEST_CASE("empty catalog: probe disks count zero for entire solutions") {
    QParameter q(2.0);
    SpiralCatalog empty;
    auto rep = check_catalog(q, SolutionExpr::series_exp(PowerSeries({0.0, 0.3})),
                             merge_spirals(empty, q), {0.4, 2.0}, 256, 12);
    CHECK(rep.all_pass);
    CHECK(rep.spiral_points.empty());
    CHECK(rep.probes.size() == 12);
}

TEST_CASE("check_catalog passes on each worked first-order example") {
    QParameter q(2.0);
    const Annulus annulus{0.4, 2.5};

    auto cubic = solve_entire(q, std::get<FactoredForm>(parse_coefficient("(1 - x^3)")));
    CHECK(check_catalog(q, cubic.expr, merge_spirals(cubic.catalog, q), {0.3, 3.0}, 512, 10).all_pass);

    auto sine = solve_entire(q, std::get<FactoredForm>(parse_coefficient("sin(x)")));
    CHECK(check_catalog(q, sine.expr, merge_spirals(sine.catalog, q), annulus, 512, 10).all_pass);

    auto gamma = solve_mer_c(q, make_gamma_coefficient());
    CHECK(check_catalog(q, gamma.expr, merge_spirals(gamma.catalog, q), annulus, 512, 10).all_pass);

    auto laurent = solve_mer_cstar(
        q, std::get<LaurentFactoredForm>(parse_coefficient("sin(2/x)")), 1.0, 1.0);
    CHECK(check_catalog(q, laurent.expr, merge_spirals(laurent.catalog, q), annulus, 512, 10).all_pass);
}
