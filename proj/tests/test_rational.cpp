#include <doctest.h>

#include <cmath>
#include <random>

#include "qdiff/rational.hpp"

using namespace qdiff;

namespace {

Polynomial from_roots(const std::vector<RootWithMultiplicity>& roots, cplx lead = 1.0) {
    Polynomial p{lead};
    for (const auto& r : roots)
        for (int j = 0; j < r.multiplicity; ++j) p = p * Polynomial{-r.location, 1.0};
    return p;
}

} // namespace

TEST_CASE("polynomial basics") {
    Polynomial p{1.0, 0.0, -2.0, 3.0}; // 1 - 2x^2 + 3x^3
    CHECK(p.degree() == 3);
    CHECK(std::abs(p.eval(2.0) - cplx(1.0 - 8.0 + 24.0)) < 1e-14);
    CHECK(p.derivative().coeffs()[1] == cplx(-4.0));
    Polynomial xp{0.0, 0.0, 5.0};
    CHECK(xp.valuation() == 2);

    auto [quo, rem] = p.divmod(Polynomial{-1.0, 1.0}); // divide by (x-1)
    CHECK(std::abs(quo.eval(3.0) * (3.0 - 1.0) + rem.eval(3.0) - p.eval(3.0)) < 1e-12);

    // Taylor shift oracle: coefficients of p at a reproduce p(a+h)
    const cplx a(0.7, -0.3);
    auto shifted = p.taylor_at(a);
    const cplx h(0.2, 0.1);
    cplx direct = p.eval(a + h);
    cplx viaShift = 0.0, hk = 1.0;
    for (std::size_t k = 0; k < shifted.size(); ++k) {
        viaShift += shifted[k] * hk;
        hk *= h;
    }
    CHECK(std::abs(direct - viaShift) < 1e-13);
}

TEST_CASE("root finder recovers planted roots with multiplicities") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<RootWithMultiplicity> planted;
        const int n = 1 + int(rng() % 3);
        for (int i = 0; i < n; ++i) planted.push_back({cplx(u(rng), u(rng)), 1});
        if (trial % 5 == 0) planted[0].multiplicity = 2;
        Polynomial p = from_roots(planted, cplx(u(rng), u(rng)));
        auto found = polynomial_roots(p);
        int total = 0;
        for (const auto& f : found) {
            total += f.multiplicity;
            double best = 1e9;
            for (const auto& pl : planted) best = std::min(best, std::abs(f.location - pl.location));
            CHECK(best < 1e-5);
        }
        CHECK(total == p.degree());
    }
}

TEST_CASE("partial fractions reconstruct the rational function") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<RootWithMultiplicity> poles = {{cplx(1.0 + u(rng) * 0.3, u(rng)), 1},
                                                   {cplx(-0.8, 0.9 + 0.2 * u(rng)), 1}};
        if (trial % 4 == 0) poles[0].multiplicity = 3;
        Polynomial den = from_roots(poles);
        Polynomial num{cplx(u(rng), u(rng)), cplx(u(rng), u(rng)), cplx(u(rng), u(rng)),
                       cplx(u(rng), u(rng)), cplx(u(rng), u(rng))};
        RationalFunction R(num, den);
        auto pf = partial_fractions(R, &poles);
        for (int i = 0; i < 40; ++i) {
            const cplx x(u(rng) * 3.0, u(rng) * 3.0);
            bool near = false;
            for (const auto& p : poles) near |= std::abs(x - p.location) < 0.15;
            if (near) continue;
            const cplx direct = R.eval(x);
            CHECK(std::abs(pf.eval(x) - direct) < 1e-11 * (1.0 + std::abs(direct)));
        }
    }
}

TEST_CASE("rational reduction removes shared factors") {
    Polynomial shared{-cplx(0.5, 0.25), 1.0};
    RationalFunction R(Polynomial{1.0, 2.0} * shared, Polynomial{3.0, 0.0, 1.0} * shared);
    RationalFunction r = R.reduced();
    CHECK(r.den().degree() == 2);
    CHECK(std::abs(r.eval(1.7) - R.eval(1.7)) < 1e-12);
}

TEST_CASE("valuation of rational functions") {
    RationalFunction r(Polynomial{0.0, 0.0, 2.0}, Polynomial{0.0, 1.0}); // 2x^2 / x
    CHECK(r.valuation() == 1);
    RationalFunction pole(Polynomial{1.0}, Polynomial{0.0, 0.0, 1.0});
    CHECK(pole.valuation() == -2);
}
