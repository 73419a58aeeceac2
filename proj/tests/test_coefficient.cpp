#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qdiff/coefficient.hpp"
#include "qdiff/parser.hpp"

using namespace qdiff;

namespace {

FactoredForm as_form(const Coefficient& c) {
    REQUIRE(std::holds_alternative<FactoredForm>(c));
    return std::get<FactoredForm>(c);
}

bool structurally_equal(const FactoredForm& a, const FactoredForm& b, double tol = 1e-12) {
    if (std::abs(a.alpha - b.alpha) > tol * (1.0 + std::abs(a.alpha))) return false;
    if (a.mu0 != b.mu0) return false;
    if (a.zeros.points.size() != b.zeros.points.size()) return false;
    if (a.poles.points.size() != b.poles.points.size()) return false;
    auto match_points = [&](const std::vector<ZeroPoint>& xs, const std::vector<ZeroPoint>& ys) {
        std::vector<bool> used(ys.size(), false);
        for (const auto& x : xs) {
            bool ok = false;
            for (std::size_t j = 0; j < ys.size(); ++j) {
                if (!used[j] && ys[j].multiplicity == x.multiplicity &&
                    std::abs(ys[j].location - x.location) < tol * (1.0 + std::abs(x.location))) {
                    used[j] = true;
                    ok = true;
                    break;
                }
            }
            if (!ok) return false;
        }
        return true;
    };
    if (!match_points(a.zeros.points, b.zeros.points)) return false;
    if (!match_points(a.poles.points, b.poles.points)) return false;
    if (a.zeros.builtins.size() != b.zeros.builtins.size()) return false;
    if (a.poles.builtins.size() != b.poles.builtins.size()) return false;
    const std::size_t ges = std::max(a.exp_part.coeffs.size(), b.exp_part.coeffs.size());
    for (std::size_t k = 0; k < ges; ++k) {
        const cplx ca = k < a.exp_part.coeffs.size() ? a.exp_part.coeffs[k] : cplx(0.0);
        const cplx cb = k < b.exp_part.coeffs.size() ? b.exp_part.coeffs[k] : cplx(0.0);
        if (std::abs(ca - cb) > tol) return false;
    }
    return true;
}

} // namespace

TEST_CASE("parse (1 - x^3): cube roots of unity, simple") {
    auto f = as_form(parse_coefficient("(1 - x^3)"));
    CHECK(f.alpha == cplx(1.0));
    CHECK(f.mu0 == 0);
    REQUIRE(f.zeros.points.size() == 3);
    for (const auto& z : f.zeros.points) {
        CHECK(z.multiplicity == 1);
        CHECK(std::abs(std::pow(z.location, 3) - 1.0) < 1e-10);
    }
    CHECK(f.poles.empty());
    for (double t : {0.3, 1.7}) CHECK(std::abs(f.eval(t) - (1.0 - t * t * t)) < 1e-10);
}

TEST_CASE("parse x * sin(2*x): double zero at origin, leading constant 2") {
    auto f = as_form(parse_coefficient("x * sin(2*x)"));
    CHECK(f.mu0 == 2);
    CHECK(std::abs(f.alpha - 2.0) < 1e-15);
    REQUIRE(f.zeros.builtins.size() == 1);
    CHECK(f.zeros.builtins[0].kind == BuiltinKind::Sin);
    // zeros at n pi / 2
    auto members = f.zeros.builtins[0].members();
    CHECK(std::abs(members[0].location - cplx(std::numbers::pi / 2.0)) < 1e-12);
    // value check against the genuine function (truncation tail permitting)
    for (double t : {0.4, 1.1}) {
        const double exact = t * std::sin(2.0 * t);
        CHECK(std::abs(f.eval(t) - exact) < 2e-3 * (1.0 + std::abs(exact)));
    }
}

TEST_CASE("parse '1' and trivial identities") {
    auto f = as_form(parse_coefficient("1"));
    CHECK(f.is_one());
    CHECK(f.eval(cplx(2.0, 1.0)) == cplx(1.0));
}

TEST_CASE("parse errors carry position and expectation") {
    CHECK_THROWS_AS(parse_coefficient("(1 - x"), ParseError);
    CHECK_THROWS_AS(parse_coefficient("sin[x]"), ParseError);
    CHECK_THROWS_AS(parse_coefficient("x ^"), ParseError);
    CHECK_THROWS_AS(parse_coefficient("0"), SemanticError);
    CHECK_THROWS_AS(parse_coefficient("(x - x)"), SemanticError);
    try {
        parse_coefficient("(1 - x");
    } catch (const ParseError& e) {
        CHECK(e.position == 6);
        CHECK(!e.expected.empty());
    }
}

TEST_CASE("builtin evaluations against standard oracles") {
    auto sinf = as_form(parse_coefficient("sin(x)"));
    const auto at_half_pi = sinf.eval_with_tail(cplx(std::numbers::pi / 2.0));
    CHECK(std::abs(at_half_pi.value - 1.0) <= at_half_pi.rel_tail_bound + 1e-12);

    auto g = make_gamma_coefficient();
    const auto at_one = g.eval_with_tail(1.0);
    CHECK(std::abs(at_one.value - 1.0) <= at_one.rel_tail_bound + 1e-12);
    CHECK(std::abs(g.eval(0.5) - std::sqrt(std::numbers::pi)) < 0.02);

    auto c = make_cos_coefficient();
    CHECK(std::abs(c.eval(0.7) - std::cos(0.7)) < 1e-3);

    // tail bound decreases monotonically in truncation_count
    double prev = 1e9;
    for (int n : {50, 100, 200, 400}) {
        FactoredForm s = make_sin_coefficient(1.0, n);
        const double bound = s.eval_with_tail(1.3).rel_tail_bound;
        CHECK(bound < prev);
        prev = bound;
    }
}

TEST_CASE("evaluate at zero location vanishes; scaled residue is finite") {
    auto f = as_form(parse_coefficient("(1 - x^3)^2"));
    const cplx a = f.zeros.points[0].location;
    const int v = f.zeros.points[0].multiplicity;
    CHECK(v == 2);
    CHECK(std::abs(f.eval(a)) < 1e-12);
    // dividing by (1 - x/a)^v at a + eps leaves a finite nonzero limit
    const cplx eps(1e-5, 0.0);
    const cplx near = f.eval(a + eps);
    const cplx scaled = near / std::pow(1.0 - (a + eps) / a, v);
    CHECK(std::abs(scaled) > 1e-3);
    CHECK(std::abs(scaled) < 1e3);
    CHECK_THROWS_AS(as_form(parse_coefficient("1/(1 - x/2)")).eval(2.0), AtPole);
}

TEST_CASE("parser round-trip is structural") {
    const char* samples[] = {
        "1",
        "(1 - x^3)",
        "2 * x^2 * (1 - x/(2+1i))^3",
        "x * sin(2*x)",
        "gamma(x)",
        "(1 - x/omega3) * exp(0.25*x + 1*x^2)",
        "3 * x^-2 * (1 - x/5) / (1 - x/(0.5-0.25i))^2",
        "cos(1.5*x) / (1 - x/4)",
    };
    for (const char* s : samples) {
        Coefficient c1 = parse_coefficient(s);
        const std::string printed = print_coefficient(c1);
        CAPTURE(s);
        CAPTURE(printed);
        Coefficient c2 = parse_coefficient(printed);
        REQUIRE(c1.index() == c2.index());
        if (std::holds_alternative<FactoredForm>(c1)) {
            CHECK(structurally_equal(std::get<FactoredForm>(c1), std::get<FactoredForm>(c2)));
        }
        // and the printed form evaluates identically
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> u(0.3, 2.0);
        for (int i = 0; i < 10; ++i) {
            const cplx x = std::polar(u(rng), u(rng) * 3.0);
            cplx v1, v2;
            try {
                v1 = evaluate_coefficient(c1, x);
                v2 = evaluate_coefficient(c2, x);
            } catch (const AtPole&) {
                continue;
            }
            CHECK(std::abs(v1 - v2) < 1e-9 * (1.0 + std::abs(v1)));
        }
    }
}

TEST_CASE("sin(2/x) builtin is a pre-split Laurent form") {
    Coefficient c = parse_coefficient("sin(2/x)");
    REQUIRE(std::holds_alternative<LaurentFactoredForm>(c));
    const auto& lf = std::get<LaurentFactoredForm>(c);
    CHECK(lf.v == -1);
    CHECK(std::abs(lf.alpha - 2.0) < 1e-15);
    REQUIRE(lf.inner.zeros.builtins.size() == 1);
    // zeros in x-space at 2/(n pi)
    const cplx u1 = lf.inner.zeros.builtins[0].members()[0].location;
    CHECK(std::abs(1.0 / u1 - cplx(2.0 / std::numbers::pi)) < 1e-12);
    // value oracle
    for (double t : {0.9, 1.7, -1.3}) {
        const double exact = std::sin(2.0 / t);
        CHECK(std::abs(lf.eval(t) - exact) < 2e-3 * (1.0 + std::abs(exact)));
    }
    // structurally identical to the shipped builtin
    const auto built = make_sin_inverse_coefficient(2.0);
    CHECK(built.v == lf.v);
    CHECK(std::abs(built.alpha - lf.alpha) < 1e-15);
}

TEST_CASE("split_at_modulus: binning, ties, reconstruction") {
    // entire form, rho below every zero modulus: inner stays trivial
    LaurentFactoredForm raw;
    raw.alpha = 2.0;
    raw.v = 1;
    raw.outer.zeros.points = {{cplx(2.0, 1.0), 1}, {cplx(-0.3, 0.1), 2}};
    raw.outer.poles.points = {{cplx(0.2, -0.1), 1}, {cplx(4.0, 0.0), 1}};

    auto split = split_at_modulus(raw, 1.0, 1.0);
    CHECK(split.outer.zeros.points.size() == 1);
    CHECK(split.inner.zeros.points.size() == 1);
    CHECK(split.outer.poles.points.size() == 1);
    CHECK(split.inner.poles.points.size() == 1);
    // product of the parts reproduces the original form pointwise
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.25, 3.0);
    for (int i = 0; i < 50; ++i) {
        const cplx x = std::polar(u(rng), 6.28 * u(rng));
        const cplx lhs = split.eval(x);
        const cplx rhs = raw.eval(x);
        CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(rhs)));
    }

    auto all_outer = split_at_modulus(raw, 0.05, 0.05);
    CHECK(all_outer.inner.is_one());
    CHECK(all_outer.v == raw.v);

    // tie at the threshold is a hard error
    LaurentFactoredForm tie;
    tie.outer.zeros.points = {{cplx(1.0, 0.0), 1}};
    CHECK_THROWS_AS(split_at_modulus(tie, 1.0, 2.0), SemanticError);

    // sin(2/x): all zeros must stay inner; rho below their max modulus fails
    auto lf = make_sin_inverse_coefficient(2.0);
    auto kept = split_at_modulus(lf, 1.0, 1.0);
    CHECK(kept.v == -1);
    CHECK_THROWS_AS(split_at_modulus(lf, 0.1, 0.1), UnsupportedInput);
}

TEST_CASE("semantic validation") {
    FactoredForm f;
    f.alpha = 0.0;
    CHECK_THROWS_AS(f.validate(), SemanticError);
    FactoredForm g;
    g.zeros.points = {{cplx(0.0), 1}};
    CHECK_THROWS_AS(g.validate(), SemanticError);
    FactoredForm h;
    h.exp_part = PowerSeries({cplx(1.0)});
    CHECK_THROWS_AS(h.validate(), SemanticError);
}

TEST_CASE("parser round-trip on generated forms") {
    std::mt19937 rng(2718);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 40; ++trial) {
        FactoredForm f;
        f.alpha = cplx(u(rng), u(rng));
        if (f.alpha == 0.0) f.alpha = 1.0;
        f.mu0 = int(rng() % 5) - 2;
        const int nz = int(rng() % 3), np = int(rng() % 2);
        for (int i = 0; i < nz; ++i)
            f.zeros.points.push_back({cplx(u(rng) + 2.5, u(rng)), 1 + int(rng() % 3)});
        for (int i = 0; i < np; ++i)
            f.poles.points.push_back({cplx(u(rng) - 2.5, u(rng)), 1 + int(rng() % 2)});
        if (rng() % 2) f.exp_part = PowerSeries({0.0, cplx(u(rng), u(rng)), cplx(u(rng), 0.0)});
        f.validate();

        const std::string printed = print_coefficient(Coefficient(f));
        CAPTURE(printed);
        auto g = std::get<FactoredForm>(parse_coefficient(printed));
        CHECK(structurally_equal(f, g, 1e-10));
    }
}
