#pragma once

// Independent numerical verification: functional-equation residual reports
// over sampled annuli, and argument-principle winding counts checking the
// predicted zero/pole orders of a catalog.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "qdiff/coefficient.hpp"
#include "qdiff/solution.hpp"

namespace qdiff {

using PointFn = std::function<cplx(cplx)>;

struct Annulus {
    double r_min;
    double r_max;
};

// Points to stay away from while sampling: the solution's predicted spirals
// plus any isolated coefficient singularities.
struct GuardSet {
    SpiralCatalog catalog;
    std::vector<cplx> extra_points;
    double rel_guard = 1e-3;

    bool clear(const QParameter& q, cplx x) const {
        if (catalog.distance_to_support(q, x) <= rel_guard * std::abs(x)) return false;
        for (const auto& p : extra_points)
            if (std::abs(x - p) <= rel_guard * (1.0 + std::abs(p))) return false;
        return true;
    }
};

struct ResidualReport {
    double max_rel_residual = 0.0;
    cplx worst_point = 0.0;
    int points_tested = 0;
    int points_skipped = 0;
};

// max over samples of |Y(qx) - m(x) Y(x) - r(x)| / (1 + |m(x)Y(x)| + |r(x)|),
// sampled on log-spaced circles with seeded random angles, skipping guard
// zones (skips are reported, never silent).
inline ResidualReport residual_report(const QParameter& q, const SolutionExpr& Y,
                                      const PointFn& m, const PointFn& r, Annulus annulus,
                                      int n_points, const GuardSet& guards,
                                      const TruncationPolicy& pol = {}, unsigned seed = 42) {
    if (!(annulus.r_min > 0.0) || !(annulus.r_max > annulus.r_min))
        throw InvalidInput("residual_report: bad annulus");
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ua(0.0, 2.0 * std::numbers::pi);
    ResidualReport rep;
    for (int i = 0; i < n_points; ++i) {
        const double t = n_points == 1 ? 0.5 : double(i) / double(n_points - 1);
        const double radius =
            std::exp(std::log(annulus.r_min) + t * (std::log(annulus.r_max) - std::log(annulus.r_min)));
        const cplx x = std::polar(radius, ua(rng));
        if (!guards.clear(q, x) || !guards.clear(q, q.q() * x)) {
            ++rep.points_skipped;
            continue;
        }
        cplx yqx, yx, mx, rx = 0.0;
        try {
            yqx = Y.eval(q, q.q() * x, pol);
            yx = Y.eval(q, x, pol);
            mx = m(x);
            if (r) rx = r(x);
        } catch (const Error&) {
            ++rep.points_skipped;
            continue;
        }
        const double denom = 1.0 + std::abs(mx * yx) + std::abs(rx);
        const double res = std::abs(yqx - mx * yx - rx) / denom;
        ++rep.points_tested;
        if (res > rep.max_rel_residual) {
            rep.max_rel_residual = res;
            rep.worst_point = x;
        }
    }
    if (rep.points_tested == 0) throw AllPointsSkipped("residual_report: no testable points");
    return rep;
}

struct WindingResult {
    cplx center = 0.0;
    double radius = 0.0;
    cplx raw_integral = 0.0;
    int rounded_count = 0;
    double distance_to_integer = 0.0;
};

// (1/2 pi i) contour integral of F'/F on |x - center| = radius by the
// trapezoid rule, spectrally accurate on periodic integrands. The rounded
// value counts zeros minus poles enclosed, with multiplicity.
namespace detail {

inline WindingResult winding_integral(const std::function<cplx(cplx)>& logderiv, cplx center,
                                      double radius, int nodes) {
    if (!(radius > 0.0)) throw InvalidInput("count_zeros_poles: radius must be positive");
    cplx acc = 0.0;
    for (int j = 0; j < nodes; ++j) {
        const double th = 2.0 * std::numbers::pi * double(j) / double(nodes);
        const cplx e = std::polar(1.0, th);
        acc += logderiv(center + radius * e) * e;
    }
    WindingResult w;
    w.center = center;
    w.radius = radius;
    w.raw_integral = acc * radius / double(nodes);
    w.rounded_count = int(std::lround(w.raw_integral.real()));
    w.distance_to_integer = std::abs(w.raw_integral - cplx(double(w.rounded_count), 0.0));
    if (w.distance_to_integer >= 0.2)
        throw NonIntegerResult("winding integral not close to an integer");
    return w;
}

} // namespace detail

inline WindingResult count_zeros_poles(const QParameter& q, const SolutionExpr& F,
                                       const SolutionExpr& Fprime, cplx center, double radius,
                                       int nodes = 512, const TruncationPolicy& pol = {}) {
    return detail::winding_integral(
        [&](cplx x) {
            const cplx f = F.eval(q, x, pol);
            if (f == 0.0) throw ContourTooClose("contour passes through a zero");
            return Fprime.eval(q, x, pol) / f;
        },
        center, radius, nodes);
}

// F'/F is evaluated structurally (log-derivative distributes over the long
// Weierstrass products); algebraically identical to differentiate_solution
// but linear in the factor count.
inline WindingResult count_zeros_poles(const QParameter& q, const SolutionExpr& F, cplx center,
                                       double radius, int nodes = 512,
                                       const TruncationPolicy& pol = {}) {
    return detail::winding_integral(
        [&](cplx x) { return F.log_derivative_eval(q, x, pol); }, center, radius, nodes);
}

// Contour radius rule: min(0.05 |center|, 0.45 * distance to the nearest
// predicted singular point other than the center itself).
inline double contour_radius(const QParameter& q, const SpiralCatalog& catalog, cplx center,
                             const std::vector<cplx>& extra = {}) {
    double nearest = std::numeric_limits<double>::infinity();
    const double ac = std::abs(center);
    auto consider = [&](cplx p) {
        const double d = std::abs(p - center);
        if (d > 1e-9 * (1.0 + ac)) nearest = std::min(nearest, d);
    };
    for (const auto& p : catalog.support_points_in(q, ac / (q.abs_q() * q.abs_q()),
                                                   ac * q.abs_q() * q.abs_q()))
        consider(p);
    for (const auto& p : extra) consider(p);
    double r = 0.05 * ac;
    if (std::isfinite(nearest)) r = std::min(r, 0.45 * nearest);
    if (!(r > 0.0)) throw ContourTooClose("no usable contour radius at this center");
    return r;
}

struct CatalogPointCheck {
    cplx point;
    int expected;
    int counted;
    bool pass;
    double distance_to_integer;
};

struct CatalogCheckReport {
    std::vector<CatalogPointCheck> spiral_points;
    std::vector<CatalogPointCheck> probes; // expected 0 away from all spirals
    bool all_pass = true;
};

// Every cataloged spiral point inside the annulus must wind exactly its
// predicted order; random probe disks away from all spirals must wind 0.
inline CatalogCheckReport check_catalog(const QParameter& q, const SolutionExpr& F,
                                        const SpiralCatalog& catalog, Annulus annulus,
                                        int nodes = 512, int probe_count = 20,
                                        unsigned seed = 42, const TruncationPolicy& pol = {},
                                        const std::vector<cplx>& extra_singular = {}) {
    if (!catalog.merged) throw InvalidInput("check_catalog requires a merged catalog");
    CatalogCheckReport rep;
    for (const auto& pt : catalog.support_points_in(q, annulus.r_min, annulus.r_max)) {
        const int expected = catalog.order_at(q, pt);
        CatalogPointCheck c{pt, expected, 0, false, 1.0};
        try {
            const double r = contour_radius(q, catalog, pt, extra_singular);
            const auto w = count_zeros_poles(q, F, pt, r, nodes, pol);
            c.counted = w.rounded_count;
            c.distance_to_integer = w.distance_to_integer;
            c.pass = (w.rounded_count == expected);
        } catch (const Error&) {
            c.pass = false;
        }
        rep.all_pass &= c.pass;
        rep.spiral_points.push_back(c);
    }
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ur(std::log(annulus.r_min), std::log(annulus.r_max));
    std::uniform_real_distribution<double> ua(0.0, 2.0 * std::numbers::pi);
    int placed = 0;
    for (int attempt = 0; attempt < probe_count * 40 && placed < probe_count; ++attempt) {
        const cplx c0 = std::polar(std::exp(ur(rng)), ua(rng));
        const double radius = 0.02 * std::abs(c0);
        if (catalog.distance_to_support(q, c0) < 3.0 * radius) continue;
        bool near_extra = false;
        for (const auto& p : extra_singular) near_extra |= std::abs(c0 - p) < 3.0 * radius;
        if (near_extra) continue;
        CatalogPointCheck c{c0, 0, 0, false, 1.0};
        try {
            const auto w = count_zeros_poles(q, F, c0, radius, nodes, pol);
            c.counted = w.rounded_count;
            c.distance_to_integer = w.distance_to_integer;
            c.pass = (w.rounded_count == 0);
        } catch (const Error&) {
            c.pass = false;
        }
        rep.all_pass &= c.pass;
        rep.probes.push_back(c);
        ++placed;
    }
    return rep;
}

// Adapters for coefficient evaluation with pole-guard skipping handled by the
// caller's GuardSet.
inline PointFn coefficient_fn(const Coefficient& m) {
    return [m](cplx x) { return evaluate_coefficient(m, x); };
}

inline std::vector<cplx> coefficient_singular_points(const Coefficient& m, double r_min,
                                                     double r_max) {
    std::vector<cplx> pts;
    const FactoredForm* f = std::get_if<FactoredForm>(&m);
    const LaurentFactoredForm* lf = std::get_if<LaurentFactoredForm>(&m);
    auto add_family = [&](const ZeroFamily& fam, bool invert) {
        for (const auto& p : fam.all_members()) {
            const cplx loc = invert ? 1.0 / p.location : p.location;
            const double al = std::abs(loc);
            if (al >= r_min && al <= r_max) pts.push_back(loc);
        }
    };
    if (f) add_family(f->poles, false);
    if (lf) {
        add_family(lf->outer.poles, false);
        add_family(lf->inner.poles, true);
    }
    return pts;
}

} // namespace qdiff
